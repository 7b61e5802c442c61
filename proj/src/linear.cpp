#include "senti/linear.hpp"

#include <cmath>
#include <numeric>

#include "senti/mathutil.hpp"
#include "senti/rng.hpp"

namespace senti {

namespace {

void check_training_set(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y) {
    if (X.empty() || X.size() != y.size()) throw Error("training set empty or inconsistent");
    std::array<int64_t, 3> counts{};
    for (Sentiment s : y) ++counts[static_cast<size_t>(s)];
    for (int k = 0; k < kNumClasses; ++k)
        if (counts[static_cast<size_t>(k)] == 0)
            throw Error(std::string("class '") + sentiment_name(static_cast<Sentiment>(k)) +
                        "' missing from training set");
    for (const auto& x : X)
        if (x.dim != X[0].dim) throw Error("inconsistent feature dimensions");
}

std::array<double, 3> scores_of(const std::vector<double>& W, const std::array<double, 3>& b,
                                int32_t n_features, const SparseVector& x) {
    std::array<double, 3> s{b[0], b[1], b[2]};
    for (size_t j = 0; j < x.indices.size(); ++j) {
        const size_t col = static_cast<size_t>(x.indices[j]);
        const double v = x.values[j];
        for (int k = 0; k < 3; ++k)
            s[static_cast<size_t>(k)] += W[static_cast<size_t>(k) * static_cast<size_t>(n_features) + col] * v;
    }
    return s;
}

double objective_only(const std::vector<double>& W, const std::array<double, 3>& b,
                      int32_t n_features, const std::vector<SparseVector>& X,
                      const std::vector<Sentiment>& y, double l2) {
    double ce = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        auto s = scores_of(W, b, n_features, X[i]);
        ce += logsumexp3(s) - s[static_cast<size_t>(y[i])];
    }
    ce /= static_cast<double>(X.size());
    double reg = 0;
    for (double w : W) reg += w * w;
    return ce + 0.5 * l2 * reg;
}

} // namespace

double logistic_objective_grad(const std::vector<double>& W, const std::array<double, 3>& b,
                               int32_t n_features, const std::vector<SparseVector>& X,
                               const std::vector<Sentiment>& y, double l2,
                               std::vector<double>* grad_W, std::array<double, 3>* grad_b) {
    if (grad_W) grad_W->assign(W.size(), 0.0);
    if (grad_b) grad_b->fill(0.0);
    double ce = 0;
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (size_t i = 0; i < X.size(); ++i) {
        auto s = scores_of(W, b, n_features, X[i]);
        ce += logsumexp3(s) - s[static_cast<size_t>(y[i])];
        if (!grad_W) continue;
        auto p = softmax3(s);
        for (int k = 0; k < 3; ++k) {
            const double err = (p[static_cast<size_t>(k)] -
                                (static_cast<int>(y[i]) == k ? 1.0 : 0.0)) *
                               inv_n;
            for (size_t j = 0; j < X[i].indices.size(); ++j)
                (*grad_W)[static_cast<size_t>(k) * static_cast<size_t>(n_features) +
                          static_cast<size_t>(X[i].indices[j])] += err * X[i].values[j];
            (*grad_b)[static_cast<size_t>(k)] += err;
        }
    }
    ce *= inv_n;
    double reg = 0;
    for (size_t j = 0; j < W.size(); ++j) {
        reg += W[j] * W[j];
        if (grad_W) (*grad_W)[j] += l2 * W[j];
    }
    return ce + 0.5 * l2 * reg;
}

LinearModel fit_logistic(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                         const LogisticConfig& cfg) {
    check_training_set(X, y);
    if (cfg.epochs < 1 || cfg.batch < 1) throw Error("logistic: bad epochs/batch");

    LinearModel model;
    model.kind = LinearKind::logistic;
    model.n_features = X[0].dim;
    model.weights.assign(3 * static_cast<size_t>(model.n_features), 0.0);
    model.bias.fill(0.0);
    model.l2 = cfg.l2;

    const size_t n = X.size();
    const size_t F = static_cast<size_t>(model.n_features);
    std::vector<size_t> idx(n);
    std::vector<double> gW(3 * F);
    std::array<double, 3> gb{};
    double lr = cfg.lr;
    double prev_obj = objective_only(model.weights, model.bias, model.n_features, X, y, cfg.l2);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<double> saved_W = model.weights;
        const std::array<double, 3> saved_b = model.bias;
        bool accepted = false;
        for (int halving = 0; halving <= 5; ++halving) {
            std::iota(idx.begin(), idx.end(), size_t{0});
            SplitMix64 rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch)));
            shuffle(idx, rng);

            for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch)) {
                const size_t stop = std::min(n, start + static_cast<size_t>(cfg.batch));
                const double inv_b = 1.0 / static_cast<double>(stop - start);
                std::fill(gW.begin(), gW.end(), 0.0);
                gb.fill(0.0);
                for (size_t q = start; q < stop; ++q) {
                    const SparseVector& x = X[idx[q]];
                    auto p = softmax3(scores_of(model.weights, model.bias, model.n_features, x));
                    for (int k = 0; k < 3; ++k) {
                        const double err =
                            p[static_cast<size_t>(k)] -
                            (static_cast<int>(y[idx[q]]) == k ? 1.0 : 0.0);
                        for (size_t j = 0; j < x.indices.size(); ++j)
                            gW[static_cast<size_t>(k) * F + static_cast<size_t>(x.indices[j])] +=
                                err * x.values[j];
                        gb[static_cast<size_t>(k)] += err;
                    }
                }
                const double decay = 1.0 - lr * cfg.l2;
                for (size_t j = 0; j < model.weights.size(); ++j)
                    model.weights[j] = model.weights[j] * decay - lr * inv_b * gW[j];
                for (int k = 0; k < 3; ++k)
                    model.bias[static_cast<size_t>(k)] -= lr * inv_b * gb[static_cast<size_t>(k)];
            }

            const double obj =
                objective_only(model.weights, model.bias, model.n_features, X, y, cfg.l2);
            if (std::isfinite(obj) && obj <= prev_obj + 1e-6) {
                prev_obj = obj;
                accepted = true;
                break;
            }
            // Objective went up (or blew up): roll back, halve, retry.
            model.weights = saved_W;
            model.bias = saved_b;
            lr *= 0.5;
        }
        if (!accepted) {
            // Five halvings were not enough; the rollback stands and the
            // objective is unchanged for this epoch.
            lr *= 2.0; // undo the halving of the final, abandoned attempt
        }
        model.training_log.push_back(prev_obj);
    }
    if (!std::isfinite(prev_obj)) throw Error("diverged");
    return model;
}

LinearModel fit_svm(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                    const SvmConfig& cfg) {
    check_training_set(X, y);
    if (cfg.epochs < 1) throw Error("svm: bad epochs");
    if (cfg.l2 <= 0) throw Error("svm: l2 must be positive");

    LinearModel model;
    model.kind = LinearKind::svm_linear;
    model.n_features = X[0].dim;
    model.weights.assign(3 * static_cast<size_t>(model.n_features), 0.0);
    model.bias.fill(0.0);
    model.l2 = cfg.l2;

    const size_t n = X.size();
    const size_t F = static_cast<size_t>(model.n_features);
    std::vector<size_t> idx(n);
    int64_t t = 0;

    // w_k is kept as scale_k * v_k so the per-step (1 - eta*l2) shrink is
    // O(1) instead of O(F).
    std::array<double, 3> scale{1.0, 1.0, 1.0};
    std::array<std::vector<double>, 3> v;
    for (auto& vk : v) vk.assign(F, 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(idx.begin(), idx.end(), size_t{0});
        SplitMix64 rng(mix_seed(cfg.seed, 0x5000 + static_cast<uint64_t>(epoch)));
        shuffle(idx, rng);

        for (size_t q = 0; q < n; ++q) {
            ++t;
            const double eta = pegasos_step_size(cfg.l2, t);
            const double decay = 1.0 - eta * cfg.l2; // == 1 - 1/t
            const SparseVector& x = X[idx[q]];
            for (int k = 0; k < 3; ++k) {
                const size_t ks = static_cast<size_t>(k);
                const double yk = static_cast<int>(y[idx[q]]) == k ? 1.0 : -1.0;
                double dot = 0;
                for (size_t j = 0; j < x.indices.size(); ++j)
                    dot += v[ks][static_cast<size_t>(x.indices[j])] * x.values[j];
                const double margin = yk * (scale[ks] * dot + model.bias[ks]);
                if (decay == 0.0) { // t == 1: the shrink zeroes w entirely
                    std::fill(v[ks].begin(), v[ks].end(), 0.0);
                    scale[ks] = 1.0;
                } else {
                    scale[ks] *= decay;
                }
                if (margin < 1.0) {
                    const double coef = eta * yk / scale[ks];
                    for (size_t j = 0; j < x.indices.size(); ++j)
                        v[ks][static_cast<size_t>(x.indices[j])] += coef * x.values[j];
                    model.bias[ks] += eta * yk;
                }
            }
        }
        for (int k = 0; k < 3; ++k)
            for (size_t j = 0; j < F; ++j)
                model.weights[static_cast<size_t>(k) * F + j] = scale[static_cast<size_t>(k)] * v[static_cast<size_t>(k)][j];

        double hinge = 0;
        for (size_t i = 0; i < n; ++i) {
            auto s = scores_of(model.weights, model.bias, model.n_features, X[i]);
            for (int k = 0; k < 3; ++k) {
                const double yk = static_cast<int>(y[i]) == k ? 1.0 : -1.0;
                hinge += std::max(0.0, 1.0 - yk * s[static_cast<size_t>(k)]);
            }
        }
        double reg = 0;
        for (double w : model.weights) reg += w * w;
        const double obj = hinge / static_cast<double>(n) + 0.5 * cfg.l2 * reg;
        if (!std::isfinite(obj)) throw Error("diverged");
        model.training_log.push_back(obj);
    }
    return model;
}

std::array<double, 3> predict_scores(const LinearModel& model, const SparseVector& x) {
    if (x.dim != model.n_features) throw Error("feature dimension mismatch");
    return scores_of(model.weights, model.bias, model.n_features, x);
}

std::array<double, 3> predict_proba(const LinearModel& model, const SparseVector& x) {
    if (model.kind != LinearKind::logistic)
        throw Error("svm_linear emits no calibrated probabilities");
    return softmax3(predict_scores(model, x));
}

} // namespace senti
