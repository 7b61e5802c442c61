#include "senti/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "senti/mathutil.hpp"
#include "senti/parallel.hpp"

namespace senti {

using gbdt_detail::BestSplit;
using gbdt_detail::BinnedMatrix;
using gbdt_detail::LeafStats;

std::vector<std::vector<double>> build_histograms(const std::vector<SparseVector>& X, int n_bins) {
    if (X.empty()) throw Error("gbdt: no samples");
    if (n_bins < 2 || n_bins > 255) throw Error("gbdt: n_bins must be in [2, 255]");
    const int32_t n_features = X[0].dim;

    std::vector<std::vector<double>> per_feature(static_cast<size_t>(n_features));
    for (const auto& x : X) {
        if (x.dim != n_features) throw Error("gbdt: inconsistent feature dimensions");
        for (size_t j = 0; j < x.indices.size(); ++j)
            per_feature[static_cast<size_t>(x.indices[j])].push_back(x.values[j]);
    }

    std::vector<std::vector<double>> edges(static_cast<size_t>(n_features));
    for (size_t f = 0; f < per_feature.size(); ++f) {
        auto& vals = per_feature[f];
        if (vals.empty()) continue; // all-zero feature: just the zero bin
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        const size_t distinct = vals.size();
        if (distinct <= static_cast<size_t>(n_bins)) {
            edges[f] = vals; // one bin per distinct value
            continue;
        }
        // Equal-frequency cut points over the distinct values; the last
        // edge is the maximum so every fitted value maps inside.
        std::vector<double>& e = edges[f];
        e.reserve(static_cast<size_t>(n_bins));
        for (int b = 1; b <= n_bins; ++b) {
            size_t pos = distinct * static_cast<size_t>(b) / static_cast<size_t>(n_bins);
            double cand = vals[pos == 0 ? 0 : pos - 1];
            if (e.empty() || cand > e.back()) e.push_back(cand);
        }
        if (e.back() < vals.back()) e.push_back(vals.back());
    }
    return edges;
}

int32_t bin_of(const std::vector<double>& edges, double v) {
    if (v == 0.0) return 0;
    auto it = std::lower_bound(edges.begin(), edges.end(), v);
    if (it == edges.end()) return static_cast<int32_t>(edges.size()); // beyond max: last bin
    return static_cast<int32_t>(it - edges.begin()) + 1;
}

namespace gbdt_detail {

BinnedMatrix bin_matrix(const std::vector<SparseVector>& X,
                        const std::vector<std::vector<double>>& bin_edges) {
    BinnedMatrix m;
    m.n_features = static_cast<int32_t>(bin_edges.size());
    m.bins_per_feature.resize(bin_edges.size());
    for (size_t f = 0; f < bin_edges.size(); ++f)
        m.bins_per_feature[f] = static_cast<int32_t>(bin_edges[f].size());
    m.row_ptr.reserve(X.size() + 1);
    m.row_ptr.push_back(0);
    for (const auto& x : X) {
        for (size_t j = 0; j < x.indices.size(); ++j) {
            const auto f = static_cast<size_t>(x.indices[j]);
            const int32_t b = bin_of(bin_edges[f], x.values[j]);
            if (b == 0) continue; // explicit zero in a sparse vector
            m.feat.push_back(x.indices[j]);
            m.bin.push_back(b);
        }
        m.row_ptr.push_back(static_cast<int64_t>(m.feat.size()));
    }
    return m;
}

namespace {

struct BinAcc {
    double g = 0;
    double h = 0;
    int64_t n = 0;
};

double leaf_gain_term(double g, double h, double lambda) { return g * g / (h + lambda); }

// Per-feature candidate scan over the leaf histogram. Enumerates threshold
// t = 0..m with the zero bin routed left then right; strict-greater
// acceptance keeps the (t, default_left) order canonical.
BestSplit scan_feature(int32_t feature, const BinAcc* hist, int32_t m, const LeafStats& leaf,
                       const GbdtConfig& cfg) {
    BestSplit best;
    best.feature = feature;
    BinAcc zero;
    zero.g = leaf.sum_g;
    zero.h = leaf.sum_h;
    zero.n = leaf.count;
    for (int32_t b = 1; b <= m; ++b) {
        zero.g -= hist[b].g;
        zero.h -= hist[b].h;
        zero.n -= hist[b].n;
    }
    const double parent = leaf_gain_term(leaf.sum_g, leaf.sum_h, cfg.l2_leaf);

    BinAcc prefix; // non-zero bins <= t
    for (int32_t t = 0; t <= m; ++t) {
        if (t > 0) {
            prefix.g += hist[t].g;
            prefix.h += hist[t].h;
            prefix.n += hist[t].n;
        }
        for (int zero_left = 1; zero_left >= 0; --zero_left) {
            const double gl = prefix.g + (zero_left ? zero.g : 0.0);
            const double hl = prefix.h + (zero_left ? zero.h : 0.0);
            const int64_t nl = prefix.n + (zero_left ? zero.n : 0);
            const int64_t nr = leaf.count - nl;
            if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
            if (nl == 0 || nr == 0) continue;
            const double gr = leaf.sum_g - gl;
            const double hr = leaf.sum_h - hl;
            const double gain =
                0.5 * (leaf_gain_term(gl, hl, cfg.l2_leaf) + leaf_gain_term(gr, hr, cfg.l2_leaf) -
                       parent);
            if (!best.valid || gain > best.gain) {
                best.valid = true;
                best.gain = gain;
                best.threshold_bin = t;
                best.default_left = (zero_left == 1);
            }
        }
    }
    if (best.valid && best.gain <= 0.0) best.valid = false;
    return best;
}

} // namespace

BestSplit find_best_split(const BinnedMatrix& m, const std::vector<int32_t>& rows,
                          const std::vector<double>& g, const std::vector<double>& h,
                          const LeafStats& stats, const GbdtConfig& cfg, bool parallel) {
    // Flat histogram over (feature, non-zero bin); offsets skip bin 0,
    // which is derived by subtraction in scan_feature.
    std::vector<int64_t> offset(static_cast<size_t>(m.n_features) + 1, 0);
    for (int32_t f = 0; f < m.n_features; ++f)
        offset[static_cast<size_t>(f) + 1] =
            offset[static_cast<size_t>(f)] + m.bins_per_feature[static_cast<size_t>(f)] + 1;
    std::vector<BinAcc> hist(static_cast<size_t>(offset.back()));

    for (int32_t r : rows) {
        const double gr = g[static_cast<size_t>(r)];
        const double hr = h[static_cast<size_t>(r)];
        for (int64_t e = m.row_ptr[static_cast<size_t>(r)]; e < m.row_ptr[static_cast<size_t>(r) + 1]; ++e) {
            BinAcc& acc = hist[static_cast<size_t>(offset[static_cast<size_t>(m.feat[static_cast<size_t>(e)])] +
                                                   m.bin[static_cast<size_t>(e)])];
            acc.g += gr;
            acc.h += hr;
            acc.n += 1;
        }
    }

    std::vector<BestSplit> per_feature(static_cast<size_t>(m.n_features));
    const int nthreads = parallel ? effective_threads(static_cast<size_t>(m.n_features)) : 1;
#pragma omp parallel for schedule(static) num_threads(nthreads) if (parallel)
    for (int32_t f = 0; f < m.n_features; ++f) {
        const int32_t bins = m.bins_per_feature[static_cast<size_t>(f)];
        if (bins == 0) continue; // all-zero feature
        per_feature[static_cast<size_t>(f)] =
            scan_feature(f, hist.data() + offset[static_cast<size_t>(f)], bins, stats, cfg);
    }

    BestSplit best;
    for (int32_t f = 0; f < m.n_features; ++f) {
        const BestSplit& cand = per_feature[static_cast<size_t>(f)];
        if (cand.valid && (!best.valid || cand.gain > best.gain)) best = cand;
    }
    return best;
}

} // namespace gbdt_detail

namespace {

// Bin of `feature` within a binned CSR row (features sorted ascending).
int32_t row_bin(const BinnedMatrix& m, int32_t row, int32_t feature) {
    const int64_t lo = m.row_ptr[static_cast<size_t>(row)];
    const int64_t hi = m.row_ptr[static_cast<size_t>(row) + 1];
    auto begin = m.feat.begin() + lo;
    auto end = m.feat.begin() + hi;
    auto it = std::lower_bound(begin, end, feature);
    if (it == end || *it != feature) return 0;
    return m.bin[static_cast<size_t>(lo + (it - begin))];
}

struct OpenLeaf {
    int32_t node = -1;
    int depth = 0;
    std::vector<int32_t> rows;
    LeafStats stats;
    BestSplit best;
};

LeafStats stats_of(const std::vector<int32_t>& rows, const std::vector<double>& g,
                   const std::vector<double>& h) {
    LeafStats s;
    for (int32_t r : rows) {
        s.sum_g += g[static_cast<size_t>(r)];
        s.sum_h += h[static_cast<size_t>(r)];
    }
    s.count = static_cast<int64_t>(rows.size());
    return s;
}

RegressionTree grow_tree(const BinnedMatrix& m, std::vector<int32_t> root_rows,
                         const std::vector<double>& g, const std::vector<double>& h,
                         const GbdtConfig& cfg, bool parallel) {
    RegressionTree tree;
    tree.nodes.emplace_back();

    auto leaf_value = [&](const LeafStats& s) {
        return -cfg.learning_rate * s.sum_g / (s.sum_h + cfg.l2_leaf);
    };

    std::vector<OpenLeaf> open;
    {
        OpenLeaf root;
        root.node = 0;
        root.depth = 0;
        root.stats = stats_of(root_rows, g, h);
        root.rows = std::move(root_rows);
        root.best = gbdt_detail::find_best_split(m, root.rows, g, h, root.stats, cfg, parallel);
        tree.nodes[0].value = leaf_value(root.stats);
        open.push_back(std::move(root));
    }

    int n_leaves = 1;
    while (n_leaves < cfg.max_leaves) {
        // Best-first: highest gain; ties go to the earliest-created node.
        int pick = -1;
        for (size_t i = 0; i < open.size(); ++i) {
            if (!open[i].best.valid) continue;
            if (cfg.max_depth > 0 && open[i].depth >= cfg.max_depth) continue;
            if (pick < 0 || open[i].best.gain > open[static_cast<size_t>(pick)].best.gain)
                pick = static_cast<int>(i);
        }
        if (pick < 0) break;

        OpenLeaf leaf = std::move(open[static_cast<size_t>(pick)]);
        open.erase(open.begin() + pick);

        OpenLeaf lchild, rchild;
        lchild.depth = rchild.depth = leaf.depth + 1;
        for (int32_t r : leaf.rows) {
            const int32_t b = row_bin(m, r, leaf.best.feature);
            const bool go_left =
                b == 0 ? leaf.best.default_left : (b <= leaf.best.threshold_bin);
            (go_left ? lchild.rows : rchild.rows).push_back(r);
        }
        lchild.stats = stats_of(lchild.rows, g, h);
        rchild.stats = stats_of(rchild.rows, g, h);

        TreeNode& parent = tree.nodes[static_cast<size_t>(leaf.node)];
        parent.is_leaf = false;
        parent.feature = leaf.best.feature;
        parent.threshold_bin = leaf.best.threshold_bin;
        parent.default_left = leaf.best.default_left;
        parent.value = 0;
        parent.left = static_cast<int32_t>(tree.nodes.size());
        parent.right = parent.left + 1;
        lchild.node = parent.left;
        rchild.node = parent.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[static_cast<size_t>(lchild.node)].value = leaf_value(lchild.stats);
        tree.nodes[static_cast<size_t>(rchild.node)].value = leaf_value(rchild.stats);

        lchild.best = gbdt_detail::find_best_split(m, lchild.rows, g, h, lchild.stats, cfg, parallel);
        rchild.best = gbdt_detail::find_best_split(m, rchild.rows, g, h, rchild.stats, cfg, parallel);
        open.push_back(std::move(lchild));
        open.push_back(std::move(rchild));
        ++n_leaves;
    }
    return tree;
}

// Leaf index for a row already binned into the training matrix.
int32_t route_binned(const RegressionTree& tree, const BinnedMatrix& m, int32_t row) {
    int32_t node = 0;
    while (!tree.nodes[static_cast<size_t>(node)].is_leaf) {
        const TreeNode& nd = tree.nodes[static_cast<size_t>(node)];
        const int32_t b = row_bin(m, row, nd.feature);
        node = (b == 0 ? nd.default_left : (b <= nd.threshold_bin)) ? nd.left : nd.right;
    }
    return node;
}

} // namespace

int RegressionTree::n_leaves() const {
    int n = 0;
    for (const auto& nd : nodes) n += nd.is_leaf;
    return n;
}

int32_t RegressionTree::route(const SparseVector& x,
                              const std::vector<std::vector<double>>& bin_edges) const {
    int32_t node = 0;
    while (!nodes[static_cast<size_t>(node)].is_leaf) {
        const TreeNode& nd = nodes[static_cast<size_t>(node)];
        double v = 0;
        auto it = std::lower_bound(x.indices.begin(), x.indices.end(), nd.feature);
        if (it != x.indices.end() && *it == nd.feature)
            v = x.values[static_cast<size_t>(it - x.indices.begin())];
        const int32_t b = bin_of(bin_edges[static_cast<size_t>(nd.feature)], v);
        node = (b == 0 ? nd.default_left : (b <= nd.threshold_bin)) ? nd.left : nd.right;
    }
    return node;
}

double RegressionTree::predict(const SparseVector& x,
                               const std::vector<std::vector<double>>& bin_edges) const {
    return nodes[static_cast<size_t>(route(x, bin_edges))].value;
}

GbdtModel gbdt_fit(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                   const GbdtConfig& cfg) {
    if (X.empty() || X.size() != y.size()) throw Error("gbdt: empty or inconsistent training set");
    if (cfg.n_rounds < 1) throw Error("gbdt: n_rounds must be >= 1");
    if (cfg.max_leaves < 2) throw Error("gbdt: max_leaves must be >= 2");
    if (cfg.learning_rate <= 0 || cfg.learning_rate > 1) throw Error("gbdt: learning_rate in (0,1]");
    std::array<int64_t, 3> counts{};
    for (Sentiment s : y) ++counts[static_cast<size_t>(s)];
    for (int k = 0; k < kNumClasses; ++k)
        if (counts[static_cast<size_t>(k)] == 0)
            throw Error(std::string("class '") + sentiment_name(static_cast<Sentiment>(k)) +
                        "' missing from training set");

    GbdtModel model;
    model.config = cfg;
    model.bin_edges = build_histograms(X, cfg.n_bins);
    const BinnedMatrix m = gbdt_detail::bin_matrix(X, model.bin_edges);

    const size_t n = X.size();
    const bool parallel = true;
    std::vector<std::array<double, 3>> scores(n, {0, 0, 0});
    std::vector<double> g(n), h(n);
    std::vector<int32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    std::vector<std::array<double, 3>> probs(n);
    for (int round = 0; round < cfg.n_rounds; ++round) {
        // One probability snapshot per round; all three class trees are
        // built from it.
        for (size_t i = 0; i < n; ++i) probs[i] = softmax3(scores[i]);
        for (int k = 0; k < kNumClasses; ++k) {
            for (size_t i = 0; i < n; ++i) {
                const double pk = probs[i][static_cast<size_t>(k)];
                g[i] = pk - (static_cast<int>(y[i]) == k ? 1.0 : 0.0);
                h[i] = pk * (1.0 - pk);
            }
            RegressionTree tree = grow_tree(m, all_rows, g, h, cfg, parallel);
            for (size_t i = 0; i < n; ++i)
                scores[i][static_cast<size_t>(k)] +=
                    tree.nodes[static_cast<size_t>(route_binned(tree, m, static_cast<int32_t>(i)))]
                        .value;
            model.trees.push_back(std::move(tree));
        }
        double loss = 0;
        for (size_t i = 0; i < n; ++i)
            loss += logsumexp3(scores[i]) - scores[i][static_cast<size_t>(y[i])];
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) throw Error("diverged");
        model.training_log.push_back(loss);
    }
    return model;
}

std::array<double, 3> gbdt_predict_scores(const GbdtModel& model, const SparseVector& x) {
    std::array<double, 3> s{0, 0, 0};
    for (size_t i = 0; i < model.trees.size(); ++i)
        s[i % 3] += model.trees[i].predict(x, model.bin_edges);
    return s;
}

std::array<double, 3> gbdt_predict_proba(const GbdtModel& model, const SparseVector& x) {
    return softmax3(gbdt_predict_scores(model, x));
}

} // namespace senti
