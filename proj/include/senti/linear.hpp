#ifndef SENTI_LINEAR_HPP
#define SENTI_LINEAR_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "senti/tfidf.hpp"
#include "senti/types.hpp"

namespace senti {

enum class LinearKind : int { logistic = 0, svm_linear = 1 };

struct LinearModel {
    LinearKind kind = LinearKind::logistic;
    int32_t n_features = 0;
    std::vector<double> weights; // 3 x n_features, row-major by class
    std::array<double, 3> bias{};
    double l2 = 0;
    std::vector<double> training_log; // per-epoch objective

    double& w(int cls, int32_t feat) {
        return weights[static_cast<size_t>(cls) * static_cast<size_t>(n_features) +
                       static_cast<size_t>(feat)];
    }
    double w(int cls, int32_t feat) const {
        return weights[static_cast<size_t>(cls) * static_cast<size_t>(n_features) +
                       static_cast<size_t>(feat)];
    }
};

struct LogisticConfig {
    double lr = 0.1;
    double l2 = 1e-4;
    int epochs = 50;
    int batch = 32;
    uint64_t seed = 42;
};

struct SvmConfig {
    double l2 = 1e-4;
    int epochs = 100;
    uint64_t seed = 42;
};

// Multinomial logistic regression by mini-batch gradient descent on
// mean softmax cross-entropy + (l2/2)*||W||^2 (bias unregularized).
// The logged objective is non-increasing across epochs within 1e-6; an
// epoch that increases it is rolled back and retried at half the learning
// rate, at most 5 times, after which the rollback stands.
LinearModel fit_logistic(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                         const LogisticConfig& cfg);

// One-vs-rest L2-regularized hinge loss, Pegasos stochastic subgradient
// with step size exactly 1/(l2*t) at update t. Bias is unregularized.
LinearModel fit_svm(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                    const SvmConfig& cfg);

inline double pegasos_step_size(double l2, int64_t t) {
    return 1.0 / (l2 * static_cast<double>(t));
}

// W*x + b.
std::array<double, 3> predict_scores(const LinearModel& model, const SparseVector& x);

// Softmax over the scores; logistic models only.
std::array<double, 3> predict_proba(const LinearModel& model, const SparseVector& x);

// Full-batch objective and gradient of the logistic loss, used both by the
// trainer and by the finite-difference gradient test.
double logistic_objective_grad(const std::vector<double>& W, const std::array<double, 3>& b,
                               int32_t n_features, const std::vector<SparseVector>& X,
                               const std::vector<Sentiment>& y, double l2,
                               std::vector<double>* grad_W, std::array<double, 3>* grad_b);

} // namespace senti

#endif
