#ifndef SENTI_GBDT_HPP
#define SENTI_GBDT_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "senti/tfidf.hpp"
#include "senti/types.hpp"

namespace senti {

struct GbdtConfig {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int min_samples_leaf = 20;
    // Cap on quantile bins for the non-zero values of a feature; the
    // dedicated zero bin is on top of this, so total bins fit in a byte
    // at the 255 maximum.
    int n_bins = 255;
    double l2_leaf = 1.0;
    int max_depth = 0; // 0 = unlimited; constrains the leaf-wise growth
    uint64_t seed = 42;
};

struct TreeNode {
    bool is_leaf = true;
    int32_t feature = -1;
    int32_t threshold_bin = 0; // non-zero bins <= threshold_bin go left
    bool default_left = true;  // direction for zero-valued samples
    int32_t left = -1;
    int32_t right = -1;
    double value = 0; // leaf output, already scaled by learning_rate
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    int n_leaves() const;
    // Index of the leaf a sample lands in, given per-feature bin edges.
    int32_t route(const SparseVector& x, const std::vector<std::vector<double>>& bin_edges) const;
    double predict(const SparseVector& x, const std::vector<std::vector<double>>& bin_edges) const;
};

struct GbdtModel {
    std::vector<RegressionTree> trees; // 3 per completed round, class-major within round
    std::vector<std::vector<double>> bin_edges; // per feature, strictly increasing
    GbdtConfig config;
    std::vector<double> training_log; // per-round multiclass log-loss

    int rounds_completed() const { return static_cast<int>(trees.size()) / 3; }
};

// Per-feature quantile bin edges over the non-zero values (upper-inclusive
// boundaries); zero values occupy their own bin. An all-zero feature gets
// an empty edge list and can never split.
std::vector<std::vector<double>> build_histograms(const std::vector<SparseVector>& X, int n_bins);

// Bin index of value v: 0 for zero, else 1 + first edge >= v, clamped to
// the last bin for values beyond the fitted maximum.
int32_t bin_of(const std::vector<double>& edges, double v);

// Multiclass softmax boosting: per round, g = p - 1[y=k], h = p(1-p) per
// class, one leaf-wise tree per class. Split gain is
// 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)); splits with gain <= 0 or a
// child below min_samples_leaf are rejected; per split the zero bin's side
// is chosen by trying both. Leaf value is -lr*G/(H+l).
GbdtModel gbdt_fit(const std::vector<SparseVector>& X, const std::vector<Sentiment>& y,
                   const GbdtConfig& cfg);

std::array<double, 3> gbdt_predict_scores(const GbdtModel& model, const SparseVector& x);
std::array<double, 3> gbdt_predict_proba(const GbdtModel& model, const SparseVector& x);

namespace gbdt_detail {

struct BestSplit {
    double gain = 0;
    int32_t feature = -1;
    int32_t threshold_bin = 0;
    bool default_left = true;
    bool valid = false;
};

struct LeafStats {
    double sum_g = 0;
    double sum_h = 0;
    int64_t count = 0;
};

// Best split over all features of one leaf. `parallel` toggles the
// per-feature OpenMP path; both paths reduce feature candidates in
// ascending feature order with strict-greater acceptance, so the result
// is bit-identical either way.
struct BinnedMatrix {
    int32_t n_features = 0;
    std::vector<int64_t> row_ptr;
    std::vector<int32_t> feat;
    std::vector<int32_t> bin;
    std::vector<int32_t> bins_per_feature; // non-zero bin count m_f
};

BinnedMatrix bin_matrix(const std::vector<SparseVector>& X,
                        const std::vector<std::vector<double>>& bin_edges);

BestSplit find_best_split(const BinnedMatrix& m, const std::vector<int32_t>& rows,
                          const std::vector<double>& g, const std::vector<double>& h,
                          const LeafStats& stats, const GbdtConfig& cfg, bool parallel);

} // namespace gbdt_detail

} // namespace senti

#endif
