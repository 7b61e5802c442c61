#ifndef SENTI_METRICS_HPP
#define SENTI_METRICS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "senti/types.hpp"

namespace senti {

struct ConfusionMatrix {
    // rows = true class, columns = predicted class
    std::array<std::array<int64_t, 3>, 3> counts{};

    int64_t total() const;
    int64_t row_sum(int r) const;
    int64_t col_sum(int c) const;
    int64_t trace() const;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int64_t support = 0;
};

struct EvalReport {
    std::array<ClassMetrics, 3> per_class{};
    double accuracy = 0;
    double macro_f1 = 0;
    double weighted_f1 = 0;
    double kappa = 0;
    std::optional<double> auc_macro; // absent -> rendered "n/a"
    ConfusionMatrix confusion;
    double wall_time_s = 0;
};

// Zero-division convention: precision/recall/F1 are 0 where the denominator
// is 0; kappa is 0 when expected agreement is 1.
EvalReport report(const ConfusionMatrix& cm);
EvalReport report(const ConfusionMatrix& cm, const std::vector<std::array<double, 3>>& scores,
                  const std::vector<int>& y_true);

// One-vs-rest macro AUC. Per class: Mann-Whitney rank AUC over that class's
// score column, midranks for ties. Classes without both positives and
// negatives are skipped; nullopt when every class is skipped.
std::optional<double> auc_ovr(const std::vector<std::array<double, 3>>& scores,
                              const std::vector<int>& y_true);

// Renderings. The text report follows the per-class layout
// class/precision/recall/f1/support; CSV carries full precision.
std::string render_report_text(const EvalReport& rep);
std::string render_report_csv(const EvalReport& rep);
std::string render_confusion_csv(const ConfusionMatrix& cm);

// Blue-to-red 3x3 heatmap as a binary PPM raster.
std::string render_confusion_ppm(const ConfusionMatrix& cm, int cell_px = 64);

} // namespace senti

#endif
