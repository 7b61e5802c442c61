#include "senti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace senti {

int64_t ConfusionMatrix::total() const {
    int64_t t = 0;
    for (const auto& row : counts)
        for (int64_t c : row) t += c;
    return t;
}

int64_t ConfusionMatrix::row_sum(int r) const {
    const auto& row = counts[static_cast<size_t>(r)];
    return row[0] + row[1] + row[2];
}

int64_t ConfusionMatrix::col_sum(int c) const {
    return counts[0][static_cast<size_t>(c)] + counts[1][static_cast<size_t>(c)] +
           counts[2][static_cast<size_t>(c)];
}

int64_t ConfusionMatrix::trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty()) throw Error("confusion: empty inputs");
    if (y_true.size() != y_pred.size()) throw Error("confusion: length mismatch");
    ConfusionMatrix cm;
    for (size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
            throw Error("confusion: class index out of range");
        ++cm.counts[static_cast<size_t>(t)][static_cast<size_t>(p)];
    }
    return cm;
}

EvalReport report(const ConfusionMatrix& cm) {
    EvalReport rep;
    rep.confusion = cm;
    const double total = static_cast<double>(cm.total());
    if (total <= 0) throw Error("report: empty confusion matrix");

    double weighted = 0;
    double macro = 0;
    for (int k = 0; k < kNumClasses; ++k) {
        auto& m = rep.per_class[static_cast<size_t>(k)];
        const double tp = static_cast<double>(cm.counts[static_cast<size_t>(k)][static_cast<size_t>(k)]);
        const double col = static_cast<double>(cm.col_sum(k));
        const double row = static_cast<double>(cm.row_sum(k));
        m.support = cm.row_sum(k);
        m.precision = col > 0 ? tp / col : 0.0;
        m.recall = row > 0 ? tp / row : 0.0;
        m.f1 = (m.precision + m.recall) > 0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        macro += m.f1 / kNumClasses;
        weighted += m.f1 * row / total;
    }
    rep.accuracy = static_cast<double>(cm.trace()) / total;
    rep.macro_f1 = macro;
    rep.weighted_f1 = weighted;

    double pe = 0;
    for (int k = 0; k < kNumClasses; ++k)
        pe += static_cast<double>(cm.row_sum(k)) * static_cast<double>(cm.col_sum(k)) /
              (total * total);
    rep.kappa = pe < 1.0 ? (rep.accuracy - pe) / (1.0 - pe) : 0.0;
    return rep;
}

EvalReport report(const ConfusionMatrix& cm, const std::vector<std::array<double, 3>>& scores,
                  const std::vector<int>& y_true) {
    EvalReport rep = report(cm);
    rep.auc_macro = auc_ovr(scores, y_true);
    return rep;
}

std::optional<double> auc_ovr(const std::vector<std::array<double, 3>>& scores,
                              const std::vector<int>& y_true) {
    if (scores.size() != y_true.size()) throw Error("auc: length mismatch");
    const size_t n = scores.size();
    if (n < 2) throw Error("auc: need at least 2 samples");

    double sum = 0;
    int defined = 0;
    std::vector<size_t> order(n);
    std::vector<double> rank(n);
    for (int k = 0; k < kNumClasses; ++k) {
        int64_t positives = 0;
        for (int t : y_true) positives += (t == k);
        const int64_t negatives = static_cast<int64_t>(n) - positives;
        if (positives == 0 || negatives == 0) continue;

        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return scores[a][static_cast<size_t>(k)] < scores[b][static_cast<size_t>(k)];
        });
        // midranks for tied groups, 1-based
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && scores[order[j + 1]][static_cast<size_t>(k)] ==
                                    scores[order[i]][static_cast<size_t>(k)])
                ++j;
            const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (size_t q = i; q <= j; ++q) rank[order[q]] = mid;
            i = j + 1;
        }
        double rank_pos = 0;
        for (size_t q = 0; q < n; ++q)
            if (y_true[q] == k) rank_pos += rank[q];
        const double m = static_cast<double>(positives);
        const double auc = (rank_pos - m * (m + 1.0) / 2.0) / (m * static_cast<double>(negatives));
        sum += auc;
        ++defined;
    }
    if (defined == 0) return std::nullopt;
    return sum / defined;
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

} // namespace

std::string render_report_text(const EvalReport& rep) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %9s %9s %9s %9s\n", "class", "precision", "recall",
                  "f1-score", "support");
    out += line;
    for (int k = 0; k < kNumClasses; ++k) {
        const auto& m = rep.per_class[static_cast<size_t>(k)];
        std::snprintf(line, sizeof(line), "%-10s %9.2f %9.2f %9.2f %9lld\n",
                      sentiment_name(static_cast<Sentiment>(k)), m.precision, m.recall, m.f1,
                      static_cast<long long>(m.support));
        out += line;
    }
    out += "\n";
    std::snprintf(line, sizeof(line), "%-10s %9.4f\n", "accuracy", rep.accuracy);
    out += line;
    std::snprintf(line, sizeof(line), "%-10s %9.4f\n", "macro f1", rep.macro_f1);
    out += line;
    std::snprintf(line, sizeof(line), "%-10s %9.4f\n", "weighted", rep.weighted_f1);
    out += line;
    std::snprintf(line, sizeof(line), "%-10s %9.4f\n", "kappa", rep.kappa);
    out += line;
    std::snprintf(line, sizeof(line), "%-10s %9s\n", "auc",
                  rep.auc_macro ? fmt("%.4f", *rep.auc_macro).c_str() : "n/a");
    out += line;
    return out;
}

std::string render_report_csv(const EvalReport& rep) {
    std::string out = "class,precision,recall,f1,support\n";
    for (int k = 0; k < kNumClasses; ++k) {
        const auto& m = rep.per_class[static_cast<size_t>(k)];
        out += sentiment_name(static_cast<Sentiment>(k));
        out += "," + fmt("%.6f", m.precision) + "," + fmt("%.6f", m.recall) + "," +
               fmt("%.6f", m.f1) + "," + std::to_string(m.support) + "\n";
    }
    out += "accuracy," + fmt("%.6f", rep.accuracy) + ",,,\n";
    out += "macro_f1," + fmt("%.6f", rep.macro_f1) + ",,,\n";
    out += "weighted_f1," + fmt("%.6f", rep.weighted_f1) + ",,,\n";
    out += "kappa," + fmt("%.6f", rep.kappa) + ",,,\n";
    out += std::string("auc_macro,") + (rep.auc_macro ? fmt("%.6f", *rep.auc_macro) : "n/a") +
           ",,,\n";
    return out;
}

std::string render_confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\pred,negative,neutral,positive\n";
    for (int r = 0; r < kNumClasses; ++r) {
        out += sentiment_name(static_cast<Sentiment>(r));
        for (int c = 0; c < kNumClasses; ++c)
            out += "," + std::to_string(cm.counts[static_cast<size_t>(r)][static_cast<size_t>(c)]);
        out += "\n";
    }
    return out;
}

std::string render_confusion_ppm(const ConfusionMatrix& cm, int cell_px) {
    int64_t max_count = 1;
    for (const auto& row : cm.counts)
        for (int64_t c : row) max_count = std::max(max_count, c);

    const int w = cell_px * 3, h = cell_px * 3;
    std::string img = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    img.reserve(img.size() + static_cast<size_t>(w) * static_cast<size_t>(h) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int r = y / cell_px, c = x / cell_px;
            double t = static_cast<double>(cm.counts[static_cast<size_t>(r)][static_cast<size_t>(c)]) /
                       static_cast<double>(max_count);
            // white (0) to deep blue (1)
            auto ch = [](double v) { return static_cast<char>(std::lround(255.0 * v)); };
            img.push_back(ch(1.0 - 0.85 * t));
            img.push_back(ch(1.0 - 0.60 * t));
            img.push_back(ch(1.0 - 0.15 * t));
        }
    }
    return img;
}

} // namespace senti
