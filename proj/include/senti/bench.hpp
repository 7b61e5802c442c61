#ifndef SENTI_BENCH_HPP
#define SENTI_BENCH_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "senti/corpus.hpp"
#include "senti/metrics.hpp"
#include "senti/model_store.hpp"

namespace senti {

struct PrepAssets {
    SlangLexicon lexicon;
    StopwordList stopwords;
};

// Per-family training configurations used by benchmark/tune; seeds are
// overridden per fold with a value derived from (master seed, fold).
struct FamilyConfigs {
    LogisticConfig logistic;
    SvmConfig svm;
    GbdtConfig gbdt;
    int32_t max_features = 5000;
};

struct LeaderboardRow {
    ModelFamily family;
    std::string model; // display name
    double acc_mean = 0, acc_std = 0;
    std::optional<double> auc_mean, auc_std; // absent for svm_linear
    double rec_mean = 0, rec_std = 0;        // macro recall
    double prec_mean = 0, prec_std = 0;      // macro precision
    double f1_mean = 0, f1_std = 0;          // weighted f1
    double kappa_mean = 0, kappa_std = 0;
    double wall_time_s = 0;
    std::vector<EvalReport> fold_reports;
};

struct BenchmarkRun {
    int cv_k = 10;
    uint64_t seed = 0;
    bool tuned = false;
    std::vector<LeaderboardRow> rows; // sorted by acc_mean descending
};

// Instrumentation hook for the leakage test: the fitted TF-IDF vocabulary
// of each fold (train part only).
struct FoldCapture {
    std::vector<std::vector<std::string>> fold_vocabs;
};

// Stratified k-fold CV of the classical families. Preprocessing runs once;
// TF-IDF is fit per fold on the training rows only. Folds may run in
// parallel; per-fold seeds derive from (seed, fold), so parallel and
// serial schedules agree byte-for-byte on every metric.
BenchmarkRun run_benchmark(const std::vector<LabeledExample>& corpus, const PrepAssets& assets,
                           const std::vector<ModelFamily>& families, int cv_k, uint64_t seed,
                           const FamilyConfigs& cfgs, bool parallel_folds = true,
                           FoldCapture* capture = nullptr);

// Table layout: Model, Accuracy, AUC, Recall, Prec., F1, Kappa, TT (Sec).
std::string render_leaderboard_text(const BenchmarkRun& run);
std::string render_leaderboard_csv(const BenchmarkRun& run);

struct ParamGrid {
    std::map<std::string, std::vector<double>> values;
};

struct TuneSpec {
    ModelFamily family = ModelFamily::gbdt;
    ParamGrid grid;
    int budget = 20;
    int cv_k = 10;
    uint64_t seed = 42;
};

struct TuneTrial {
    std::map<std::string, double> config; // overrides on family defaults
    double macro_f1 = 0;                  // mean over CV folds
    double wall_time_s = 0;
};

struct TuneResult {
    TuneTrial best;
    std::vector<TuneTrial> trials;
};

// Seeded random search over the grid, optimizing mean CV macro-F1. Trial 0
// always evaluates the family defaults so a grid containing them can never
// pick something worse. Ties break on shorter wall time, then the
// lexicographically smaller config.
TuneResult run_tune(const std::vector<LabeledExample>& corpus, const PrepAssets& assets,
                    const TuneSpec& spec, const FamilyConfigs& base);

ParamGrid default_grid(ModelFamily family);
FamilyConfigs apply_overrides(const FamilyConfigs& base, ModelFamily family,
                              const std::map<std::string, double>& overrides);
std::string config_to_string(const std::map<std::string, double>& cfg);

std::string render_tune_text(const TuneSpec& spec, const TuneResult& result);
std::string render_tune_csv(const TuneResult& result);

// Flat key-value config file: `key = value`, '#' comments.
std::map<std::string, std::string> parse_config_file(const std::string& path);
FamilyConfigs configs_from_map(const std::map<std::string, std::string>& kv);

} // namespace senti

#endif
