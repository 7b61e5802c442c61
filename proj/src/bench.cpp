#include "senti/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "senti/mathutil.hpp"
#include "senti/parallel.hpp"
#include "senti/rng.hpp"

namespace senti {

namespace {

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* display_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::logistic: return "Logistic Regression";
        case ModelFamily::svm_linear: return "SVM (Linear)";
        case ModelFamily::gbdt: return "GBDT";
        case ModelFamily::bilstm: return "BiLSTM";
    }
    return "?";
}

struct FoldData {
    std::vector<CleanDocument> train_docs, test_docs;
    std::vector<Sentiment> train_y, test_y;
};

FoldData split_fold(const std::vector<CleanDocument>& docs, const std::vector<Sentiment>& labels,
                    const FoldPlan& plan, int fold) {
    FoldData fd;
    for (size_t i = 0; i < docs.size(); ++i) {
        const int assigned = plan.assignments.at(static_cast<int64_t>(i));
        if (assigned == fold) {
            fd.test_docs.push_back(docs[i]);
            fd.test_y.push_back(labels[i]);
        } else {
            fd.train_docs.push_back(docs[i]);
            fd.train_y.push_back(labels[i]);
        }
    }
    return fd;
}

// One family on one fold: fit TF-IDF on the fold's training rows only,
// train, evaluate on the held-out rows.
EvalReport eval_fold(ModelFamily family, const FoldData& fd, const FamilyConfigs& cfgs,
                     uint64_t fold_seed, std::vector<std::string>* vocab_capture) {
    const auto t0 = std::chrono::steady_clock::now();
    TfidfModel tfidf = tfidf_fit(fd.train_docs, cfgs.max_features);
    if (vocab_capture) {
        vocab_capture->clear();
        for (const auto& [tok, col] : tfidf.vocab) vocab_capture->push_back(tok);
    }
    std::vector<SparseVector> X_train = tfidf_transform_corpus_serial(tfidf, fd.train_docs);
    std::vector<SparseVector> X_test = tfidf_transform_corpus_serial(tfidf, fd.test_docs);

    std::vector<int> y_true, y_pred;
    y_true.reserve(fd.test_y.size());
    for (Sentiment s : fd.test_y) y_true.push_back(static_cast<int>(s));
    std::vector<std::array<double, 3>> probs;
    bool have_probs = false;

    switch (family) {
        case ModelFamily::logistic: {
            LogisticConfig cfg = cfgs.logistic;
            cfg.seed = fold_seed;
            LinearModel m = fit_logistic(X_train, fd.train_y, cfg);
            for (const auto& x : X_test) probs.push_back(predict_proba(m, x));
            have_probs = true;
            break;
        }
        case ModelFamily::svm_linear: {
            SvmConfig cfg = cfgs.svm;
            cfg.seed = fold_seed;
            LinearModel m = fit_svm(X_train, fd.train_y, cfg);
            for (const auto& x : X_test) probs.push_back(predict_scores(m, x));
            break;
        }
        case ModelFamily::gbdt: {
            GbdtConfig cfg = cfgs.gbdt;
            cfg.seed = fold_seed;
            GbdtModel m = gbdt_fit(X_train, fd.train_y, cfg);
            for (const auto& x : X_test) probs.push_back(gbdt_predict_proba(m, x));
            have_probs = true;
            break;
        }
        case ModelFamily::bilstm:
            throw Error("bilstm is trained on the held-out split, not in the CV benchmark");
    }
    y_pred.reserve(probs.size());
    for (const auto& p : probs) y_pred.push_back(argmax3(p));

    EvalReport rep = have_probs ? report(confusion(y_true, y_pred), probs, y_true)
                                : report(confusion(y_true, y_pred));
    if (!have_probs) rep.auc_macro.reset(); // svm: no calibrated probabilities
    rep.wall_time_s = elapsed_s(t0);
    return rep;
}

struct Agg {
    double mean = 0, stdev = 0;
};

Agg aggregate(const std::vector<double>& xs) {
    Agg a;
    if (xs.empty()) return a;
    a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double sq = 0;
        for (double x : xs) sq += (x - a.mean) * (x - a.mean);
        a.stdev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
    }
    return a;
}

double macro_recall(const EvalReport& r) {
    return (r.per_class[0].recall + r.per_class[1].recall + r.per_class[2].recall) / 3.0;
}
double macro_precision(const EvalReport& r) {
    return (r.per_class[0].precision + r.per_class[1].precision + r.per_class[2].precision) / 3.0;
}

std::string fmtd(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

} // namespace

BenchmarkRun run_benchmark(const std::vector<LabeledExample>& corpus, const PrepAssets& assets,
                           const std::vector<ModelFamily>& families, int cv_k, uint64_t seed,
                           const FamilyConfigs& cfgs, bool parallel_folds, FoldCapture* capture) {
    BenchmarkRun run;
    run.cv_k = cv_k;
    run.seed = seed;

    const std::vector<CleanDocument> docs = preprocess_corpus(corpus, assets.lexicon, assets.stopwords);
    std::vector<Sentiment> labels;
    std::vector<int64_t> ids;
    labels.reserve(corpus.size());
    ids.reserve(corpus.size());
    for (const auto& ex : corpus) {
        ids.push_back(ex.id);
        labels.push_back(ex.label);
    }
    const FoldPlan plan = make_folds(ids, labels, cv_k, seed);
    if (capture) capture->fold_vocabs.assign(static_cast<size_t>(cv_k), {});

    bool first_family = true;
    for (ModelFamily family : families) {
        LeaderboardRow row;
        row.family = family;
        row.model = display_name(family);
        row.fold_reports.resize(static_cast<size_t>(cv_k));

        const auto t0 = std::chrono::steady_clock::now();
        const int nthreads = parallel_folds ? effective_threads(static_cast<size_t>(cv_k)) : 1;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads) if (parallel_folds)
        for (int f = 0; f < cv_k; ++f) {
            FoldData fd = split_fold(docs, labels, plan, f);
            std::vector<std::string>* cap =
                (capture && first_family) ? &capture->fold_vocabs[static_cast<size_t>(f)] : nullptr;
            row.fold_reports[static_cast<size_t>(f)] =
                eval_fold(family, fd, cfgs, mix_seed(seed, static_cast<uint64_t>(f)), cap);
        }
        row.wall_time_s = elapsed_s(t0);

        std::vector<double> acc, auc, rec, prec, f1, kappa;
        for (const auto& r : row.fold_reports) {
            acc.push_back(r.accuracy);
            if (r.auc_macro) auc.push_back(*r.auc_macro);
            rec.push_back(macro_recall(r));
            prec.push_back(macro_precision(r));
            f1.push_back(r.weighted_f1);
            kappa.push_back(r.kappa);
        }
        auto a = aggregate(acc);
        row.acc_mean = a.mean;
        row.acc_std = a.stdev;
        if (auc.size() == acc.size()) {
            auto g = aggregate(auc);
            row.auc_mean = g.mean;
            row.auc_std = g.stdev;
        }
        auto rr = aggregate(rec);
        row.rec_mean = rr.mean;
        row.rec_std = rr.stdev;
        auto pp = aggregate(prec);
        row.prec_mean = pp.mean;
        row.prec_std = pp.stdev;
        auto ff = aggregate(f1);
        row.f1_mean = ff.mean;
        row.f1_std = ff.stdev;
        auto kk = aggregate(kappa);
        row.kappa_mean = kk.mean;
        row.kappa_std = kk.stdev;

        run.rows.push_back(std::move(row));
        first_family = false;
    }

    std::stable_sort(run.rows.begin(), run.rows.end(), [](const auto& a, const auto& b) {
        if (a.acc_mean != b.acc_mean) return a.acc_mean > b.acc_mean;
        return a.model < b.model;
    });
    return run;
}

std::string render_leaderboard_text(const BenchmarkRun& run) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-20s %9s %9s %9s %9s %9s %9s %10s\n", "Model", "Accuracy",
                  "AUC", "Recall", "Prec.", "F1", "Kappa", "TT (Sec)");
    out += line;
    for (const auto& r : run.rows) {
        std::snprintf(line, sizeof(line), "%-20s %9.4f %9s %9.4f %9.4f %9.4f %9.4f %10.3f\n",
                      r.model.c_str(), r.acc_mean,
                      r.auc_mean ? fmtd("%.4f", *r.auc_mean).c_str() : "n/a", r.rec_mean,
                      r.prec_mean, r.f1_mean, r.kappa_mean, r.wall_time_s);
        out += line;
    }
    return out;
}

std::string render_leaderboard_csv(const BenchmarkRun& run) {
    std::string out =
        "model,accuracy_mean,accuracy_std,auc_mean,auc_std,recall_mean,recall_std,"
        "precision_mean,precision_std,f1_mean,f1_std,kappa_mean,kappa_std,tt_sec\n";
    for (const auto& r : run.rows) {
        out += r.model;
        out += "," + fmtd("%.6f", r.acc_mean) + "," + fmtd("%.6f", r.acc_std);
        if (r.auc_mean)
            out += "," + fmtd("%.6f", *r.auc_mean) + "," + fmtd("%.6f", *r.auc_std);
        else
            out += ",n/a,n/a";
        out += "," + fmtd("%.6f", r.rec_mean) + "," + fmtd("%.6f", r.rec_std);
        out += "," + fmtd("%.6f", r.prec_mean) + "," + fmtd("%.6f", r.prec_std);
        out += "," + fmtd("%.6f", r.f1_mean) + "," + fmtd("%.6f", r.f1_std);
        out += "," + fmtd("%.6f", r.kappa_mean) + "," + fmtd("%.6f", r.kappa_std);
        out += "," + fmtd("%.3f", r.wall_time_s) + "\n";
    }
    return out;
}

// --- tuning -----------------------------------------------------------------

ParamGrid default_grid(ModelFamily family) {
    ParamGrid g;
    switch (family) {
        case ModelFamily::logistic:
            g.values["lr"] = {0.01, 0.03, 0.1, 0.3};
            g.values["l2"] = {1e-5, 1e-4, 1e-3};
            break;
        case ModelFamily::svm_linear:
            g.values["l2"] = {1e-5, 1e-4, 1e-3, 1e-2};
            break;
        case ModelFamily::gbdt:
            g.values["learning_rate"] = {0.05, 0.1, 0.2};
            g.values["l2_leaf"] = {0.1, 1.0, 10.0};
            g.values["max_depth"] = {0, 4, 6, 8};
            break;
        case ModelFamily::bilstm:
            throw Error("tuning covers the classical families only");
    }
    return g;
}

FamilyConfigs apply_overrides(const FamilyConfigs& base, ModelFamily family,
                              const std::map<std::string, double>& overrides) {
    FamilyConfigs out = base;
    for (const auto& [key, value] : overrides) {
        bool known = true;
        if (family == ModelFamily::logistic) {
            if (key == "lr") out.logistic.lr = value;
            else if (key == "l2") out.logistic.l2 = value;
            else if (key == "epochs") out.logistic.epochs = static_cast<int>(value);
            else if (key == "batch") out.logistic.batch = static_cast<int>(value);
            else known = false;
        } else if (family == ModelFamily::svm_linear) {
            if (key == "l2") out.svm.l2 = value;
            else if (key == "epochs") out.svm.epochs = static_cast<int>(value);
            else known = false;
        } else if (family == ModelFamily::gbdt) {
            if (key == "learning_rate") out.gbdt.learning_rate = value;
            else if (key == "l2_leaf") out.gbdt.l2_leaf = value;
            else if (key == "max_depth") out.gbdt.max_depth = static_cast<int>(value);
            else if (key == "max_leaves") out.gbdt.max_leaves = static_cast<int>(value);
            else if (key == "n_rounds") out.gbdt.n_rounds = static_cast<int>(value);
            else if (key == "min_samples_leaf") out.gbdt.min_samples_leaf = static_cast<int>(value);
            else known = false;
        } else {
            known = false;
        }
        if (!known) throw Error("unknown tuning parameter '" + key + "'");
    }
    return out;
}

std::string config_to_string(const std::map<std::string, double>& cfg) {
    std::string s;
    for (const auto& [k, v] : cfg) {
        if (!s.empty()) s += ",";
        s += k + "=" + fmtd("%.8g", v);
    }
    return s.empty() ? "defaults" : s;
}

TuneResult run_tune(const std::vector<LabeledExample>& corpus, const PrepAssets& assets,
                    const TuneSpec& spec, const FamilyConfigs& base) {
    if (spec.budget < 1) throw Error("tune: budget must be >= 1");
    if (spec.grid.values.empty()) throw Error("tune: empty grid");
    for (const auto& [k, vs] : spec.grid.values)
        if (vs.empty()) throw Error("tune: empty grid for parameter '" + k + "'");

    TuneResult result;
    for (int trial = 0; trial < spec.budget; ++trial) {
        TuneTrial t;
        if (trial > 0) { // trial 0 = family defaults
            SplitMix64 rng(mix_seed(spec.seed, 0x7000 + static_cast<uint64_t>(trial)));
            for (const auto& [key, values] : spec.grid.values)
                t.config[key] = values[static_cast<size_t>(rng.below(values.size()))];
        }
        const FamilyConfigs cfgs = apply_overrides(base, spec.family, t.config);
        const auto t0 = std::chrono::steady_clock::now();
        BenchmarkRun run =
            run_benchmark(corpus, assets, {spec.family}, spec.cv_k, spec.seed, cfgs, true);
        t.wall_time_s = elapsed_s(t0);
        double f1 = 0;
        for (const auto& r : run.rows[0].fold_reports) f1 += r.macro_f1;
        t.macro_f1 = f1 / static_cast<double>(run.rows[0].fold_reports.size());
        result.trials.push_back(std::move(t));
    }

    const TuneTrial* best = &result.trials[0];
    for (const auto& t : result.trials) {
        if (t.macro_f1 > best->macro_f1) {
            best = &t;
        } else if (t.macro_f1 == best->macro_f1) {
            if (t.wall_time_s < best->wall_time_s ||
                (t.wall_time_s == best->wall_time_s &&
                 config_to_string(t.config) < config_to_string(best->config)))
                best = &t;
        }
    }
    result.best = *best;
    return result;
}

std::string render_tune_text(const TuneSpec& spec, const TuneResult& result) {
    std::string out;
    out += std::string("family: ") + family_name(spec.family) + "\n";
    out += "budget: " + std::to_string(spec.budget) + "\n";
    out += "cv_k: " + std::to_string(spec.cv_k) + "\n";
    out += "best_config: " + config_to_string(result.best.config) + "\n";
    out += "best_cv_macro_f1: " + fmtd("%.6f", result.best.macro_f1) + "\n";
    return out;
}

std::string render_tune_csv(const TuneResult& result) {
    std::string out = "trial,config,cv_macro_f1,wall_time_s\n";
    for (size_t i = 0; i < result.trials.size(); ++i) {
        const auto& t = result.trials[i];
        out += std::to_string(i) + ",\"" + config_to_string(t.config) + "\"," +
               fmtd("%.6f", t.macro_f1) + "," + fmtd("%.3f", t.wall_time_s) + "\n";
    }
    return out;
}

// --- config file ------------------------------------------------------------

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    size_t lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        s.erase(0, s.find_first_not_of(ws));
        const size_t last = s.find_last_not_of(ws);
        s.erase(last == std::string::npos ? 0 : last + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(lineno) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

FamilyConfigs configs_from_map(const std::map<std::string, std::string>& kv) {
    FamilyConfigs c;
    auto getd = [&](const char* key, double& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = std::stod(it->second);
    };
    auto geti = [&](const char* key, int& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = std::stoi(it->second);
    };
    auto geti32 = [&](const char* key, int32_t& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = static_cast<int32_t>(std::stoi(it->second));
    };
    geti32("tfidf.max_features", c.max_features);
    getd("logistic.lr", c.logistic.lr);
    getd("logistic.l2", c.logistic.l2);
    geti("logistic.epochs", c.logistic.epochs);
    geti("logistic.batch", c.logistic.batch);
    getd("svm.l2", c.svm.l2);
    geti("svm.epochs", c.svm.epochs);
    geti("gbdt.n_rounds", c.gbdt.n_rounds);
    getd("gbdt.learning_rate", c.gbdt.learning_rate);
    geti("gbdt.max_leaves", c.gbdt.max_leaves);
    geti("gbdt.min_samples_leaf", c.gbdt.min_samples_leaf);
    geti("gbdt.n_bins", c.gbdt.n_bins);
    getd("gbdt.l2_leaf", c.gbdt.l2_leaf);
    geti("gbdt.max_depth", c.gbdt.max_depth);
    return c;
}

} // namespace senti
