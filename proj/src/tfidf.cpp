#include "senti/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "senti/parallel.hpp"

namespace senti {

double SparseVector::l2_norm() const {
    double s = 0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

TfidfModel tfidf_fit(const std::vector<CleanDocument>& docs, int32_t max_features) {
    if (docs.empty()) throw Error("tfidf: no documents");
    if (max_features < 1) throw Error("tfidf: max_features must be >= 1");

    std::unordered_map<std::string, int64_t> df;
    std::vector<std::string> uniq;
    for (const auto& doc : docs) {
        uniq.assign(doc.tokens.begin(), doc.tokens.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& tok : uniq) ++df[tok];
    }
    if (df.empty()) throw Error("tfidf: empty vocabulary");

    // Highest document frequency first; equal-df ties go to the
    // lexicographically smaller token.
    std::vector<std::pair<std::string, int64_t>> ranked(df.begin(), df.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    size_t keep = std::min<size_t>(ranked.size(), static_cast<size_t>(max_features));
    ranked.resize(keep);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    TfidfModel model;
    model.max_features = max_features;
    model.n_docs_fit = static_cast<int64_t>(docs.size());
    model.idf.resize(keep);
    const double n = static_cast<double>(docs.size());
    for (size_t col = 0; col < keep; ++col) {
        model.vocab.emplace(ranked[col].first, static_cast<int32_t>(col));
        model.idf[col] = std::log((1.0 + n) / (1.0 + static_cast<double>(ranked[col].second))) + 1.0;
    }
    return model;
}

SparseVector tfidf_transform(const TfidfModel& model, const CleanDocument& doc) {
    std::map<int32_t, int64_t> counts;
    for (const auto& tok : doc.tokens) {
        auto it = model.vocab.find(tok);
        if (it != model.vocab.end()) ++counts[it->second];
    }
    SparseVector v;
    v.dim = model.dim();
    v.indices.reserve(counts.size());
    v.values.reserve(counts.size());
    double sq = 0;
    for (const auto& [col, cnt] : counts) {
        double w = static_cast<double>(cnt) * model.idf[static_cast<size_t>(col)];
        v.indices.push_back(col);
        v.values.push_back(w);
        sq += w * w;
    }
    if (sq > 0) {
        double inv = 1.0 / std::sqrt(sq);
        for (double& w : v.values) w *= inv;
    }
    return v;
}

std::vector<SparseVector> tfidf_transform_corpus_serial(const TfidfModel& model,
                                                        const std::vector<CleanDocument>& docs) {
    std::vector<SparseVector> out(docs.size());
    for (size_t i = 0; i < docs.size(); ++i) out[i] = tfidf_transform(model, docs[i]);
    return out;
}

std::vector<SparseVector> tfidf_transform_corpus(const TfidfModel& model,
                                                 const std::vector<CleanDocument>& docs) {
    std::vector<SparseVector> out(docs.size());
    const int nthreads = effective_threads(docs.size());
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (int64_t i = 0; i < static_cast<int64_t>(docs.size()); ++i)
        out[static_cast<size_t>(i)] = tfidf_transform(model, docs[static_cast<size_t>(i)]);
    return out;
}

} // namespace senti
