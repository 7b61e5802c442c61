#ifndef SENTI_TFIDF_HPP
#define SENTI_TFIDF_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "senti/text_prep.hpp"
#include "senti/types.hpp"

namespace senti {

struct SparseVector {
    std::vector<int32_t> indices; // strictly increasing, < dim
    std::vector<double> values;   // parallel to indices, non-zero
    int32_t dim = 0;

    double dot_dense(const std::vector<double>& w) const {
        double s = 0;
        for (size_t k = 0; k < indices.size(); ++k)
            s += values[k] * w[static_cast<size_t>(indices[k])];
        return s;
    }
    double l2_norm() const;
};

struct TfidfModel {
    std::map<std::string, int32_t> vocab; // token -> column
    std::vector<double> idf;              // by column
    int32_t max_features = 0;
    int64_t n_docs_fit = 0;

    int32_t dim() const { return static_cast<int32_t>(vocab.size()); }
};

// Vocabulary = the max_features most document-frequent training tokens,
// ties broken lexicographically. idf(t) = ln((1+N)/(1+df(t))) + 1.
TfidfModel tfidf_fit(const std::vector<CleanDocument>& docs, int32_t max_features);

// value(t) = count(t) * idf(t), then L2-normalized. Out-of-vocabulary
// tokens are ignored; a doc with no vocabulary overlap maps to the
// all-zero vector (the one norm exception).
SparseVector tfidf_transform(const TfidfModel& model, const CleanDocument& doc);

// Whole-corpus transform; outputs are independent per doc, so the parallel
// kernel is trivially bit-identical to the serial one.
std::vector<SparseVector> tfidf_transform_corpus(const TfidfModel& model,
                                                 const std::vector<CleanDocument>& docs);
std::vector<SparseVector> tfidf_transform_corpus_serial(const TfidfModel& model,
                                                        const std::vector<CleanDocument>& docs);

} // namespace senti

#endif
