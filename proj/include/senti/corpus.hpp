#ifndef SENTI_CORPUS_HPP
#define SENTI_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "senti/types.hpp"

namespace senti {

enum class CorpusFormat { csv, jsonl };

struct LoadOptions {
    std::string text_field = "comment";
    std::string label_field = "sentiment";
};

// Reads a labeled corpus in file order, assigning sequential ids from 0.
// Label strings match the three classes case-insensitively. Extra columns
// are kept in LabeledExample::metadata and never reach any model.
std::vector<LabeledExample> load_corpus(const std::string& path, CorpusFormat format,
                                        const LoadOptions& opts = {});

struct DatasetSplit {
    std::vector<int64_t> train;
    std::vector<int64_t> validation;
    std::vector<int64_t> test;
    uint64_t seed = 0;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
};

// Shuffle-then-allocate per class (splitmix64 PRNG) with largest-remainder
// rounding of the per-class quotas, which bounds the per-class deviation
// from exact proportionality at 1 example per part.
DatasetSplit stratified_split(const std::vector<LabeledExample>& corpus,
                              const std::array<double, 3>& ratios, uint64_t seed);

struct FoldPlan {
    int k = 0;
    std::map<int64_t, int> assignments; // id -> fold in [0, k)
    uint64_t seed = 0;
};

// Stratified k-fold assignment: per class, shuffle then deal round-robin,
// so per-class counts across folds differ by at most 1.
FoldPlan make_folds(const std::vector<int64_t>& ids, const std::vector<Sentiment>& labels,
                    int k, uint64_t seed);

std::vector<LabeledExample> subset(const std::vector<LabeledExample>& corpus,
                                   const std::vector<int64_t>& ids);

// Audit documents: {seed, ratios|k, ids per part}.
std::string split_to_json(const DatasetSplit& split);
std::string folds_to_json(const FoldPlan& plan);
DatasetSplit split_from_json(const std::string& text);
FoldPlan folds_from_json(const std::string& text);

} // namespace senti

#endif
