#ifndef SENTI_SYNTH_HPP
#define SENTI_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "senti/types.hpp"

namespace senti {

struct SynthConfig {
    int64_t n_docs = 1500;
    int vocab_size = 200; // 3 x 30 class keywords + 110 shared fillers
    int min_len = 5;
    int max_len = 15;
    double keyword_prob = 0.7;
    uint64_t seed = 42;
};

// Balanced 3-class corpus whose classes are separable by keyword
// distributions: each class owns 30 keyword tokens; the rest of the
// vocabulary is shared filler. Deterministic in the seed.
std::vector<LabeledExample> synthetic_corpus(const SynthConfig& cfg = {});

// The same corpus as a CSV document (comment,sentiment header).
std::string synthetic_corpus_csv(const SynthConfig& cfg = {});

} // namespace senti

#endif
