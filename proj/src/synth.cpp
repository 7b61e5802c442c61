#include "senti/synth.hpp"

#include <algorithm>

#include "senti/rng.hpp"

namespace senti {

namespace {

std::string token_name(int idx) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%03d", idx);
    return buf;
}

} // namespace

std::vector<LabeledExample> synthetic_corpus(const SynthConfig& cfg) {
    if (cfg.vocab_size < 93) throw Error("synthetic corpus needs at least 93 vocabulary tokens");
    if (cfg.n_docs < 3) throw Error("synthetic corpus needs at least 3 docs");

    const int per_class = 30;
    const int shared_start = 3 * per_class;
    const int shared_count = cfg.vocab_size - shared_start;

    SplitMix64 rng(cfg.seed);
    std::vector<LabeledExample> corpus;
    corpus.reserve(static_cast<size_t>(cfg.n_docs));

    std::vector<Sentiment> labels;
    labels.reserve(static_cast<size_t>(cfg.n_docs));
    for (int64_t i = 0; i < cfg.n_docs; ++i)
        labels.push_back(static_cast<Sentiment>(i % 3));
    shuffle(labels, rng);

    for (int64_t i = 0; i < cfg.n_docs; ++i) {
        const int cls = static_cast<int>(labels[static_cast<size_t>(i)]);
        const int len = cfg.min_len +
                        static_cast<int>(rng.below(static_cast<uint64_t>(cfg.max_len - cfg.min_len + 1)));
        std::string text;
        for (int t = 0; t < len; ++t) {
            int tok;
            if (rng.next_double() < cfg.keyword_prob)
                tok = cls * per_class + static_cast<int>(rng.below(per_class));
            else
                tok = shared_start + static_cast<int>(rng.below(static_cast<uint64_t>(shared_count)));
            if (!text.empty()) text += ' ';
            text += token_name(tok);
        }
        LabeledExample ex;
        ex.id = i;
        ex.text = std::move(text);
        ex.label = labels[static_cast<size_t>(i)];
        corpus.push_back(std::move(ex));
    }
    return corpus;
}

std::string synthetic_corpus_csv(const SynthConfig& cfg) {
    auto corpus = synthetic_corpus(cfg);
    std::string out = "comment,sentiment\n";
    for (const auto& ex : corpus) {
        out += ex.text;
        out += ',';
        out += sentiment_name(ex.label);
        out += '\n';
    }
    return out;
}

} // namespace senti
