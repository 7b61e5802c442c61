#ifndef SENTI_MODEL_STORE_HPP
#define SENTI_MODEL_STORE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "senti/bilstm.hpp"
#include "senti/gbdt.hpp"
#include "senti/linear.hpp"
#include "senti/text_prep.hpp"
#include "senti/tfidf.hpp"

namespace senti {

enum class ModelFamily : int { logistic = 0, svm_linear = 1, gbdt = 2, bilstm = 3 };

const char* family_name(ModelFamily f);

// Self-contained trained model: parameters plus the preprocessing assets
// (slang lexicon, stopwords, feature mapping) needed to reproduce
// predictions from raw text with no external files.
struct ModelArtifact {
    ModelFamily family = ModelFamily::logistic;
    SlangLexicon lexicon;
    StopwordList stopwords;
    std::optional<TfidfModel> tfidf;   // classical families
    std::optional<LinearModel> linear; // logistic / svm_linear
    std::optional<GbdtModel> gbdt;
    std::optional<BilstmModel> bilstm; // carries its own vocab + curves
    std::array<std::string, 3> label_names{"negative", "neutral", "positive"};
    uint64_t created_at = 0;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
};

// Binary container, magic "SENTIBv1", little-endian fixed-width numbers,
// length-prefixed named sections. Parameter floats are stored bit-exactly,
// so load(save(m)) reproduces predictions to the bit.
void save_artifact(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_artifact(const std::string& path);

uint64_t fnv1a64(const std::string& s);

} // namespace senti

#endif
