#ifndef SENTI_PREDICTOR_HPP
#define SENTI_PREDICTOR_HPP

#include <array>
#include <optional>
#include <string>

#include "senti/model_store.hpp"

namespace senti {

struct Prediction {
    Sentiment label = Sentiment::neutral;
    std::array<double, 3> scores{};                    // raw decision values
    std::optional<std::array<double, 3>> probabilities; // absent for svm_linear
    bool no_signal = false; // text empty after preprocessing
};

// Applies the artifact's embedded preprocessing, then the family predict.
// Empty-after-preprocessing input yields uniform probabilities and the
// no_signal flag.
Prediction artifact_predict(const ModelArtifact& artifact, const std::string& text);

// The JSON shape shared by `predict` output lines and the HTTP endpoint:
// label, model_family, probabilities (or scores for svm_linear), and
// no_signal when set.
std::string prediction_to_json(const ModelArtifact& artifact, const Prediction& p);

} // namespace senti

#endif
