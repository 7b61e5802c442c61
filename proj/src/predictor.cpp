#include "senti/predictor.hpp"

#include <json.hpp>

#include "senti/mathutil.hpp"

namespace senti {

Prediction artifact_predict(const ModelArtifact& artifact, const std::string& text) {
    Prediction p;
    CleanDocument doc = preprocess(text, artifact.lexicon, artifact.stopwords);
    if (doc.tokens.empty()) {
        p.no_signal = true;
        p.scores = {0, 0, 0};
        p.probabilities = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
        p.label = static_cast<Sentiment>(argmax3(*p.probabilities));
        return p;
    }
    switch (artifact.family) {
        case ModelFamily::logistic: {
            SparseVector x = tfidf_transform(*artifact.tfidf, doc);
            p.scores = predict_scores(*artifact.linear, x);
            p.probabilities = softmax3(p.scores);
            break;
        }
        case ModelFamily::svm_linear: {
            SparseVector x = tfidf_transform(*artifact.tfidf, doc);
            p.scores = predict_scores(*artifact.linear, x);
            break; // no calibrated probabilities for the linear SVM
        }
        case ModelFamily::gbdt: {
            SparseVector x = tfidf_transform(*artifact.tfidf, doc);
            p.scores = gbdt_predict_scores(*artifact.gbdt, x);
            p.probabilities = softmax3(p.scores);
            break;
        }
        case ModelFamily::bilstm: {
            auto probs = bilstm_predict_proba(*artifact.bilstm, doc);
            p.scores = probs;
            p.probabilities = probs;
            break;
        }
    }
    p.label = static_cast<Sentiment>(argmax3(p.scores));
    return p;
}

std::string prediction_to_json(const ModelArtifact& artifact, const Prediction& p) {
    nlohmann::ordered_json j;
    j["label"] = artifact.label_names[static_cast<size_t>(p.label)];
    if (p.probabilities) {
        nlohmann::ordered_json probs;
        for (int k = 0; k < kNumClasses; ++k)
            probs[artifact.label_names[static_cast<size_t>(k)]] =
                (*p.probabilities)[static_cast<size_t>(k)];
        j["probabilities"] = probs;
    } else {
        nlohmann::ordered_json scores;
        for (int k = 0; k < kNumClasses; ++k)
            scores[artifact.label_names[static_cast<size_t>(k)]] = p.scores[static_cast<size_t>(k)];
        j["scores"] = scores;
    }
    j["model_family"] = family_name(artifact.family);
    if (p.no_signal) j["no_signal"] = true;
    return j.dump();
}

} // namespace senti
