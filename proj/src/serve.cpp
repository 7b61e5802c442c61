#include "senti/serve.hpp"

#include <httplib.h>
#include <json.hpp>

#include "senti/predictor.hpp"

namespace senti {

namespace {

constexpr size_t kMaxBody = 64 * 1024;

int64_t artifact_params(const ModelArtifact& a) {
    switch (a.family) {
        case ModelFamily::logistic:
        case ModelFamily::svm_linear:
            return static_cast<int64_t>(a.linear->weights.size()) + 3;
        case ModelFamily::gbdt: {
            int64_t n = 0;
            for (const auto& t : a.gbdt->trees) n += static_cast<int64_t>(t.nodes.size());
            return n;
        }
        case ModelFamily::bilstm:
            return a.bilstm->net.stored_param_count();
    }
    return 0;
}

} // namespace

struct InferenceServer::Impl {
    const ModelArtifact& artifact;
    httplib::Server server;

    explicit Impl(const ModelArtifact& a) : artifact(a) {
        server.set_payload_max_length(kMaxBody);

        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::ordered_json j;
            j["family"] = family_name(artifact.family);
            j["params"] = artifact_params(artifact);
            j["classes"] = artifact.label_names;
            j["created_at"] = artifact.created_at;
            j["seed"] = artifact.seed;
            j["config_hash"] = artifact.config_hash;
            res.set_content(j.dump(), "application/json");
        });

        server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", std::string("invalid JSON: ") + e.what()}}.dump(),
                                "application/json");
                return;
            }
            try {
                if (body.is_object() && body.contains("text") && body["text"].is_string()) {
                    Prediction p = artifact_predict(artifact, body["text"].get<std::string>());
                    res.set_content(prediction_to_json(artifact, p), "application/json");
                } else if (body.is_object() && body.contains("texts") && body["texts"].is_array()) {
                    std::string out = "[";
                    bool first = true;
                    for (const auto& item : body["texts"]) {
                        if (!item.is_string()) throw Error("texts entries must be strings");
                        Prediction p = artifact_predict(artifact, item.get<std::string>());
                        if (!first) out += ",";
                        out += prediction_to_json(artifact, p);
                        first = false;
                    }
                    out += "]";
                    res.set_content(out, "application/json");
                } else {
                    res.status = 400;
                    res.set_content(
                        nlohmann::json{{"error", "expected {\"text\": string} or {\"texts\": [..]}"}}
                            .dump(),
                        "application/json");
                }
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            }
        });
    }
};

InferenceServer::InferenceServer(const ModelArtifact& artifact)
    : impl_(std::make_unique<Impl>(artifact)) {}

InferenceServer::~InferenceServer() { stop(); }

int InferenceServer::bind_any(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool InferenceServer::bind(const std::string& host, int port) {
    return impl_->server.bind_to_port(host, port);
}

bool InferenceServer::run() { return impl_->server.listen_after_bind(); }

void InferenceServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

} // namespace senti
