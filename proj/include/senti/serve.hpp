#ifndef SENTI_SERVE_HPP
#define SENTI_SERVE_HPP

#include <memory>
#include <string>

#include "senti/model_store.hpp"

namespace senti {

// JSON-over-HTTP inference endpoint on an immutable artifact.
//   POST /predict  {"text": "..."} or {"texts": ["...", ...]}
//   GET  /health   model metadata
// Malformed JSON -> 400; bodies over 64 KiB -> 413. Requests are served
// concurrently; nothing mutates the artifact.
class InferenceServer {
public:
    explicit InferenceServer(const ModelArtifact& artifact);
    ~InferenceServer();
    InferenceServer(const InferenceServer&) = delete;
    InferenceServer& operator=(const InferenceServer&) = delete;

    // Bind to an ephemeral port (tests); returns the port or -1.
    int bind_any(const std::string& host);
    bool bind(const std::string& host, int port);
    // Serve until stop(); call after a successful bind.
    bool run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace senti

#endif
