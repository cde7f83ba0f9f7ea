#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ragkit/embedding.hpp"
#include "ragkit/rerank.hpp"

#include "json.hpp"

namespace ragkit {

enum class ClientMode { live, record, replay };

struct ModelClientConfig {
    std::string base_url;             // e.g. http://127.0.0.1:8089
    std::string model_id;
    std::string credential_env_var;   // name only; never stored in manifests
    int timeout_seconds = 30;
    int max_retries = 3;
    int max_parallel = 4;
    ClientMode mode = ClientMode::replay;
    std::filesystem::path fixture_dir;
};

ClientMode client_mode_from_string(const std::string& s);
std::string to_string(ClientMode mode);

// Stable across platforms: FNV-1a 64 over the canonical (sorted-key) dump.
std::uint64_t canonical_request_hash(const nlohmann::json& request);

// Directory of request-hash -> response payload files. A replay miss is an
// explicit error, never a silent live call.
class FixtureStore {
public:
    FixtureStore() = default;
    explicit FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<nlohmann::json> lookup(std::uint64_t hash) const;
    void store(std::uint64_t hash, const nlohmann::json& request,
               const nlohmann::json& response) const;  // idempotent keyed write
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

// Counts HTTP requests actually sent; replay-mode hermeticity tests assert
// this stays at zero.
std::uint64_t live_request_count();
void reset_live_request_count();

struct GenParams {
    double temperature = 0.0;
    std::int64_t seed = 0;
    int max_tokens = 1024;
};

class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    virtual std::string generate(const std::string& prompt, const GenParams& params) = 0;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    // One vector per input text; all dims must agree.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

struct RerankDocument {
    std::string id;
    std::string text;
};

class RerankClient {
public:
    virtual ~RerankClient() = default;
    // Response ids must be a subset of request ids, probabilities in [0, 1].
    virtual std::vector<RelevanceScore> rerank_score(const std::string& query,
                                                     const std::vector<RerankDocument>& documents) = 0;
};

// HTTP clients with a record/replay fixture layer. Endpoints:
//   POST /v1/generate   {model, prompt, temperature, seed, max_tokens} -> {text}
//   POST /v1/embed      {model, texts:[...]}                          -> {vectors:[[...]]}
//   POST /v1/rerank     {model, query, documents:[{id,text}]}         -> {scores:[{id,probability}]}
class HttpGenerationClient : public GenerationClient {
public:
    explicit HttpGenerationClient(ModelClientConfig config);
    std::string generate(const std::string& prompt, const GenParams& params) override;

private:
    ModelClientConfig config_;
    FixtureStore fixtures_;
};

class HttpEmbeddingClient : public EmbeddingClient {
public:
    explicit HttpEmbeddingClient(ModelClientConfig config);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    ModelClientConfig config_;
    FixtureStore fixtures_;
};

class HttpRerankClient : public RerankClient {
public:
    explicit HttpRerankClient(ModelClientConfig config);
    std::vector<RelevanceScore> rerank_score(const std::string& query,
                                             const std::vector<RerankDocument>& documents) override;

private:
    ModelClientConfig config_;
    FixtureStore fixtures_;
};

// In-process clients for tests and hermetic harness runs.
class CallbackGenerationClient : public GenerationClient {
public:
    using Fn = std::function<std::string(const std::string& prompt, const GenParams&)>;
    explicit CallbackGenerationClient(Fn fn) : fn_(std::move(fn)) {}
    std::string generate(const std::string& prompt, const GenParams& params) override {
        return fn_(prompt, params);
    }

private:
    Fn fn_;
};

class CallbackEmbeddingClient : public EmbeddingClient {
public:
    using Fn = std::function<std::vector<EmbeddingVector>(const std::vector<std::string>&)>;
    explicit CallbackEmbeddingClient(Fn fn) : fn_(std::move(fn)) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    Fn fn_;
};

class CallbackRerankClient : public RerankClient {
public:
    using Fn = std::function<std::vector<RelevanceScore>(const std::string&,
                                                         const std::vector<RerankDocument>&)>;
    explicit CallbackRerankClient(Fn fn) : fn_(std::move(fn)) {}
    std::vector<RelevanceScore> rerank_score(const std::string& query,
                                             const std::vector<RerankDocument>& documents) override;

private:
    Fn fn_;
};

// Contract checks shared by the HTTP and callback clients.
void validate_embed_response(const std::vector<EmbeddingVector>& vectors, std::size_t expected);
void validate_rerank_response(const std::vector<RelevanceScore>& scores,
                              const std::vector<RerankDocument>& documents);

}  // namespace ragkit
