#include "ragkit/model_clients.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"

#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_live_requests{0};

}  // namespace

std::uint64_t live_request_count() { return g_live_requests.load(); }
void reset_live_request_count() { g_live_requests.store(0); }

ClientMode client_mode_from_string(const std::string& s) {
    if (s == "live") return ClientMode::live;
    if (s == "record") return ClientMode::record;
    if (s == "replay") return ClientMode::replay;
    throw std::invalid_argument("unknown client mode: " + s);
}

std::string to_string(ClientMode mode) {
    switch (mode) {
        case ClientMode::live: return "live";
        case ClientMode::record: return "record";
        case ClientMode::replay: return "replay";
    }
    return "replay";
}

std::uint64_t canonical_request_hash(const json& request) {
    // nlohmann::json objects iterate in sorted key order, so dump() is the
    // canonical serialization; FNV-1a 64 over its exact bytes.
    const std::string canon = request.dump();
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : canon) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

namespace {

std::string hash_filename(std::uint64_t hash) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx.json", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace

std::optional<json> FixtureStore::lookup(std::uint64_t hash) const {
    const auto path = dir_ / hash_filename(hash);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j = json::parse(in);
    return j.at("response");
}

void FixtureStore::store(std::uint64_t hash, const json& request, const json& response) const {
    std::filesystem::create_directories(dir_);
    const auto path = dir_ / hash_filename(hash);
    json j{{"request", request}, {"response", response}};
    atomic_write_file(path, j.dump(2));
}

namespace {

// Shared live/record/replay dispatch. `endpoint` is the URL path; the request
// JSON doubles as the fixture key.
json dispatch(const ModelClientConfig& config, const FixtureStore& fixtures,
              const std::string& endpoint, const json& request) {
    const std::uint64_t hash = canonical_request_hash(request);
    if (config.mode == ClientMode::replay) {
        auto found = fixtures.lookup(hash);
        if (!found) {
            char hex[24];
            std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
            throw std::runtime_error("fixture miss for request hash " + std::string(hex) +
                                     " (endpoint " + endpoint + ")");
        }
        return *found;
    }
    if (config.mode == ClientMode::record) {
        // Idempotent keyed write: a prior recording short-circuits the call.
        auto found = fixtures.lookup(hash);
        if (found) return *found;
    }

    httplib::Client http(config.base_url);
    http.set_connection_timeout(config.timeout_seconds);
    http.set_read_timeout(config.timeout_seconds);
    if (!config.credential_env_var.empty()) {
        if (const char* key = std::getenv(config.credential_env_var.c_str())) {
            http.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        }
    }

    std::string body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50ll << (attempt - 1)));
        }
        g_live_requests.fetch_add(1);
        auto res = http.Post(endpoint, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
            continue;
        }
        json response = json::parse(res->body);
        if (config.mode == ClientMode::record) {
            fixtures.store(hash, request, response);
        }
        return response;
    }
    throw std::runtime_error("request to " + endpoint + " failed: " + last_error);
}

}  // namespace

HttpGenerationClient::HttpGenerationClient(ModelClientConfig config)
    : config_(std::move(config)), fixtures_(config_.fixture_dir) {}

std::string HttpGenerationClient::generate(const std::string& prompt, const GenParams& params) {
    json request{{"model", config_.model_id},
                 {"prompt", prompt},
                 {"temperature", params.temperature},
                 {"seed", params.seed},
                 {"max_tokens", params.max_tokens}};
    json response = dispatch(config_, fixtures_, "/v1/generate", request);
    return response.at("text").get<std::string>();
}

HttpEmbeddingClient::HttpEmbeddingClient(ModelClientConfig config)
    : config_(std::move(config)), fixtures_(config_.fixture_dir) {}

std::vector<EmbeddingVector> HttpEmbeddingClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    json request{{"model", config_.model_id}, {"texts", texts}};
    json response = dispatch(config_, fixtures_, "/v1/embed", request);
    std::vector<EmbeddingVector> vectors;
    for (const auto& arr : response.at("vectors")) {
        EmbeddingVector vec;
        vec.values = arr.get<std::vector<float>>();
        vectors.push_back(std::move(vec));
    }
    validate_embed_response(vectors, texts.size());
    return vectors;
}

HttpRerankClient::HttpRerankClient(ModelClientConfig config)
    : config_(std::move(config)), fixtures_(config_.fixture_dir) {}

std::vector<RelevanceScore> HttpRerankClient::rerank_score(
    const std::string& query, const std::vector<RerankDocument>& documents) {
    json docs = json::array();
    for (const auto& d : documents) docs.push_back({{"id", d.id}, {"text", d.text}});
    json request{{"model", config_.model_id}, {"query", query}, {"documents", docs}};
    json response = dispatch(config_, fixtures_, "/v1/rerank", request);
    std::vector<RelevanceScore> scores;
    for (const auto& s : response.at("scores")) {
        scores.push_back({s.at("id").get<std::string>(), s.at("probability").get<double>()});
    }
    validate_rerank_response(scores, documents);
    return scores;
}

std::vector<EmbeddingVector> CallbackEmbeddingClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    auto vectors = fn_(texts);
    validate_embed_response(vectors, texts.size());
    return vectors;
}

std::vector<RelevanceScore> CallbackRerankClient::rerank_score(
    const std::string& query, const std::vector<RerankDocument>& documents) {
    auto scores = fn_(query, documents);
    validate_rerank_response(scores, documents);
    return scores;
}

void validate_embed_response(const std::vector<EmbeddingVector>& vectors, std::size_t expected) {
    if (vectors.size() != expected) {
        throw std::runtime_error("embedding batch size mismatch: expected " +
                                 std::to_string(expected) + ", got " +
                                 std::to_string(vectors.size()));
    }
    for (const auto& v : vectors) {
        if (v.dim() != vectors.front().dim()) {
            throw std::runtime_error("inconsistent embedding dimensions in batch");
        }
    }
}

void validate_rerank_response(const std::vector<RelevanceScore>& scores,
                              const std::vector<RerankDocument>& documents) {
    for (const auto& s : scores) {
        const bool known = std::any_of(documents.begin(), documents.end(),
                                       [&](const RerankDocument& d) { return d.id == s.chunk_id; });
        if (!known) {
            throw std::runtime_error("rerank response references unknown id: " + s.chunk_id);
        }
        if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
            throw std::runtime_error("rerank probability out of [0,1] for id " + s.chunk_id);
        }
    }
}

}  // namespace ragkit
