#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"
#include "ragkit/embedding.hpp"
#include "ragkit/ranked_list.hpp"

namespace ragkit {

class EmbeddingClient;

// Immutable id -> vector store with exact top-k cosine search.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    void add(const std::string& id, EmbeddingVector vec);
    bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
    const EmbeddingVector& at(const std::string& id) const;
    std::size_t size() const { return vectors_.size(); }
    std::size_t dim() const { return dim_; }
    const std::map<std::string, EmbeddingVector>& vectors() const { return vectors_; }

    // Binary format: magic "RKEM", version, dim, count, then (id, packed f32) records.
    void save(const std::filesystem::path& path) const;
    static EmbeddingStore load(const std::filesystem::path& path);

    void save_jsonl(const std::filesystem::path& path) const;
    static EmbeddingStore load_jsonl(const std::filesystem::path& path);

private:
    std::map<std::string, EmbeddingVector> vectors_;
    std::size_t dim_ = 0;
};

RankedList dense_search(const EmbeddingStore& store, const EmbeddingVector& query_vec,
                        int top_k, const std::string& query_id = "");

struct EmbedFailure {
    std::string chunk_id;
    std::string reason;
};

struct EmbedResult {
    EmbeddingStore store;
    std::vector<EmbedFailure> failures;
};

EmbedResult embed_corpus(const std::vector<Chunk>& chunks, EmbeddingClient& client);

}  // namespace ragkit
