#include "ragkit/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ragkit/model_clients.hpp"
#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    if (u.dim() == 0) {
        throw std::invalid_argument("cosine: empty vectors");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double a = u.values[i];
        const double b = v.values[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) {
        throw std::domain_error("cosine: zero vector");
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

void EmbeddingStore::add(const std::string& id, EmbeddingVector vec) {
    for (float x : vec.values) {
        if (!std::isfinite(x)) {
            throw std::runtime_error("non-finite embedding entry for id " + id);
        }
    }
    if (vectors_.empty()) {
        dim_ = vec.dim();
    } else if (vec.dim() != dim_) {
        throw std::runtime_error("dimension mismatch for id " + id + ": expected " +
                                 std::to_string(dim_) + ", got " + std::to_string(vec.dim()));
    }
    if (!vectors_.emplace(id, std::move(vec)).second) {
        throw std::runtime_error("duplicate embedding id: " + id);
    }
}

const EmbeddingVector& EmbeddingStore::at(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw std::runtime_error("unknown embedding id: " + id);
    return it->second;
}

RankedList dense_search(const EmbeddingStore& store, const EmbeddingVector& query_vec,
                        int top_k, const std::string& query_id) {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    RankedList result;
    result.query_id = query_id;
    if (store.size() == 0) return result;
    if (query_vec.dim() != store.dim()) {
        throw std::invalid_argument("query dimension does not match store");
    }
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(store.size());
    for (const auto& [id, vec] : store.vectors()) {
        scored.emplace_back(id, cosine(query_vec, vec));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t n = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(top_k));
    for (std::size_t i = 0; i < n; ++i) {
        result.entries.push_back({scored[i].first, scored[i].second, static_cast<int>(i) + 1});
    }
    return result;
}

EmbedResult embed_corpus(const std::vector<Chunk>& chunks, EmbeddingClient& client) {
    EmbedResult result;
    for (const auto& chunk : chunks) {
        try {
            std::vector<EmbeddingVector> vecs = client.embed({chunk.text});
            if (vecs.size() != 1) {
                throw std::runtime_error("expected one vector, got " + std::to_string(vecs.size()));
            }
            result.store.add(chunk.id, std::move(vecs[0]));
        } catch (const std::exception& e) {
            result.failures.push_back({chunk.id, e.what()});
        }
    }
    return result;
}

namespace {

constexpr char kMagic[4] = {'R', 'K', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void append_raw(std::string& buf, const T& value) {
    buf.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated embedding file");
    return value;
}

}  // namespace

void EmbeddingStore::save(const std::filesystem::path& path) const {
    std::string buf;
    buf.append(kMagic, 4);
    append_raw(buf, kVersion);
    append_raw(buf, static_cast<std::uint32_t>(dim_));
    append_raw(buf, static_cast<std::uint64_t>(vectors_.size()));
    for (const auto& [id, vec] : vectors_) {
        append_raw(buf, static_cast<std::uint32_t>(id.size()));
        buf.append(id);
        buf.append(reinterpret_cast<const char*>(vec.values.data()),
                   vec.values.size() * sizeof(float));
    }
    atomic_write_file(path, buf);
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("not an embedding store file: " + path.string());
    }
    const auto version = read_raw<std::uint32_t>(in);
    if (version != kVersion) {
        throw std::runtime_error("unsupported embedding store version " + std::to_string(version));
    }
    const auto dim = read_raw<std::uint32_t>(in);
    const auto count = read_raw<std::uint64_t>(in);
    EmbeddingStore store;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id_len = read_raw<std::uint32_t>(in);
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        EmbeddingVector vec;
        vec.values.resize(dim);
        in.read(reinterpret_cast<char*>(vec.values.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw std::runtime_error("truncated embedding file");
        store.add(id, std::move(vec));
    }
    return store;
}

void EmbeddingStore::save_jsonl(const std::filesystem::path& path) const {
    std::ostringstream out;
    for (const auto& [id, vec] : vectors_) {
        json j{{"id", id}, {"vector", vec.values}};
        out << j.dump() << '\n';
    }
    atomic_write_file(path, out.str());
}

EmbeddingStore EmbeddingStore::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    EmbeddingStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        EmbeddingVector vec;
        vec.values = j.at("vector").get<std::vector<float>>();
        store.add(j.at("id").get<std::string>(), std::move(vec));
    }
    return store;
}

}  // namespace ragkit
