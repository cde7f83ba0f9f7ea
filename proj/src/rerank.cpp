#include "ragkit/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "ragkit/model_clients.hpp"

namespace ragkit {

std::string format_scoring_input(const std::string& query, const std::string& document) {
    return "Query: " + query + " Document: " + document + " Relevant:";
}

double normalize_yes_no(double logit_yes, double logit_no) {
    if (!std::isfinite(logit_yes) || !std::isfinite(logit_no)) {
        throw std::invalid_argument("normalize_yes_no: non-finite logits");
    }
    const double m = std::max(logit_yes, logit_no);
    const double ey = std::exp(logit_yes - m);
    const double en = std::exp(logit_no - m);
    return ey / (ey + en);
}

RerankResult retrieve_and_rerank(const std::string& query_id, const std::string& query,
                                 const FirstStageRetriever& first_stage, RerankClient& scorer,
                                 const std::map<std::string, Chunk>& chunks_by_id,
                                 const MultiStageConfig& cfg) {
    if (cfg.final_k < 1 || cfg.final_k > cfg.first_stage_k) {
        throw std::invalid_argument("need 1 <= final_k <= first_stage_k");
    }
    RankedList candidates = first_stage(query, cfg.first_stage_k);
    if (candidates.entries.empty()) {
        throw std::runtime_error("first stage returned no candidates for query " + query_id);
    }

    RerankResult result;
    std::vector<RerankDocument> documents;
    for (const auto& e : candidates.entries) {
        result.first_stage_scores[e.chunk_id] = e.score;
        auto it = chunks_by_id.find(e.chunk_id);
        if (it == chunks_by_id.end()) {
            throw std::runtime_error("first stage returned unknown chunk id: " + e.chunk_id);
        }
        documents.push_back({e.chunk_id, it->second.text});
    }

    std::unordered_map<std::string, double> probability;
    for (const auto& score : scorer.rerank_score(query, documents)) {
        probability[score.chunk_id] = score.probability;
    }
    if (probability.empty()) {
        throw std::runtime_error("scorer failed on every candidate for query " + query_id);
    }

    // Scored candidates by descending probability; unscored ones keep the
    // sentinel status and sort after all scored, preserving first-stage order.
    struct Entry {
        std::string chunk_id;
        double probability;
        bool scored;
        int prior_rank;
    };
    std::vector<Entry> entries;
    for (const auto& e : candidates.entries) {
        auto it = probability.find(e.chunk_id);
        if (it != probability.end()) {
            entries.push_back({e.chunk_id, it->second, true, e.rank});
        } else {
            entries.push_back({e.chunk_id, 0.0, false, e.rank});
            result.unscored_ids.push_back(e.chunk_id);
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.scored != b.scored) return a.scored;
        if (a.scored && a.probability != b.probability) return a.probability > b.probability;
        if (a.prior_rank != b.prior_rank) return a.prior_rank < b.prior_rank;
        return a.chunk_id < b.chunk_id;
    });

    result.list.query_id = query_id;
    const std::size_t n = std::min<std::size_t>(entries.size(), static_cast<std::size_t>(cfg.final_k));
    for (std::size_t i = 0; i < n; ++i) {
        result.list.entries.push_back({entries[i].chunk_id, entries[i].probability,
                                       static_cast<int>(i) + 1});
    }
    return result;
}

}  // namespace ragkit
