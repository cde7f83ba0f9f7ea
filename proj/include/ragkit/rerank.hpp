#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"
#include "ragkit/ranked_list.hpp"

namespace ragkit {

class RerankClient;

struct MultiStageConfig {
    int first_stage_k = 50;
    int final_k = 10;
};

struct RelevanceScore {
    std::string chunk_id;
    double probability = 0.0;  // normalized affirmative-token mass
};

using FirstStageRetriever = std::function<RankedList(const std::string& query, int top_k)>;

// Seq2seq-reranker scoring input, byte-stable.
std::string format_scoring_input(const std::string& query, const std::string& document);

// exp(y) / (exp(y) + exp(n)) computed with the max subtracted.
double normalize_yes_no(double logit_yes, double logit_no);

struct RerankResult {
    RankedList list;
    std::map<std::string, double> first_stage_scores;
    std::vector<std::string> unscored_ids;  // sentinel: kept after all scored candidates
};

RerankResult retrieve_and_rerank(const std::string& query_id, const std::string& query,
                                 const FirstStageRetriever& first_stage, RerankClient& scorer,
                                 const std::map<std::string, Chunk>& chunks_by_id,
                                 const MultiStageConfig& cfg);

}  // namespace ragkit
