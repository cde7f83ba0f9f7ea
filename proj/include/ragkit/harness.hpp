#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"
#include "ragkit/judge_eval.hpp"
#include "ragkit/ranked_list.hpp"

#include "json.hpp"

namespace ragkit {

struct ContextSpec {
    long total_tokens = 0;
    int depth_pct = 0;  // 0, 10, ..., 100
    std::string gold_chunk_id;
};

struct RunManifest {
    std::string run_tag;
    std::string retriever_kind;
    int retrieved_k = 0;
    double fusion_k = 0.0;
    std::string generator_model;
    std::string judge_model;
    std::int64_t seed = 0;
    std::string answer_template_id;
    std::string judge_template_id;
    std::string client_mode = "replay";

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

struct DepthContext {
    std::string text;
    int fillers_before = 0;
    int fillers_after = 0;
    long gold_token_start = 0;
    long total_tokens = 0;
};

// Filler chunks in document order around the gold chunk; fillers accumulate
// before the gold until its end would cross depth_pct of the token budget.
DepthContext build_depth_context(const std::vector<Chunk>& chunks, const Chunk& gold,
                                 const ContextSpec& spec);

using Retriever = std::function<RankedList(const std::string& query, int top_k)>;

struct DepthSweepCell {
    int depth_pct = 0;
    long total_tokens = 0;
    double mean_score = 0.0;
    double coverage = 0.0;
    bool failed = false;
    std::string error;
};

struct DepthSweepResult {
    std::vector<DepthSweepCell> cells;  // row-major: depth outer, tokens inner
    std::vector<int> depth_grid;
    std::vector<long> token_grid;
};

DepthSweepResult run_depth_sweep(const std::vector<QAPair>& dataset,
                                 const std::vector<Chunk>& chunks,
                                 GenerationClient& generator, GenerationClient& judge,
                                 const PromptTemplate& answer_tmpl,
                                 const PromptTemplate& judge_tmpl,
                                 const std::vector<long>& token_grid,
                                 const std::vector<int>& depth_grid);

// CSV heatmap (rows = depth, cols = token budget) plus per-depth row means.
void write_depth_sweep_csv(const std::filesystem::path& path, const DepthSweepResult& result);

EvalReport run_rag(const std::vector<QAPair>& dataset, const Retriever& retriever, int top_k,
                   const std::map<std::string, Chunk>& chunks_by_id,
                   GenerationClient& generator, GenerationClient& judge,
                   const PromptTemplate& answer_tmpl, const PromptTemplate& judge_tmpl,
                   const RunManifest& manifest, double relative_maximum_score = 0.0);

EvalReport run_baseline_no_context(const std::vector<QAPair>& dataset,
                                   GenerationClient& generator, GenerationClient& judge,
                                   const PromptTemplate& answer_tmpl,
                                   const PromptTemplate& judge_tmpl,
                                   const RunManifest& manifest,
                                   double relative_maximum_score = 0.0);

struct SweepCell {
    std::string retriever_name;
    int k = 0;
    double mean_score = 0.0;
    double coverage = 0.0;
};

struct SweepTable {
    std::vector<SweepCell> cells;
};

SweepTable sweep_chunk_count(const std::vector<QAPair>& dataset,
                             const std::map<std::string, Retriever>& retrievers,
                             const std::vector<int>& k_values,
                             const std::map<std::string, Chunk>& chunks_by_id,
                             GenerationClient& generator, GenerationClient& judge,
                             const PromptTemplate& answer_tmpl, const PromptTemplate& judge_tmpl);

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table);

// Bundled default templates (answer prompt, QA creation, evaluator rubric).
PromptTemplate default_answer_template();

}  // namespace ragkit
