#include "ragkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ragkit/model_clients.hpp"
#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

json RunManifest::to_json() const {
    return json{{"format", "ragkit.run_manifest"},
                {"version", 1},
                {"run_tag", run_tag},
                {"retriever_kind", retriever_kind},
                {"retrieved_k", retrieved_k},
                {"fusion_k", fusion_k},
                {"generator_model", generator_model},
                {"judge_model", judge_model},
                {"seed", seed},
                {"answer_template_id", answer_template_id},
                {"judge_template_id", judge_template_id},
                {"client_mode", client_mode}};
}

RunManifest RunManifest::from_json(const json& j) {
    if (j.value("format", "") != "ragkit.run_manifest") {
        throw std::runtime_error("not a run manifest");
    }
    RunManifest m;
    m.run_tag = j.at("run_tag").get<std::string>();
    m.retriever_kind = j.at("retriever_kind").get<std::string>();
    m.retrieved_k = j.at("retrieved_k").get<int>();
    m.fusion_k = j.at("fusion_k").get<double>();
    m.generator_model = j.at("generator_model").get<std::string>();
    m.judge_model = j.at("judge_model").get<std::string>();
    m.seed = j.at("seed").get<std::int64_t>();
    m.answer_template_id = j.at("answer_template_id").get<std::string>();
    m.judge_template_id = j.at("judge_template_id").get<std::string>();
    m.client_mode = j.at("client_mode").get<std::string>();
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    atomic_write_file(path, to_json().dump(2));
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    return from_json(json::parse(read_file(path)));
}

DepthContext build_depth_context(const std::vector<Chunk>& chunks, const Chunk& gold,
                                 const ContextSpec& spec) {
    if (spec.depth_pct < 0 || spec.depth_pct > 100) {
        throw std::invalid_argument("depth_pct must be in [0, 100]");
    }
    if (spec.total_tokens < gold.token_count) {
        throw std::invalid_argument("total_tokens smaller than the gold chunk");
    }
    std::vector<const Chunk*> fillers;
    for (const auto& c : chunks) {
        if (c.id != gold.id) fillers.push_back(&c);
    }

    // Fillers accumulate in document order before the gold chunk until the
    // gold's end would cross depth_pct of the token budget, then the rest
    // follow until the budget is filled.
    const double target_end =
        static_cast<double>(spec.depth_pct) / 100.0 * static_cast<double>(spec.total_tokens);
    DepthContext ctx;
    std::ostringstream text;
    long tokens = 0;
    std::size_t next = 0;
    while (next < fillers.size() &&
           static_cast<double>(tokens + gold.token_count) < target_end) {
        text << fillers[next]->text << '\n';
        tokens += fillers[next]->token_count;
        ++next;
        ++ctx.fillers_before;
    }
    if (static_cast<double>(tokens + gold.token_count) < target_end) {
        throw std::runtime_error(
            "insufficient filler before the gold chunk: need tokens up to " +
            std::to_string(static_cast<long>(target_end)) + ", have " + std::to_string(tokens));
    }
    ctx.gold_token_start = tokens;
    text << gold.text << '\n';
    tokens += gold.token_count;
    while (next < fillers.size() && tokens < spec.total_tokens) {
        text << fillers[next]->text << '\n';
        tokens += fillers[next]->token_count;
        ++next;
        ++ctx.fillers_after;
    }
    if (tokens < spec.total_tokens) {
        throw std::runtime_error("insufficient filler to reach " +
                                 std::to_string(spec.total_tokens) + " tokens; got " +
                                 std::to_string(tokens));
    }
    ctx.total_tokens = tokens;
    ctx.text = text.str();
    return ctx;
}

namespace {

EvalRecord judge_one(const QAPair& item, const std::string& context, GenerationClient& generator,
                     GenerationClient& judge, const PromptTemplate& answer_tmpl,
                     const PromptTemplate& judge_tmpl, const std::string& run_tag) {
    EvalRecord record;
    record.qa_id = item.id;
    record.reference_answer = item.answer;
    record.run_tag = run_tag;
    try {
        std::string prompt = context.empty()
                                 ? answer_tmpl.render({{"context", ""}, {"question", item.question}})
                                 : answer_tmpl.render({{"context", context},
                                                       {"question", item.question}});
        record.generated_answer = generator.generate(prompt, GenParams{});
        record.score = judge_answer(item.answer, record.generated_answer, judge, judge_tmpl);
    } catch (const std::exception& e) {
        record.score.raw_text = std::string("error: ") + e.what();
        record.score.valid = false;
    }
    return record;
}

}  // namespace

DepthSweepResult run_depth_sweep(const std::vector<QAPair>& dataset,
                                 const std::vector<Chunk>& chunks, GenerationClient& generator,
                                 GenerationClient& judge, const PromptTemplate& answer_tmpl,
                                 const PromptTemplate& judge_tmpl,
                                 const std::vector<long>& token_grid,
                                 const std::vector<int>& depth_grid) {
    std::map<std::string, const Chunk*> by_id;
    for (const auto& c : chunks) by_id[c.id] = &c;

    DepthSweepResult result;
    result.depth_grid = depth_grid;
    result.token_grid = token_grid;
    for (int depth : depth_grid) {
        for (long total : token_grid) {
            DepthSweepCell cell;
            cell.depth_pct = depth;
            cell.total_tokens = total;
            try {
                std::vector<EvalRecord> records;
                for (const auto& item : dataset) {
                    auto it = by_id.find(item.gold_chunk_id);
                    if (it == by_id.end()) {
                        throw std::runtime_error("gold chunk not found: " + item.gold_chunk_id);
                    }
                    ContextSpec spec{total, depth, item.gold_chunk_id};
                    DepthContext ctx = build_depth_context(chunks, *it->second, spec);
                    records.push_back(judge_one(item, ctx.text, generator, judge, answer_tmpl,
                                                judge_tmpl, "depth-sweep"));
                }
                EvalReport report = make_report("depth-sweep", std::move(records));
                cell.mean_score = report.mean_score;
                cell.coverage = report.coverage;
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

void write_depth_sweep_csv(const std::filesystem::path& path, const DepthSweepResult& result) {
    std::ostringstream out;
    out << "depth_pct";
    for (long t : result.token_grid) out << ",tokens_" << t;
    out << ",row_mean\n";
    std::size_t idx = 0;
    for (int depth : result.depth_grid) {
        out << depth;
        double sum = 0.0;
        int count = 0;
        for (std::size_t j = 0; j < result.token_grid.size(); ++j, ++idx) {
            const auto& cell = result.cells[idx];
            if (cell.failed) {
                out << ",";
            } else {
                out << ',' << cell.mean_score;
                sum += cell.mean_score;
                ++count;
            }
        }
        out << ',' << (count > 0 ? sum / count : 0.0) << '\n';
    }
    atomic_write_file(path, out.str());
}

EvalReport run_rag(const std::vector<QAPair>& dataset, const Retriever& retriever, int top_k,
                   const std::map<std::string, Chunk>& chunks_by_id, GenerationClient& generator,
                   GenerationClient& judge, const PromptTemplate& answer_tmpl,
                   const PromptTemplate& judge_tmpl, const RunManifest& manifest,
                   double relative_maximum_score) {
    std::vector<EvalRecord> records;
    for (const auto& item : dataset) {
        EvalRecord record;
        try {
            RankedList retrieved = retriever(item.question, top_k);
            // Retrieved chunks go into the prompt in rank order, rank 1 first.
            std::ostringstream context;
            for (const auto& e : retrieved.entries) {
                auto it = chunks_by_id.find(e.chunk_id);
                if (it == chunks_by_id.end()) {
                    throw std::runtime_error("retrieved unknown chunk id: " + e.chunk_id);
                }
                context << it->second.text << '\n';
            }
            record = judge_one(item, context.str(), generator, judge, answer_tmpl, judge_tmpl,
                               manifest.run_tag);
        } catch (const std::exception& e) {
            record.qa_id = item.id;
            record.reference_answer = item.answer;
            record.run_tag = manifest.run_tag;
            record.score.raw_text = std::string("error: ") + e.what();
            record.score.valid = false;
        }
        records.push_back(std::move(record));
    }
    return make_report(manifest.run_tag, std::move(records), relative_maximum_score);
}

EvalReport run_baseline_no_context(const std::vector<QAPair>& dataset,
                                   GenerationClient& generator, GenerationClient& judge,
                                   const PromptTemplate& answer_tmpl,
                                   const PromptTemplate& judge_tmpl, const RunManifest& manifest,
                                   double relative_maximum_score) {
    std::vector<EvalRecord> records;
    for (const auto& item : dataset) {
        records.push_back(judge_one(item, "", generator, judge, answer_tmpl, judge_tmpl,
                                    manifest.run_tag));
    }
    return make_report(manifest.run_tag, std::move(records), relative_maximum_score);
}

SweepTable sweep_chunk_count(const std::vector<QAPair>& dataset,
                             const std::map<std::string, Retriever>& retrievers,
                             const std::vector<int>& k_values,
                             const std::map<std::string, Chunk>& chunks_by_id,
                             GenerationClient& generator, GenerationClient& judge,
                             const PromptTemplate& answer_tmpl,
                             const PromptTemplate& judge_tmpl) {
    SweepTable table;
    for (const auto& [name, retriever] : retrievers) {
        for (int k : k_values) {
            RunManifest manifest;
            manifest.run_tag = "sweep-" + name + "-k" + std::to_string(k);
            manifest.retriever_kind = name;
            manifest.retrieved_k = k;
            EvalReport report = run_rag(dataset, retriever, k, chunks_by_id, generator, judge,
                                        answer_tmpl, judge_tmpl, manifest);
            table.cells.push_back({name, k, report.mean_score, report.coverage});
        }
    }
    return table;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepTable& table) {
    std::ostringstream out;
    out << "retriever,k,mean_score,coverage\n";
    for (const auto& cell : table.cells) {
        out << cell.retriever_name << ',' << cell.k << ',' << cell.mean_score << ','
            << cell.coverage << '\n';
    }
    atomic_write_file(path, out.str());
}

PromptTemplate default_answer_template() {
    return PromptTemplate(
        "Answer the question using only the context below. If the context is empty, answer "
        "from your own knowledge.\n\n## Context:\n{context}\n\n## Question:\n{question}\n\n"
        "Answer concisely and only with information supported by the context.");
}

}  // namespace ragkit
