// ragkit command line: chunking, indexing, retrieval, adapter training and
// judge-based evaluation over a workspace directory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ragkit/adapter.hpp"
#include "ragkit/corpus.hpp"
#include "ragkit/dense_index.hpp"
#include "ragkit/fusion.hpp"
#include "ragkit/harness.hpp"
#include "ragkit/ir_metrics.hpp"
#include "ragkit/judge_eval.hpp"
#include "ragkit/model_clients.hpp"
#include "ragkit/ranked_list.hpp"
#include "ragkit/rerank.hpp"
#include "ragkit/sparse_index.hpp"
#include "ragkit/workspace.hpp"

#ifndef RAGKIT_DATA_DIR
#define RAGKIT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string workspace = ".";
    std::string mode = "replay";
    std::int64_t seed = 0;
    std::string manifest_path;
};

fs::path data_dir() { return fs::path(RAGKIT_DATA_DIR); }

ragkit::ModelClientConfig client_config(const GlobalOpts& g, const std::string& base_url,
                                        const std::string& model) {
    ragkit::ModelClientConfig cfg;
    cfg.base_url = base_url;
    cfg.model_id = model;
    cfg.mode = ragkit::client_mode_from_string(g.mode);
    cfg.fixture_dir = ragkit::WorkspaceLayout{g.workspace}.fixtures();
    cfg.credential_env_var = "RAGKIT_API_KEY";
    return cfg;
}

struct QueryRecord {
    std::string id;
    std::string text;
};

std::vector<QueryRecord> read_query_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open query file: " + path.string());
    std::vector<QueryRecord> queries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        QueryRecord q;
        q.id = j.at("id").get<std::string>();
        q.text = j.contains("text") ? j.at("text").get<std::string>()
                                    : j.at("question").get<std::string>();
        queries.push_back(std::move(q));
    }
    return queries;
}

std::map<std::string, ragkit::Chunk> chunk_map(const std::vector<ragkit::Chunk>& chunks) {
    std::map<std::string, ragkit::Chunk> m;
    for (const auto& c : chunks) m[c.id] = c;
    return m;
}

ragkit::PromptTemplate load_template_or(const std::string& override_path,
                                        const std::string& bundled_name) {
    if (!override_path.empty()) return ragkit::PromptTemplate::from_file(override_path);
    return ragkit::PromptTemplate::from_file(data_dir() / "prompts" / bundled_name);
}

int run(int argc, char** argv) {
    CLI::App app{"RAG experimentation toolkit"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--workspace", g.workspace, "Workspace root directory");
    app.add_option("--mode", g.mode, "Client mode: live, record, replay")
        ->check(CLI::IsMember({"live", "record", "replay"}));
    app.add_option("--seed", g.seed, "Seed recorded in manifests");
    app.add_option("--manifest", g.manifest_path, "Run manifest JSON path");

    // chunk
    auto* chunk_cmd = app.add_subcommand("chunk", "Split a document into token chunks");
    std::string chunk_in, chunk_out, chunk_doc_id = "doc", chunk_vocab;
    long chunk_size = 1000, chunk_overlap = 0;
    chunk_cmd->add_option("--in", chunk_in, "Input UTF-8 text file")->required();
    chunk_cmd->add_option("--out", chunk_out, "Output chunks JSONL")->required();
    chunk_cmd->add_option("--doc-id", chunk_doc_id, "Document id");
    chunk_cmd->add_option("--size", chunk_size, "Chunk size in tokens");
    chunk_cmd->add_option("--overlap", chunk_overlap, "Token overlap between chunks");
    chunk_cmd->add_option("--vocab", chunk_vocab, "Vocabulary file (enables vocab tokenizer)");

    // gen-qa
    auto* genqa_cmd = app.add_subcommand("gen-qa", "Generate a QA pair per chunk via an LLM");
    std::string genqa_chunks, genqa_out, genqa_template, genqa_url = "http://127.0.0.1:8080",
                genqa_model = "gpt-4";
    int genqa_retries = 2;
    genqa_cmd->add_option("--chunks", genqa_chunks)->required();
    genqa_cmd->add_option("--out", genqa_out)->required();
    genqa_cmd->add_option("--template", genqa_template, "Prompt template override");
    genqa_cmd->add_option("--base-url", genqa_url);
    genqa_cmd->add_option("--model", genqa_model);
    genqa_cmd->add_option("--retries", genqa_retries);

    // index-sparse
    auto* index_cmd = app.add_subcommand("index-sparse", "Build a BM25 postings index");
    std::string index_chunks, index_out, index_analyzer = "analyzed";
    std::string index_stopwords, index_stemmer, index_language = "pt";
    index_cmd->add_option("--chunks", index_chunks)->required();
    index_cmd->add_option("--out", index_out)->required();
    index_cmd->add_option("--analyzer", index_analyzer)
        ->check(CLI::IsMember({"analyzed", "basic"}));
    index_cmd->add_option("--stopwords", index_stopwords, "Stop-word list file");
    index_cmd->add_option("--stemmer", index_stemmer, "Stemmer rules file");
    index_cmd->add_option("--language", index_language);

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Embed chunks or queries into a vector store");
    std::string embed_chunks, embed_queries, embed_out, embed_url = "http://127.0.0.1:8080",
                embed_model = "ada-002";
    bool embed_jsonl = false;
    embed_cmd->add_option("--chunks", embed_chunks, "Chunks JSONL (embed chunk texts)");
    embed_cmd->add_option("--queries", embed_queries, "QA JSONL (embed question texts)");
    embed_cmd->add_option("--out", embed_out)->required();
    embed_cmd->add_flag("--jsonl", embed_jsonl, "Write JSONL instead of binary");
    embed_cmd->add_option("--base-url", embed_url);
    embed_cmd->add_option("--model", embed_model);

    // train-adapter
    auto* train_cmd = app.add_subcommand("train-adapter", "Train the embedding projection");
    std::string train_qa, train_chunk_store, train_query_store, train_out, train_loss_csv;
    ragkit::TrainConfig train_cfg;
    train_cmd->add_option("--qa", train_qa)->required();
    train_cmd->add_option("--chunk-embeddings", train_chunk_store)->required();
    train_cmd->add_option("--query-embeddings", train_query_store)->required();
    train_cmd->add_option("--out", train_out)->required();
    train_cmd->add_option("--loss-csv", train_loss_csv, "Per-epoch loss history CSV");
    train_cmd->add_option("--lr", train_cfg.learning_rate);
    train_cmd->add_option("--batch", train_cfg.batch_size);
    train_cmd->add_option("--epochs", train_cfg.epochs);
    train_cmd->add_option("--neg-ratio", train_cfg.neg_ratio);
    train_cmd->add_option("--proj-dim", train_cfg.projection_dim);
    train_cmd->add_option("--dropout", train_cfg.dropout_p);

    // search
    auto* search_cmd = app.add_subcommand("search", "Run a retriever over a query file");
    search_cmd->require_subcommand(1);
    std::string s_queries, s_out, s_run_tag = "run";
    int s_k = 10;

    auto* sparse_cmd = search_cmd->add_subcommand("sparse", "BM25 search");
    std::string sp_index;
    ragkit::Bm25Params bm25;
    sparse_cmd->add_option("--index", sp_index)->required();
    sparse_cmd->add_option("--query-file", s_queries)->required();
    sparse_cmd->add_option("--out", s_out)->required();
    sparse_cmd->add_option("--k", s_k);
    sparse_cmd->add_option("--k1", bm25.k1);
    sparse_cmd->add_option("--b", bm25.b);
    sparse_cmd->add_option("--run-tag", s_run_tag);

    auto* dense_cmd = search_cmd->add_subcommand("dense", "Cosine top-k search");
    std::string d_store, d_query_store, d_adapter;
    dense_cmd->add_option("--store", d_store)->required();
    dense_cmd->add_option("--query-embeddings", d_query_store)->required();
    dense_cmd->add_option("--adapter", d_adapter, "Project both sides through an adapter");
    dense_cmd->add_option("--query-file", s_queries, "Restrict/order queries (JSONL)");
    dense_cmd->add_option("--out", s_out)->required();
    dense_cmd->add_option("--k", s_k);
    dense_cmd->add_option("--run-tag", s_run_tag);

    auto* hybrid_cmd = search_cmd->add_subcommand("hybrid", "RRF fusion of run files");
    std::vector<std::string> h_runs;
    double h_fusion_k = -1.0;
    hybrid_cmd->add_option("--runs", h_runs, "Two or more run files")->required();
    hybrid_cmd->add_option("--fusion-k", h_fusion_k, "RRF k constant")->required();
    hybrid_cmd->add_option("--out", s_out)->required();
    hybrid_cmd->add_option("--k", s_k);
    hybrid_cmd->add_option("--run-tag", s_run_tag);

    auto* rerank_cmd = search_cmd->add_subcommand("rerank", "BM25 first stage + reranker");
    std::string r_index, r_chunks, r_url = "http://127.0.0.1:8080", r_model = "monot5";
    ragkit::MultiStageConfig ms_cfg;
    rerank_cmd->add_option("--index", r_index)->required();
    rerank_cmd->add_option("--chunks", r_chunks)->required();
    rerank_cmd->add_option("--query-file", s_queries)->required();
    rerank_cmd->add_option("--out", s_out)->required();
    rerank_cmd->add_option("--first-k", ms_cfg.first_stage_k);
    rerank_cmd->add_option("--k", s_k);
    rerank_cmd->add_option("--base-url", r_url);
    rerank_cmd->add_option("--model", r_model);
    rerank_cmd->add_option("--run-tag", s_run_tag);

    // eval-retrieval
    auto* evalret_cmd = app.add_subcommand("eval-retrieval", "Recall@k / MRR@k over a run file");
    std::string er_run, er_qrels, er_out;
    std::vector<int> er_ks{10};
    evalret_cmd->add_option("--run", er_run)->required();
    evalret_cmd->add_option("--qrels", er_qrels)->required();
    evalret_cmd->add_option("--k", er_ks, "Cutoffs");
    evalret_cmd->add_option("--out", er_out, "Aggregate JSON output");

    // eval-rag
    auto* evalrag_cmd = app.add_subcommand("eval-rag", "RAG run scored by the judge");
    std::string rag_qa, rag_chunks, rag_run, rag_tag = "rag", rag_answer_tmpl, rag_judge_tmpl;
    std::string rag_gen_url = "http://127.0.0.1:8080", rag_gen_model = "gpt-4";
    double rag_relmax = 0.0;
    int rag_k = 2;
    evalrag_cmd->add_option("--qa", rag_qa)->required();
    evalrag_cmd->add_option("--chunks", rag_chunks)->required();
    evalrag_cmd->add_option("--run", rag_run, "Run file supplying retrieval results")->required();
    evalrag_cmd->add_option("--k", rag_k);
    evalrag_cmd->add_option("--run-tag", rag_tag);
    evalrag_cmd->add_option("--relative-max", rag_relmax);
    evalrag_cmd->add_option("--answer-template", rag_answer_tmpl);
    evalrag_cmd->add_option("--judge-template", rag_judge_tmpl);
    evalrag_cmd->add_option("--base-url", rag_gen_url);
    evalrag_cmd->add_option("--model", rag_gen_model);

    // baseline
    auto* base_cmd = app.add_subcommand("baseline", "No-context baseline run");
    std::string b_qa, b_tag = "baseline", b_answer_tmpl, b_judge_tmpl;
    std::string b_url = "http://127.0.0.1:8080", b_model = "gpt-4";
    double b_relmax = 0.0;
    base_cmd->add_option("--qa", b_qa)->required();
    base_cmd->add_option("--run-tag", b_tag);
    base_cmd->add_option("--relative-max", b_relmax);
    base_cmd->add_option("--answer-template", b_answer_tmpl);
    base_cmd->add_option("--judge-template", b_judge_tmpl);
    base_cmd->add_option("--base-url", b_url);
    base_cmd->add_option("--model", b_model);

    // depth-sweep
    auto* depth_cmd = app.add_subcommand("depth-sweep", "Lost-in-the-middle depth x tokens grid");
    std::string ds_qa, ds_chunks, ds_out, ds_url = "http://127.0.0.1:8080", ds_model = "gpt-4";
    std::string ds_answer_tmpl, ds_judge_tmpl;
    std::vector<long> ds_tokens;
    std::vector<int> ds_depths{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    depth_cmd->add_option("--qa", ds_qa)->required();
    depth_cmd->add_option("--chunks", ds_chunks)->required();
    depth_cmd->add_option("--tokens", ds_tokens, "Token budgets")->required();
    depth_cmd->add_option("--depths", ds_depths, "Depth percentages");
    depth_cmd->add_option("--out", ds_out)->required();
    depth_cmd->add_option("--answer-template", ds_answer_tmpl);
    depth_cmd->add_option("--judge-template", ds_judge_tmpl);
    depth_cmd->add_option("--base-url", ds_url);
    depth_cmd->add_option("--model", ds_model);

    // sweep-k
    auto* sweep_cmd = app.add_subcommand("sweep-k", "Judge score per (retriever run, k)");
    std::string sw_qa, sw_chunks, sw_out, sw_url = "http://127.0.0.1:8080", sw_model = "gpt-4";
    std::string sw_answer_tmpl, sw_judge_tmpl;
    std::vector<std::string> sw_runs;
    std::vector<int> sw_ks{3};
    sweep_cmd->add_option("--qa", sw_qa)->required();
    sweep_cmd->add_option("--chunks", sw_chunks)->required();
    sweep_cmd->add_option("--runs", sw_runs, "Run files, one per retriever")->required();
    sweep_cmd->add_option("--k", sw_ks);
    sweep_cmd->add_option("--out", sw_out)->required();
    sweep_cmd->add_option("--answer-template", sw_answer_tmpl);
    sweep_cmd->add_option("--judge-template", sw_judge_tmpl);
    sweep_cmd->add_option("--base-url", sw_url);
    sweep_cmd->add_option("--model", sw_model);

    // report
    auto* report_cmd = app.add_subcommand("report", "Recompute a report from stored records");
    std::string rp_run_dir;
    report_cmd->add_option("--run", rp_run_dir, "Run directory under runs/")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    ragkit::WorkspaceLayout layout{g.workspace};
    layout.ensure_dirs();

    if (*chunk_cmd) {
        ragkit::TokenizerSpec spec;
        if (!chunk_vocab.empty()) {
            spec.kind = ragkit::TokenizerKind::vocab_file;
            spec.vocab_path = chunk_vocab;
        }
        auto tokenizer = ragkit::Tokenizer::make(spec);
        auto doc = ragkit::make_document(chunk_doc_id, ragkit::read_file(chunk_in), tokenizer);
        auto chunks = ragkit::chunk_naive(doc, tokenizer, chunk_size, chunk_overlap);
        ragkit::write_chunks_jsonl(chunk_out, chunks);
        std::cout << "wrote " << chunks.size() << " chunks to " << chunk_out << "\n";
        return 0;
    }

    if (*genqa_cmd) {
        auto chunks = ragkit::read_chunks_jsonl(genqa_chunks);
        auto tmpl = load_template_or(genqa_template, "make_qa.txt");
        ragkit::HttpGenerationClient client(client_config(g, genqa_url, genqa_model));
        auto dataset = ragkit::generate_qa_dataset(chunks, client, tmpl, genqa_retries);
        ragkit::write_qa_jsonl(genqa_out, dataset.pairs);
        std::cout << "wrote " << dataset.pairs.size() << " QA pairs (" << dataset.failures.size()
                  << " failures) to " << genqa_out << "\n";
        for (const auto& f : dataset.failures) {
            std::cerr << "failed chunk " << f.chunk_id << ": " << f.reason << "\n";
        }
        return 0;
    }

    if (*index_cmd) {
        ragkit::AnalyzerConfig analyzer;
        if (index_analyzer == "basic") {
            analyzer = ragkit::AnalyzerConfig::basic();
        } else {
            fs::path stop = index_stopwords.empty() ? data_dir() / "stopwords_pt.txt"
                                                    : fs::path(index_stopwords);
            fs::path stem = index_stemmer.empty() ? data_dir() / "stemmer_pt.rules"
                                                  : fs::path(index_stemmer);
            analyzer = ragkit::AnalyzerConfig::analyzed(stop, stem, index_language);
        }
        auto chunks = ragkit::read_chunks_jsonl(index_chunks);
        auto index = ragkit::PostingsIndex::build(chunks, analyzer);
        index.save(index_out);
        std::cout << "indexed " << index.corpus_size() << " chunks into " << index_out << "\n";
        return 0;
    }

    if (*embed_cmd) {
        if (embed_chunks.empty() == embed_queries.empty()) {
            std::cerr << "embed: pass exactly one of --chunks or --queries\n";
            return 2;
        }
        ragkit::HttpEmbeddingClient client(client_config(g, embed_url, embed_model));
        ragkit::EmbeddingStore store;
        if (!embed_chunks.empty()) {
            auto chunks = ragkit::read_chunks_jsonl(embed_chunks);
            auto result = ragkit::embed_corpus(chunks, client);
            for (const auto& f : result.failures) {
                std::cerr << "failed chunk " << f.chunk_id << ": " << f.reason << "\n";
            }
            store = std::move(result.store);
        } else {
            auto qa = ragkit::read_qa_jsonl(embed_queries);
            for (const auto& item : qa) {
                auto vecs = client.embed({item.question});
                store.add(item.id, std::move(vecs[0]));
            }
        }
        if (embed_jsonl) {
            store.save_jsonl(embed_out);
        } else {
            store.save(embed_out);
        }
        std::cout << "wrote " << store.size() << " vectors to " << embed_out << "\n";
        return 0;
    }

    if (*train_cmd) {
        auto qa = ragkit::read_qa_jsonl(train_qa);
        auto chunk_store = ragkit::EmbeddingStore::load(train_chunk_store);
        auto query_store = ragkit::EmbeddingStore::load(train_query_store);
        train_cfg.seed = static_cast<std::uint64_t>(g.seed);
        auto pairs =
            ragkit::make_pairs(qa, chunk_store, query_store, train_cfg.neg_ratio, train_cfg.seed);
        auto result = ragkit::train_adapter(pairs, train_cfg);
        result.adapter.save(train_out);
        if (!train_loss_csv.empty()) {
            std::string csv = "epoch,loss\n";
            for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
                csv += std::to_string(i) + "," + std::to_string(result.loss_history[i]) + "\n";
            }
            ragkit::atomic_write_file(train_loss_csv, csv);
        }
        std::cout << "trained adapter on " << pairs.size() << " pairs; final loss "
                  << result.loss_history.back() << "\n";
        return 0;
    }

    if (*search_cmd) {
        if (!ragkit::is_valid_run_tag(s_run_tag)) {
            std::cerr << "invalid run tag: " << s_run_tag << "\n";
            return 2;
        }
        std::vector<ragkit::RankedList> runs;
        if (*sparse_cmd) {
            auto index = ragkit::PostingsIndex::load(sp_index);
            for (const auto& q : read_query_file(s_queries)) {
                auto list = ragkit::bm25_search(index, q.text, bm25, s_k);
                list.query_id = q.id;
                runs.push_back(std::move(list));
            }
        } else if (*dense_cmd) {
            auto store = ragkit::EmbeddingStore::load(d_store);
            auto query_store = ragkit::EmbeddingStore::load(d_query_store);
            std::unique_ptr<ragkit::ProjectionAdapter> adapter;
            if (!d_adapter.empty()) {
                adapter = std::make_unique<ragkit::ProjectionAdapter>(
                    ragkit::ProjectionAdapter::load(d_adapter));
            }
            auto project = [&](const ragkit::EmbeddingVector& v) {
                if (!adapter) return v;
                ragkit::EmbeddingVector out;
                out.values.resize(adapter->output_dim);
                for (std::size_t row = 0; row < adapter->output_dim; ++row) {
                    double acc = 0.0;
                    for (std::size_t col = 0; col < adapter->input_dim; ++col) {
                        acc += adapter->at(row, col) * v.values[col];
                    }
                    out.values[row] = static_cast<float>(std::tanh(acc));
                }
                return out;
            };
            ragkit::EmbeddingStore search_store;
            for (const auto& [id, vec] : store.vectors()) search_store.add(id, project(vec));
            std::vector<QueryRecord> queries;
            if (!s_queries.empty()) {
                queries = read_query_file(s_queries);
            } else {
                for (const auto& [id, vec] : query_store.vectors()) queries.push_back({id, ""});
            }
            for (const auto& q : queries) {
                auto list = ragkit::dense_search(search_store, project(query_store.at(q.id)), s_k,
                                                 q.id);
                runs.push_back(std::move(list));
            }
        } else if (*hybrid_cmd) {
            if (h_runs.size() < 2) {
                std::cerr << "hybrid needs at least two --runs\n";
                return 2;
            }
            std::vector<std::vector<ragkit::RankedList>> inputs;
            for (const auto& p : h_runs) inputs.push_back(ragkit::read_run_file(p));
            std::map<std::string, std::vector<ragkit::RankedList>> by_query;
            for (const auto& run : inputs) {
                for (const auto& list : run) by_query[list.query_id].push_back(list);
            }
            for (auto& [query_id, lists] : by_query) {
                if (lists.size() < 2) continue;
                auto fused = ragkit::rrf_fuse(lists, ragkit::FusionConfig{h_fusion_k});
                if (static_cast<int>(fused.entries.size()) > s_k) {
                    fused.entries.resize(s_k);
                }
                runs.push_back(std::move(fused));
            }
        } else if (*rerank_cmd) {
            auto index = ragkit::PostingsIndex::load(r_index);
            auto chunks = chunk_map(ragkit::read_chunks_jsonl(r_chunks));
            ragkit::HttpRerankClient scorer(client_config(g, r_url, r_model));
            ragkit::MultiStageConfig cfg = ms_cfg;
            cfg.final_k = s_k;
            ragkit::FirstStageRetriever first = [&](const std::string& query, int k) {
                return ragkit::bm25_search(index, query, ragkit::Bm25Params{}, k);
            };
            for (const auto& q : read_query_file(s_queries)) {
                auto result =
                    ragkit::retrieve_and_rerank(q.id, q.text, first, scorer, chunks, cfg);
                runs.push_back(std::move(result.list));
            }
        }
        ragkit::write_run_file(s_out, runs, s_run_tag);
        std::cout << "wrote run file " << s_out << " (" << runs.size() << " queries)\n";
        return 0;
    }

    if (*evalret_cmd) {
        auto runs = ragkit::read_run_file(er_run);
        auto qrels = ragkit::read_qrels(er_qrels);
        json out;
        for (int k : er_ks) {
            auto recall = ragkit::recall_at_k(runs, qrels, k);
            auto mrr = ragkit::mrr_at_k(runs, qrels, k);
            out["recall@" + std::to_string(k)] = recall.aggregate;
            out["mrr@" + std::to_string(k)] = mrr.aggregate;
            std::cout << "recall@" << k << " = " << recall.aggregate << ", mrr@" << k << " = "
                      << mrr.aggregate << "\n";
        }
        if (!er_out.empty()) ragkit::atomic_write_file(er_out, out.dump(2));
        return 0;
    }

    auto run_and_store = [&](const ragkit::EvalReport& report, const ragkit::RunManifest& manifest) {
        fs::path run_dir = layout.runs() / manifest.run_tag;
        fs::create_directories(run_dir);
        manifest.save(run_dir / "manifest.json");
        ragkit::write_records_jsonl(run_dir / "records.jsonl", report.records);
        ragkit::write_report_json(run_dir / "report.json", report);
        std::cout << "run " << manifest.run_tag << ": mean " << report.mean_score << ", coverage "
                  << report.coverage;
        if (report.relative_maximum > 0.0) {
            std::cout << ", degradation "
                      << ragkit::format_degradation_percent(report.degradation);
        }
        std::cout << "\n";
    };

    if (*evalrag_cmd) {
        if (!ragkit::is_valid_run_tag(rag_tag)) {
            std::cerr << "invalid run tag: " << rag_tag << "\n";
            return 2;
        }
        auto qa = ragkit::read_qa_jsonl(rag_qa);
        auto chunks = chunk_map(ragkit::read_chunks_jsonl(rag_chunks));
        auto runs = ragkit::read_run_file(rag_run);
        std::map<std::string, ragkit::RankedList> by_query;
        for (const auto& r : runs) by_query[r.query_id] = r;
        std::map<std::string, std::string> question_to_id;
        for (const auto& item : qa) question_to_id[item.question] = item.id;
        ragkit::Retriever retriever = [&](const std::string& query, int top_k) {
            auto qit = question_to_id.find(query);
            if (qit == question_to_id.end()) {
                throw std::runtime_error("no run entry for question: " + query);
            }
            auto rit = by_query.find(qit->second);
            if (rit == by_query.end()) {
                throw std::runtime_error("query missing from run file: " + qit->second);
            }
            ragkit::RankedList list = rit->second;
            if (static_cast<int>(list.entries.size()) > top_k) list.entries.resize(top_k);
            return list;
        };
        auto answer_tmpl = load_template_or(rag_answer_tmpl, "answer.txt");
        auto judge_tmpl = load_template_or(rag_judge_tmpl, "evaluator.txt");
        ragkit::HttpGenerationClient generator(client_config(g, rag_gen_url, rag_gen_model));
        ragkit::HttpGenerationClient judge(client_config(g, rag_gen_url, rag_gen_model));
        ragkit::RunManifest manifest;
        if (!g.manifest_path.empty()) manifest = ragkit::RunManifest::load(g.manifest_path);
        manifest.run_tag = rag_tag;
        manifest.retriever_kind = "run-file:" + rag_run;
        manifest.retrieved_k = rag_k;
        manifest.generator_model = rag_gen_model;
        manifest.judge_model = rag_gen_model;
        manifest.seed = g.seed;
        manifest.client_mode = g.mode;
        manifest.answer_template_id = rag_answer_tmpl.empty() ? "bundled:answer" : rag_answer_tmpl;
        manifest.judge_template_id =
            rag_judge_tmpl.empty() ? "bundled:evaluator" : rag_judge_tmpl;
        auto report = ragkit::run_rag(qa, retriever, rag_k, chunks, generator, judge, answer_tmpl,
                                      judge_tmpl, manifest, rag_relmax);
        run_and_store(report, manifest);
        return 0;
    }

    if (*base_cmd) {
        if (!ragkit::is_valid_run_tag(b_tag)) {
            std::cerr << "invalid run tag: " << b_tag << "\n";
            return 2;
        }
        auto qa = ragkit::read_qa_jsonl(b_qa);
        auto answer_tmpl = load_template_or(b_answer_tmpl, "answer.txt");
        auto judge_tmpl = load_template_or(b_judge_tmpl, "evaluator.txt");
        ragkit::HttpGenerationClient generator(client_config(g, b_url, b_model));
        ragkit::HttpGenerationClient judge(client_config(g, b_url, b_model));
        ragkit::RunManifest manifest;
        manifest.run_tag = b_tag;
        manifest.retriever_kind = "none";
        manifest.generator_model = b_model;
        manifest.judge_model = b_model;
        manifest.seed = g.seed;
        manifest.client_mode = g.mode;
        manifest.answer_template_id = b_answer_tmpl.empty() ? "bundled:answer" : b_answer_tmpl;
        manifest.judge_template_id = b_judge_tmpl.empty() ? "bundled:evaluator" : b_judge_tmpl;
        auto report = ragkit::run_baseline_no_context(qa, generator, judge, answer_tmpl,
                                                      judge_tmpl, manifest, b_relmax);
        run_and_store(report, manifest);
        return 0;
    }

    if (*depth_cmd) {
        auto qa = ragkit::read_qa_jsonl(ds_qa);
        auto chunks = ragkit::read_chunks_jsonl(ds_chunks);
        auto answer_tmpl = load_template_or(ds_answer_tmpl, "answer.txt");
        auto judge_tmpl = load_template_or(ds_judge_tmpl, "evaluator.txt");
        ragkit::HttpGenerationClient generator(client_config(g, ds_url, ds_model));
        ragkit::HttpGenerationClient judge(client_config(g, ds_url, ds_model));
        auto result = ragkit::run_depth_sweep(qa, chunks, generator, judge, answer_tmpl,
                                              judge_tmpl, ds_tokens, ds_depths);
        ragkit::write_depth_sweep_csv(ds_out, result);
        std::cout << "wrote depth sweep " << ds_out << " (" << result.cells.size() << " cells)\n";
        return 0;
    }

    if (*sweep_cmd) {
        auto qa = ragkit::read_qa_jsonl(sw_qa);
        auto chunks = chunk_map(ragkit::read_chunks_jsonl(sw_chunks));
        auto answer_tmpl = load_template_or(sw_answer_tmpl, "answer.txt");
        auto judge_tmpl = load_template_or(sw_judge_tmpl, "evaluator.txt");
        ragkit::HttpGenerationClient generator(client_config(g, sw_url, sw_model));
        ragkit::HttpGenerationClient judge(client_config(g, sw_url, sw_model));
        std::map<std::string, std::string> question_to_id;
        for (const auto& item : qa) question_to_id[item.question] = item.id;
        std::map<std::string, ragkit::Retriever> retrievers;
        for (const auto& path : sw_runs) {
            auto runs = ragkit::read_run_file(path);
            auto by_query = std::make_shared<std::map<std::string, ragkit::RankedList>>();
            for (const auto& r : runs) (*by_query)[r.query_id] = r;
            retrievers[fs::path(path).stem().string()] =
                [by_query, &question_to_id](const std::string& query, int top_k) {
                    auto qit = question_to_id.find(query);
                    if (qit == question_to_id.end()) {
                        throw std::runtime_error("no run entry for question: " + query);
                    }
                    ragkit::RankedList list = by_query->at(qit->second);
                    if (static_cast<int>(list.entries.size()) > top_k) list.entries.resize(top_k);
                    return list;
                };
        }
        auto table = ragkit::sweep_chunk_count(qa, retrievers, sw_ks, chunks, generator, judge,
                                               answer_tmpl, judge_tmpl);
        ragkit::write_sweep_csv(sw_out, table);
        std::cout << "wrote sweep table " << sw_out << " (" << table.cells.size() << " cells)\n";
        return 0;
    }

    if (*report_cmd) {
        fs::path run_dir = rp_run_dir;
        auto manifest = ragkit::RunManifest::load(run_dir / "manifest.json");
        auto records = ragkit::read_records_jsonl(run_dir / "records.jsonl");
        double relmax = 0.0;
        if (fs::exists(run_dir / "report.json")) {
            relmax = ragkit::read_report_json(run_dir / "report.json").relative_maximum;
        }
        auto report = ragkit::make_report(manifest.run_tag, std::move(records), relmax);
        ragkit::write_report_json(run_dir / "report.json", report);
        json summary{{"run_tag", report.run_tag},
                     {"mean_score", report.mean_score},
                     {"relative_maximum", report.relative_maximum},
                     {"degradation", report.degradation},
                     {"degradation_display",
                      ragkit::format_degradation_percent(report.degradation)},
                     {"coverage", report.coverage}};
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError&) {
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
