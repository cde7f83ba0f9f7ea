#include <cmath>
#include <limits>

#include "doctest.h"

#include "ragkit/model_clients.hpp"
#include "ragkit/rerank.hpp"
#include "test_util.hpp"

using namespace ragkit;

namespace {

std::map<std::string, Chunk> chunk_map(int count) {
    std::map<std::string, Chunk> m;
    for (int i = 0; i < count; ++i) {
        std::string id = "c" + std::to_string(i);
        m[id] = Chunk{id, "doc", "texto do chunk " + std::to_string(i), i * 10L, 10};
    }
    return m;
}

FirstStageRetriever fixed_order(const std::vector<std::string>& ids) {
    return [ids](const std::string&, int top_k) {
        RankedList l;
        l.query_id = "q";
        for (std::size_t i = 0; i < ids.size() && static_cast<int>(i) < top_k; ++i) {
            l.entries.push_back({ids[i], 1.0 / static_cast<double>(i + 1),
                                 static_cast<int>(i) + 1});
        }
        return l;
    };
}

}  // namespace

TEST_CASE("format_scoring_input is byte-stable") {
    CHECK(format_scoring_input("q", "d") == "Query: q Document: d Relevant:");
    CHECK(format_scoring_input("q", "") == "Query: q Document:  Relevant:");
    CHECK(format_scoring_input("{a}", "{b}") == "Query: {a} Document: {b} Relevant:");
}

TEST_CASE("normalize_yes_no: symmetry, closed form, stability, translation invariance") {
    CHECK(normalize_yes_no(2.5, 2.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normalize_yes_no(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-12));
    double huge = normalize_yes_no(1000.0, 0.0);
    CHECK(huge > 0.999);
    CHECK(std::isfinite(huge));
    double base = normalize_yes_no(1.3, -0.4);
    CHECK(normalize_yes_no(1.3 + 1000.0, -0.4 + 1000.0) ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK_THROWS(normalize_yes_no(std::numeric_limits<double>::infinity(), 0.0));
    CHECK_THROWS(normalize_yes_no(0.0, std::nan("")));
}

TEST_CASE("retrieve_and_rerank: scorer echoing first-stage order preserves it") {
    auto chunks = chunk_map(6);
    CallbackRerankClient echo([](const std::string&, const std::vector<RerankDocument>& docs) {
        std::vector<RelevanceScore> out;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            out.push_back({docs[i].id, 1.0 - 0.1 * static_cast<double>(i)});
        }
        return out;
    });
    MultiStageConfig cfg{5, 3};
    auto result = retrieve_and_rerank("q", "pergunta",
                                      fixed_order({"c3", "c0", "c5", "c1", "c2"}), echo, chunks,
                                      cfg);
    REQUIRE(result.list.entries.size() == 3);
    CHECK(result.list.entries[0].chunk_id == "c3");
    CHECK(result.list.entries[1].chunk_id == "c0");
    CHECK(result.list.entries[2].chunk_id == "c5");
    // first-stage scores retained for all candidates
    CHECK(result.first_stage_scores.size() == 5);
}

TEST_CASE("retrieve_and_rerank: oracle scorer puts gold first") {
    auto chunks = chunk_map(10);
    std::string gold = "c7";
    CallbackRerankClient oracle([&](const std::string&, const std::vector<RerankDocument>& docs) {
        std::vector<RelevanceScore> out;
        for (const auto& d : docs) out.push_back({d.id, d.id == gold ? 1.0 : 0.0});
        return out;
    });
    MultiStageConfig cfg{10, 5};
    auto result = retrieve_and_rerank(
        "q", "pergunta", fixed_order({"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"}), oracle,
        chunks, cfg);
    REQUIRE(!result.list.entries.empty());
    CHECK(result.list.entries[0].chunk_id == gold);
}

TEST_CASE("retrieve_and_rerank: output ids are a subset of first-stage candidates") {
    auto chunks = chunk_map(8);
    CallbackRerankClient constant([](const std::string&, const std::vector<RerankDocument>& docs) {
        std::vector<RelevanceScore> out;
        for (const auto& d : docs) out.push_back({d.id, 0.5});
        return out;
    });
    std::vector<std::string> first{"c4", "c1", "c6"};
    MultiStageConfig cfg{3, 3};
    auto result = retrieve_and_rerank("q", "x", fixed_order(first), constant, chunks, cfg);
    REQUIRE(result.list.entries.size() == 3);
    // constant scorer: ties fall back to first-stage order
    CHECK(result.list.entries[0].chunk_id == "c4");
    CHECK(result.list.entries[1].chunk_id == "c1");
    CHECK(result.list.entries[2].chunk_id == "c6");
}

TEST_CASE("retrieve_and_rerank: unscored candidates sort last; all-fail aborts") {
    auto chunks = chunk_map(4);
    // scorer omits c1 from its response
    CallbackRerankClient partial([](const std::string&, const std::vector<RerankDocument>& docs) {
        std::vector<RelevanceScore> out;
        for (const auto& d : docs) {
            if (d.id != "c1") out.push_back({d.id, d.id == "c2" ? 0.9 : 0.4});
        }
        return out;
    });
    MultiStageConfig cfg{4, 4};
    auto result =
        retrieve_and_rerank("q", "x", fixed_order({"c1", "c2", "c3"}), partial, chunks, cfg);
    REQUIRE(result.list.entries.size() == 3);
    CHECK(result.list.entries[0].chunk_id == "c2");
    CHECK(result.list.entries.back().chunk_id == "c1");
    REQUIRE(result.unscored_ids.size() == 1);
    CHECK(result.unscored_ids[0] == "c1");

    CallbackRerankClient all_fail([](const std::string&, const std::vector<RerankDocument>&) {
        return std::vector<RelevanceScore>{};
    });
    CHECK_THROWS(retrieve_and_rerank("q", "x", fixed_order({"c1", "c2"}), all_fail, chunks, cfg));
}

TEST_CASE("retrieve_and_rerank: empty first stage is an error; defaults documented") {
    MultiStageConfig cfg;
    CHECK(cfg.first_stage_k == 50);
    auto chunks = chunk_map(2);
    CallbackRerankClient any([](const std::string&, const std::vector<RerankDocument>& docs) {
        std::vector<RelevanceScore> out;
        for (const auto& d : docs) out.push_back({d.id, 0.5});
        return out;
    });
    CHECK_THROWS(retrieve_and_rerank("q", "x", fixed_order({}), any, chunks, cfg));
}
