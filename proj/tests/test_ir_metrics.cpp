#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "ragkit/ir_metrics.hpp"
#include "ragkit/workspace.hpp"
#include "test_util.hpp"

using namespace ragkit;
using testutil::TempDir;

namespace {

RankedList list_of(const std::string& query_id, const std::vector<std::string>& ids) {
    RankedList l;
    l.query_id = query_id;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        l.entries.push_back({ids[i], 1.0 / static_cast<double>(i + 1), static_cast<int>(i) + 1});
    }
    return l;
}

}  // namespace

TEST_CASE("recall@k: single-relevant boundary at the cutoff") {
    Qrels qrels{{"q1", {"gold"}}};
    auto run = list_of("q1", {"a", "b", "gold", "c"});
    CHECK(recall_at_k({run}, qrels, 3).per_query.at("q1") == doctest::Approx(1.0));
    CHECK(recall_at_k({run}, qrels, 2).per_query.at("q1") == doctest::Approx(0.0));
    auto empty = list_of("q1", {});
    CHECK(recall_at_k({empty}, qrels, 5).per_query.at("q1") == doctest::Approx(0.0));
}

TEST_CASE("mrr@k: reciprocal rank and cutoff exclusion") {
    Qrels qrels{{"q1", {"gold"}}};
    auto run = list_of("q1", {"a", "b", "gold"});
    CHECK(mrr_at_k({run}, qrels, 10).per_query.at("q1") == doctest::Approx(1.0 / 3.0));
    std::vector<std::string> eleven;
    for (int i = 0; i < 10; ++i) eleven.push_back("x" + std::to_string(i));
    eleven.push_back("gold");
    CHECK(mrr_at_k({list_of("q1", eleven)}, qrels, 10).per_query.at("q1") == doctest::Approx(0.0));
}

TEST_CASE("metrics error on queries missing from qrels") {
    Qrels qrels{{"q1", {"gold"}}};
    auto run = list_of("q_unknown", {"a"});
    CHECK_THROWS(recall_at_k({run}, qrels, 3));
    CHECK_THROWS(mrr_at_k({run}, qrels, 3));
}

TEST_CASE("metrics equal brute-force recount on random runs") {
    std::mt19937_64 rng(17);
    std::vector<std::string> pool;
    for (int i = 0; i < 15; ++i) pool.push_back("c" + std::to_string(i));
    std::uniform_int_distribution<int> n_results(0, 15);
    std::uniform_int_distribution<int> n_rel(1, 3);
    std::uniform_int_distribution<int> k_dist(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RankedList> runs;
        Qrels qrels;
        for (int q = 0; q < 20; ++q) {
            std::string qid = "q" + std::to_string(q);
            auto ids = pool;
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(n_results(rng));
            runs.push_back(list_of(qid, ids));
            auto rel = pool;
            std::shuffle(rel.begin(), rel.end(), rng);
            qrels[qid] = std::set<std::string>(rel.begin(), rel.begin() + n_rel(rng));
        }
        int k = k_dist(rng);
        auto recall = recall_at_k(runs, qrels, k);
        auto mrr = mrr_at_k(runs, qrels, k);
        double recall_sum = 0.0, mrr_sum = 0.0;
        for (const auto& run : runs) {
            const auto& rel = qrels.at(run.query_id);
            long hits = 0;
            double rr = 0.0;
            for (std::size_t i = 0; i < run.entries.size() && static_cast<int>(i) < k; ++i) {
                if (rel.count(run.entries[i].chunk_id)) {
                    ++hits;
                    if (rr == 0.0) rr = 1.0 / static_cast<double>(i + 1);
                }
            }
            double r = static_cast<double>(hits) / static_cast<double>(rel.size());
            CHECK(recall.per_query.at(run.query_id) == doctest::Approx(r).epsilon(1e-12));
            CHECK(mrr.per_query.at(run.query_id) == doctest::Approx(rr).epsilon(1e-12));
            // per-query RR never exceeds 1 while recall is bounded the same way
            CHECK(rr <= 1.0);
            recall_sum += r;
            mrr_sum += rr;
        }
        CHECK(recall.aggregate ==
              doctest::Approx(recall_sum / static_cast<double>(runs.size())).epsilon(1e-12));
        CHECK(mrr.aggregate ==
              doctest::Approx(mrr_sum / static_cast<double>(runs.size())).epsilon(1e-12));
        // non-decreasing in k, and invariant to entries below the cutoff
        if (k > 1) {
            CHECK(recall_at_k(runs, qrels, k - 1).aggregate <= recall.aggregate + 1e-12);
            CHECK(mrr_at_k(runs, qrels, k - 1).aggregate <= mrr.aggregate + 1e-12);
        }
        std::vector<RankedList> truncated;
        for (auto run : runs) {
            if (static_cast<int>(run.entries.size()) > k) run.entries.resize(k);
            truncated.push_back(std::move(run));
        }
        CHECK(recall_at_k(truncated, qrels, k).aggregate ==
              doctest::Approx(recall.aggregate).epsilon(1e-12));
        CHECK(mrr_at_k(truncated, qrels, k).aggregate ==
              doctest::Approx(mrr.aggregate).epsilon(1e-12));
    }
}

TEST_CASE("qrels file round-trip") {
    TempDir tmp;
    Qrels qrels{{"q1", {"c1", "c2"}}, {"q2", {"c9"}}};
    auto path = tmp.path / "qrels.txt";
    write_qrels(path, qrels);
    CHECK(read_qrels(path) == qrels);
}

TEST_CASE("metric CSV emission") {
    TempDir tmp;
    Qrels qrels{{"q1", {"gold"}}};
    auto report = recall_at_k({list_of("q1", {"gold"})}, qrels, 1);
    auto path = tmp.path / "metric.csv";
    write_metric_csv(path, report);
    auto content = read_file(path);
    CHECK(content.find("q1") != std::string::npos);
    CHECK(content.find("recall") != std::string::npos);
}

TEST_CASE("bleu: identity, disjoint, empty") {
    CHECK(bleu("o gato corre", "o gato corre") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu("aaa bbb", "ccc ddd") == doctest::Approx(0.0));
    CHECK(bleu("", "algo") == doctest::Approx(0.0));
}

TEST_CASE("bleu: frozen value for the two reference sentences") {
    // Candidate/reference pair with 2/4 shared unigrams... computed by hand:
    // candidate "a b c d", reference "a b x y": p1 = 2/4, p2 = 1/3, BP = 1
    // BLEU-2 = sqrt(1/2 * 1/3)
    double got = bleu("a b c d", "a b x y", BleuConfig{2, 0.0, true});
    CHECK(got == doctest::Approx(std::sqrt(0.5 / 3.0)).epsilon(1e-12));

    // The documented demonstration pair: same fact phrased two ways.
    // Tokens: candidate 8, reference 10 (hyphenated word stays one token).
    // p1 = 4/8, p2 = 2/7, BP = exp(1 - 10/8).
    std::string s1 = "Brazil has won 5 FIFA World Cup titles.";
    std::string s2 = "Brazil is the five-time champion of the FIFA World Cup.";
    double want = std::exp(-0.25) * std::sqrt(0.5 * 2.0 / 7.0);
    double demo = bleu(s1, s2, BleuConfig{});
    CHECK(demo == doctest::Approx(want).epsilon(1e-12));
    CHECK(demo == doctest::Approx(0.29435).epsilon(1e-4));
    CHECK(demo >= 0.0);
    CHECK(demo <= 1.0);
}

TEST_CASE("rouge: identity, disjoint, frozen bigram recall") {
    CHECK(rouge("o gato corre", "o gato corre") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rouge("aaa bbb", "ccc ddd") == doctest::Approx(0.0));
    std::string s1 = "Brazil has won 5 FIFA World Cup titles.";
    std::string s2 = "Brazil is the five-time champion of the FIFA World Cup.";
    // reference bigrams: 9; matched: "fifa world", "world cup" -> recall 2/9
    double demo = rouge(s1, s2, RougeConfig{});
    CHECK(demo == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
}
