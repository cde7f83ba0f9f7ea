#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "doctest.h"

#include "ragkit/adapter.hpp"
#include "test_util.hpp"

using namespace ragkit;
using testutil::TempDir;

namespace {

EmbeddingVector rand_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    EmbeddingVector v;
    v.values.resize(dim);
    double norm = 0.0;
    for (auto& x : v.values) {
        x = g(rng);
        norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v.values) x = static_cast<float>(x / norm);
    return v;
}

// Separable synthetic set: positives are small perturbations of a shared
// query direction, negatives are independent random chunks.
std::vector<LabeledPair> synthetic_pairs(std::mt19937_64& rng, int positives, int neg_ratio,
                                         std::size_t dim) {
    std::normal_distribution<float> noise(0.0f, 0.05f);
    std::vector<LabeledPair> pairs;
    for (int i = 0; i < positives; ++i) {
        auto q = rand_unit(rng, dim);
        auto c = q;
        for (auto& x : c.values) x += noise(rng);
        pairs.push_back({q, c, 1});
        for (int n = 0; n < neg_ratio; ++n) {
            pairs.push_back({q, rand_unit(rng, dim), -1});
        }
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    return pairs;
}

EmbeddingStore store_of(const std::vector<std::pair<std::string, EmbeddingVector>>& items) {
    EmbeddingStore s;
    for (const auto& [id, v] : items) s.add(id, v);
    return s;
}

}  // namespace

TEST_CASE("make_pairs: 100 positives at ratio 3 gives 400 pairs") {
    std::mt19937_64 rng(1);
    std::vector<QAPair> qa;
    std::vector<std::pair<std::string, EmbeddingVector>> chunk_items, query_items;
    for (int i = 0; i < 100; ++i) {
        std::string cid = "c" + std::to_string(i);
        std::string qid = "q" + std::to_string(i);
        qa.push_back({qid, "pergunta " + std::to_string(i), "resposta", cid});
        chunk_items.push_back({cid, rand_unit(rng, 8)});
        query_items.push_back({qid, rand_unit(rng, 8)});
    }
    auto chunk_store = store_of(chunk_items);
    auto query_store = store_of(query_items);
    auto pairs = make_pairs(qa, chunk_store, query_store, 3, 42);
    CHECK(pairs.size() == 400);
    int positives = 0;
    for (const auto& p : pairs) {
        if (p.label == 1) ++positives;
    }
    CHECK(positives == 100);

    // ratio 0 -> positives only
    CHECK(make_pairs(qa, chunk_store, query_store, 0, 42).size() == 100);

    // determinism for a fixed seed
    auto again = make_pairs(qa, chunk_store, query_store, 3, 42);
    REQUIRE(again.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(again[i].label == pairs[i].label);
        CHECK(again[i].chunk_vec.values == pairs[i].chunk_vec.values);
    }

    // neg_ratio >= corpus size is unsatisfiable without duplicating positives
    std::vector<QAPair> tiny_qa(qa.begin(), qa.begin() + 2);
    auto tiny_chunks = store_of({chunk_items[0], chunk_items[1]});
    CHECK_THROWS(make_pairs(tiny_qa, tiny_chunks, query_store, 2, 42));
}

TEST_CASE("forward: identity-like W reproduces cosine structure") {
    std::size_t dim = 3;
    ProjectionAdapter adapter;
    adapter.input_dim = dim;
    adapter.output_dim = dim;
    adapter.dropout_p = 0.0;
    adapter.weights.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) adapter.at(i, i) = 1.0;

    LabeledPair same{EmbeddingVector{{0.5f, -0.2f, 0.9f}}, EmbeddingVector{{0.5f, -0.2f, 0.9f}}, 1};
    CHECK(adapter_forward(adapter, same) == doctest::Approx(1.0).epsilon(1e-9));

    // disjoint supports stay orthogonal through elementwise tanh
    LabeledPair ortho{EmbeddingVector{{0.7f, 0.0f, 0.0f}}, EmbeddingVector{{0.0f, 0.0f, 0.3f}}, -1};
    CHECK(adapter_forward(adapter, ortho) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("forward: 4->3 case matches hand computation") {
    ProjectionAdapter adapter;
    adapter.input_dim = 4;
    adapter.output_dim = 3;
    adapter.dropout_p = 0.0;
    adapter.weights = {0.1, -0.2, 0.3, 0.0,
                       0.5, 0.1, -0.4, 0.2,
                       -0.3, 0.6, 0.0, 0.1};
    LabeledPair pair{EmbeddingVector{{1.0f, 0.5f, -1.0f, 2.0f}},
                     EmbeddingVector{{0.0f, 1.0f, 1.0f, -0.5f}}, 1};
    auto project = [&](const EmbeddingVector& v) {
        std::array<double, 3> out{};
        for (int r = 0; r < 3; ++r) {
            double acc = 0.0;
            for (int c = 0; c < 4; ++c) acc += adapter.at(r, c) * v.values[c];
            out[r] = std::tanh(acc);
        }
        return out;
    };
    auto u = project(pair.query_vec);
    auto w = project(pair.chunk_vec);
    double dot = 0, nu = 0, nw = 0;
    for (int i = 0; i < 3; ++i) {
        dot += u[i] * w[i];
        nu += u[i] * u[i];
        nw += w[i] * w[i];
    }
    double want = dot / (std::sqrt(nu) * std::sqrt(nw));
    CHECK(adapter_forward(adapter, pair) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("forward: dropout only in train mode; inference deterministic") {
    auto adapter = ProjectionAdapter::random_init(6, 4, 0.5, 123);
    std::mt19937_64 rng(7);
    LabeledPair pair{EmbeddingVector{{1, 2, 3, 4, 5, 6}}, EmbeddingVector{{6, 5, 4, 3, 2, 1}}, 1};
    double inf1 = adapter_forward(adapter, pair);
    double inf2 = adapter_forward(adapter, pair);
    CHECK(inf1 == inf2);
    // train mode with p=0.5 consumes rng and generally deviates; a mask that
    // drops an entire projection collapses it to zero, which throws
    std::vector<double> train_vals;
    for (int i = 0; i < 16; ++i) {
        try {
            train_vals.push_back(adapter_forward(adapter, pair, true, rng));
        } catch (const std::exception&) {
            // all four outputs dropped on one side; legitimate at p = 0.5
        }
    }
    bool any_diff = std::any_of(train_vals.begin(), train_vals.end(),
                                [&](double v) { return v != inf1; });
    CHECK(any_diff);
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim_in(2, 6), dim_out(2, 5), n_pairs(1, 4);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t in = dim_in(rng), out = dim_out(rng);
        auto adapter = ProjectionAdapter::random_init(in, out, 0.0, 1000 + trial);
        std::vector<LabeledPair> batch;
        int n = n_pairs(rng);
        for (int i = 0; i < n; ++i) {
            batch.push_back({rand_unit(rng, in), rand_unit(rng, in), (i % 2 == 0) ? 1 : -1});
        }
        std::vector<double> grad;
        adapter_loss_and_gradient(adapter, batch, grad);
        REQUIRE(grad.size() == adapter.weights.size());
        const double h = 1e-6;
        for (std::size_t w = 0; w < adapter.weights.size(); ++w) {
            auto plus = adapter, minus = adapter;
            plus.weights[w] += h;
            minus.weights[w] -= h;
            std::vector<double> scratch;
            double fp = adapter_loss_and_gradient(plus, batch, scratch);
            double fm = adapter_loss_and_gradient(minus, batch, scratch);
            double fd = (fp - fm) / (2 * h);
            double denom = std::max({std::fabs(fd), std::fabs(grad[w]), 1e-8});
            CHECK(std::fabs(fd - grad[w]) / denom < 1e-4);
        }
    }
}

TEST_CASE("training lifts accuracy on separable data; loss history sane") {
    std::mt19937_64 rng(77);
    auto train_set = synthetic_pairs(rng, 40, 3, 8);
    auto test_set = synthetic_pairs(rng, 20, 3, 8);
    TrainConfig cfg;
    cfg.projection_dim = 16;
    cfg.epochs = 200;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;
    cfg.dropout_p = 0.0;
    cfg.seed = 42;
    auto before = eval_accuracy(nullptr, test_set, ThresholdPolicy::fixed(0.9999));
    auto result = train_adapter(train_set, cfg);
    auto after = eval_accuracy(&result.adapter, test_set, ThresholdPolicy::sweep());
    CHECK(after.accuracy >= 0.95);
    CHECK(result.loss_history.size() == static_cast<std::size_t>(cfg.epochs) + 1);
    CHECK(result.loss_history.back() < result.loss_history.front());
    // determinism: identical config reproduces identical weights
    auto again = train_adapter(train_set, cfg);
    CHECK(again.adapter.weights == result.adapter.weights);
    (void)before;
}

TEST_CASE("full-batch training loss is monotone non-increasing") {
    std::mt19937_64 rng(5);
    auto pairs = synthetic_pairs(rng, 10, 1, 6);
    TrainConfig cfg;
    cfg.projection_dim = 8;
    cfg.epochs = 60;
    cfg.learning_rate = 0.01;
    cfg.batch_size = static_cast<int>(pairs.size());  // full batch
    cfg.dropout_p = 0.0;
    auto result = train_adapter(pairs, cfg);
    for (std::size_t i = 1; i < result.loss_history.size(); ++i) {
        CHECK(result.loss_history[i] <= result.loss_history[i - 1] + 1e-9);
    }
}

TEST_CASE("learning rate 0 leaves the adapter at its initialization") {
    std::mt19937_64 rng(8);
    auto pairs = synthetic_pairs(rng, 5, 1, 4);
    TrainConfig cfg;
    cfg.projection_dim = 4;
    cfg.epochs = 10;
    cfg.learning_rate = 0.0;
    cfg.dropout_p = 0.0;
    cfg.seed = 99;
    auto result = train_adapter(pairs, cfg);
    auto init = ProjectionAdapter::random_init(4, 4, 0.0, 99);
    CHECK(result.adapter.weights == init.weights);
}

TEST_CASE("train rejects empty and single-class input") {
    CHECK_THROWS(train_adapter({}, TrainConfig{}));
    std::mt19937_64 rng(1);
    std::vector<LabeledPair> one_class{{rand_unit(rng, 4), rand_unit(rng, 4), 1}};
    TrainConfig cfg;
    cfg.projection_dim = 4;
    CHECK_THROWS(train_adapter(one_class, cfg));
}

TEST_CASE("eval_accuracy: perfect signs give accuracy 1 at threshold 0") {
    // W identity on 2 dims; pairs aligned (+1) and opposed (-1)
    ProjectionAdapter adapter;
    adapter.input_dim = 2;
    adapter.output_dim = 2;
    adapter.weights = {1, 0, 0, 1};
    std::vector<LabeledPair> pairs{
        {EmbeddingVector{{1, 1}}, EmbeddingVector{{1, 1}}, 1},
        {EmbeddingVector{{1, 1}}, EmbeddingVector{{-1, -1}}, -1},
    };
    auto res = eval_accuracy(&adapter, pairs, ThresholdPolicy::fixed(0.0));
    CHECK(res.accuracy == doctest::Approx(1.0));
}

TEST_CASE("similarity_histogram: counts sum to class sizes, extremes hit outer bins") {
    ProjectionAdapter adapter;
    adapter.input_dim = 2;
    adapter.output_dim = 2;
    adapter.weights = {1, 0, 0, 1};
    std::vector<LabeledPair> pairs{
        {EmbeddingVector{{1, 1}}, EmbeddingVector{{1, 1}}, 1},
        {EmbeddingVector{{2, 2}}, EmbeddingVector{{2, 2}}, 1},
        {EmbeddingVector{{1, 1}}, EmbeddingVector{{-1, -1}}, -1},
    };
    auto hist = similarity_histogram(&adapter, pairs, 4);
    REQUIRE(hist.positive_counts.size() == 4);
    REQUIRE(hist.bin_edges.size() == 5);
    long pos = 0, neg = 0;
    for (auto c : hist.positive_counts) pos += c;
    for (auto c : hist.negative_counts) neg += c;
    CHECK(pos == 2);
    CHECK(neg == 1);
    CHECK(hist.positive_counts[3] == 2);  // similarities near +1
    CHECK(hist.negative_counts[0] == 1);  // similarities near -1
}

TEST_CASE("histogram overlap shrinks after training") {
    // Signal in the first four dims plus a louder fixed-direction distractor
    // with a random sign: raw cosines of the two classes overlap heavily,
    // while a projection that nulls the distractor separates them.
    std::mt19937_64 rng(31);
    auto distractor = rand_unit(rng, 4);
    std::uniform_real_distribution<float> dscale(0.75f, 2.25f);
    std::bernoulli_distribution dsign(0.5);
    std::normal_distribution<float> noise(0.0f, 0.05f);
    auto lift = [&](const EmbeddingVector& sig) {
        EmbeddingVector v;
        v.values.resize(8);
        float c = dscale(rng) * (dsign(rng) ? 1.0f : -1.0f);
        for (std::size_t i = 0; i < 4; ++i) {
            v.values[i] = 0.5f * sig.values[i];
            v.values[4 + i] = c * distractor.values[i];
        }
        return v;
    };
    auto make_set = [&](int positives, int neg_ratio) {
        std::vector<LabeledPair> pairs;
        for (int i = 0; i < positives; ++i) {
            auto sig = rand_unit(rng, 4);
            auto close = sig;
            for (auto& x : close.values) x += noise(rng);
            pairs.push_back({lift(sig), lift(close), 1});
            for (int n = 0; n < neg_ratio; ++n) {
                pairs.push_back({lift(sig), lift(rand_unit(rng, 4)), -1});
            }
        }
        return pairs;
    };
    auto train_set = make_set(30, 2);
    auto test_set = make_set(15, 2);
    TrainConfig cfg;
    cfg.projection_dim = 16;
    cfg.epochs = 150;
    cfg.dropout_p = 0.0;
    auto result = train_adapter(train_set, cfg);
    auto before = similarity_histogram(nullptr, test_set, 20);
    auto after = similarity_histogram(&result.adapter, test_set, 20);
    CHECK(histogram_overlap(before) > 0.0);
    CHECK(histogram_overlap(after) < histogram_overlap(before));
}

TEST_CASE("adapter save/load round-trip") {
    TempDir tmp;
    auto adapter = ProjectionAdapter::random_init(12, 6, 0.1, 2718);
    auto path = tmp.path / "adapter.bin";
    adapter.save(path);
    auto loaded = ProjectionAdapter::load(path);
    CHECK(loaded.input_dim == 12);
    CHECK(loaded.output_dim == 6);
    CHECK(loaded.dropout_p == doctest::Approx(0.1));
    CHECK(loaded.seed == 2718);
    REQUIRE(loaded.weights.size() == adapter.weights.size());
    // weights persist as 32-bit floats; compare after the same narrowing
    for (std::size_t i = 0; i < adapter.weights.size(); ++i) {
        CHECK(loaded.weights[i] == static_cast<double>(static_cast<float>(adapter.weights[i])));
    }
}

TEST_CASE("defaults mirror the documented configuration") {
    TrainConfig cfg;
    CHECK(cfg.neg_ratio == 3);
    CHECK(cfg.projection_dim == 2048);
    CHECK(cfg.dropout_p == doctest::Approx(0.1));
}
