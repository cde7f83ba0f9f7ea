#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"
#include "ragkit/dense_index.hpp"
#include "ragkit/embedding.hpp"

namespace ragkit {

struct LabeledPair {
    EmbeddingVector query_vec;
    EmbeddingVector chunk_vec;
    int label = 1;  // +1 gold pair, -1 shuffled negative
};

// Trainable projection: prediction = cosine(tanh(drop(W q)), tanh(drop(W c))).
// W is output_dim x input_dim row-major; dropout only applies in train mode.
struct ProjectionAdapter {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    double dropout_p = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> weights;  // row-major, output_dim rows

    double& at(std::size_t row, std::size_t col) { return weights[row * input_dim + col]; }
    double at(std::size_t row, std::size_t col) const { return weights[row * input_dim + col]; }

    static ProjectionAdapter random_init(std::size_t input_dim, std::size_t output_dim,
                                         double dropout_p, std::uint64_t seed);

    // Header (dims, dropout_p, seed, version) + row-major W as 32-bit floats.
    void save(const std::filesystem::path& path) const;
    static ProjectionAdapter load(const std::filesystem::path& path);
};

struct TrainConfig {
    // Sized so the default 2048-row projection makes visible progress within
    // the default epoch budget; per-weight gradients shrink with row count.
    double learning_rate = 2.0;
    int batch_size = 32;
    int epochs = 200;
    int neg_ratio = 3;
    std::uint64_t seed = 42;
    std::size_t projection_dim = 2048;
    double dropout_p = 0.1;
};

std::vector<LabeledPair> make_pairs(const std::vector<QAPair>& qa,
                                    const EmbeddingStore& chunk_store,
                                    const EmbeddingStore& query_store,
                                    int neg_ratio, std::uint64_t seed);

// Predicted similarity in (-1, 1). rng drives the dropout mask and is only
// consumed when train_mode is true.
double adapter_forward(const ProjectionAdapter& adapter, const LabeledPair& pair,
                       bool train_mode, std::mt19937_64& rng);

double adapter_forward(const ProjectionAdapter& adapter, const LabeledPair& pair);

// Mean (prediction - label)^2 over the batch, plus its gradient w.r.t. W
// (dropout disabled). Exposed for finite-difference checks.
double adapter_loss_and_gradient(const ProjectionAdapter& adapter,
                                 const std::vector<LabeledPair>& batch,
                                 std::vector<double>& grad_out);

struct TrainResult {
    ProjectionAdapter adapter;
    std::vector<double> loss_history;  // full-set MSE: initial, then one entry per epoch
};

TrainResult train_adapter(const std::vector<LabeledPair>& pairs, const TrainConfig& cfg);

struct ThresholdPolicy {
    enum class Kind { fixed, sweep } kind = Kind::sweep;
    double fixed_value = 0.0;

    static ThresholdPolicy fixed(double value) { return {Kind::fixed, value}; }
    static ThresholdPolicy sweep() { return {Kind::sweep, 0.0}; }
};

struct AccuracyResult {
    double accuracy = 0.0;
    double threshold = 0.0;
};

// adapter == nullptr evaluates the raw cosine of the stored vectors.
AccuracyResult eval_accuracy(const ProjectionAdapter* adapter,
                             const std::vector<LabeledPair>& pairs,
                             const ThresholdPolicy& policy);

struct SimilarityHistogram {
    std::vector<double> bin_edges;        // bin_count + 1 edges over [-1, 1]
    std::vector<long> positive_counts;
    std::vector<long> negative_counts;
};

SimilarityHistogram similarity_histogram(const ProjectionAdapter* adapter,
                                         const std::vector<LabeledPair>& pairs,
                                         int bin_count);

void write_histogram_csv(const std::filesystem::path& path, const SimilarityHistogram& hist);

// Shared area of the two count-normalized histograms; lower is more separated.
double histogram_overlap(const SimilarityHistogram& hist);

}  // namespace ragkit
