#include "ragkit/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ragkit/workspace.hpp"

namespace ragkit {

ProjectionAdapter ProjectionAdapter::random_init(std::size_t input_dim, std::size_t output_dim,
                                                 double dropout_p, std::uint64_t seed) {
    if (input_dim == 0 || output_dim == 0) {
        throw std::invalid_argument("adapter dims must be positive");
    }
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
        throw std::invalid_argument("dropout_p must be in [0, 1)");
    }
    ProjectionAdapter a;
    a.input_dim = input_dim;
    a.output_dim = output_dim;
    a.dropout_p = dropout_p;
    a.seed = seed;
    a.weights.resize(input_dim * output_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    for (auto& w : a.weights) w = dist(rng);
    return a;
}

namespace {

struct ForwardState {
    std::vector<double> u, v;          // tanh outputs
    std::vector<double> mask_q, mask_c;  // dropout scales (all 1 at inference)
    double norm_u = 0.0, norm_v = 0.0, dot = 0.0, similarity = 0.0;
};

ForwardState forward_state(const ProjectionAdapter& adapter, const LabeledPair& pair,
                           bool train_mode, std::mt19937_64* rng) {
    if (pair.query_vec.dim() != adapter.input_dim || pair.chunk_vec.dim() != adapter.input_dim) {
        throw std::invalid_argument("pair dimension does not match adapter input_dim");
    }
    const std::size_t n = adapter.output_dim;
    ForwardState st;
    st.u.resize(n);
    st.v.resize(n);
    st.mask_q.assign(n, 1.0);
    st.mask_c.assign(n, 1.0);
    const bool use_dropout = train_mode && adapter.dropout_p > 0.0 && rng != nullptr;
    if (use_dropout) {
        std::bernoulli_distribution keep(1.0 - adapter.dropout_p);
        const double scale = 1.0 / (1.0 - adapter.dropout_p);
        for (std::size_t i = 0; i < n; ++i) st.mask_q[i] = keep(*rng) ? scale : 0.0;
        for (std::size_t i = 0; i < n; ++i) st.mask_c[i] = keep(*rng) ? scale : 0.0;
    }
    for (std::size_t row = 0; row < n; ++row) {
        double aq = 0.0, ac = 0.0;
        const double* w = &adapter.weights[row * adapter.input_dim];
        for (std::size_t col = 0; col < adapter.input_dim; ++col) {
            aq += w[col] * pair.query_vec.values[col];
            ac += w[col] * pair.chunk_vec.values[col];
        }
        st.u[row] = std::tanh(aq * st.mask_q[row]);
        st.v[row] = std::tanh(ac * st.mask_c[row]);
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += st.u[i] * st.v[i];
        nu += st.u[i] * st.u[i];
        nv += st.v[i] * st.v[i];
    }
    st.norm_u = std::sqrt(nu);
    st.norm_v = std::sqrt(nv);
    if (st.norm_u == 0.0 || st.norm_v == 0.0) {
        throw std::domain_error("projected vector collapsed to zero");
    }
    st.dot = dot;
    st.similarity = dot / (st.norm_u * st.norm_v);
    return st;
}

// Accumulates d(similarity)/dW scaled by grad_scale into grad.
void accumulate_gradient(const ProjectionAdapter& adapter, const LabeledPair& pair,
                         const ForwardState& st, double grad_scale, std::vector<double>& grad) {
    const std::size_t n = adapter.output_dim;
    const double inv_uv = 1.0 / (st.norm_u * st.norm_v);
    const double inv_uu = 1.0 / (st.norm_u * st.norm_u);
    const double inv_vv = 1.0 / (st.norm_v * st.norm_v);
    for (std::size_t row = 0; row < n; ++row) {
        const double du = st.v[row] * inv_uv - st.similarity * st.u[row] * inv_uu;
        const double dv = st.u[row] * inv_uv - st.similarity * st.v[row] * inv_vv;
        // d tanh(x)/dx = 1 - tanh(x)^2; dropout scale chains through.
        const double da = du * (1.0 - st.u[row] * st.u[row]) * st.mask_q[row];
        const double db = dv * (1.0 - st.v[row] * st.v[row]) * st.mask_c[row];
        double* g = &grad[row * adapter.input_dim];
        for (std::size_t col = 0; col < adapter.input_dim; ++col) {
            g[col] += grad_scale * (da * pair.query_vec.values[col] +
                                    db * pair.chunk_vec.values[col]);
        }
    }
}

double batch_loss_and_gradient(const ProjectionAdapter& adapter,
                               const std::vector<LabeledPair>& batch, std::mt19937_64* dropout_rng,
                               std::vector<double>& grad_out) {
    grad_out.assign(adapter.weights.size(), 0.0);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& pair : batch) {
        ForwardState st = forward_state(adapter, pair, dropout_rng != nullptr, dropout_rng);
        const double err = st.similarity - static_cast<double>(pair.label);
        loss += err * err * inv_b;
        accumulate_gradient(adapter, pair, st, 2.0 * err * inv_b, grad_out);
    }
    return loss;
}

double full_set_loss(const ProjectionAdapter& adapter, const std::vector<LabeledPair>& pairs) {
    double loss = 0.0;
    for (const auto& pair : pairs) {
        ForwardState st = forward_state(adapter, pair, false, nullptr);
        const double err = st.similarity - static_cast<double>(pair.label);
        loss += err * err;
    }
    return loss / static_cast<double>(pairs.size());
}

}  // namespace

double adapter_forward(const ProjectionAdapter& adapter, const LabeledPair& pair, bool train_mode,
                       std::mt19937_64& rng) {
    return forward_state(adapter, pair, train_mode, &rng).similarity;
}

double adapter_forward(const ProjectionAdapter& adapter, const LabeledPair& pair) {
    return forward_state(adapter, pair, false, nullptr).similarity;
}

double adapter_loss_and_gradient(const ProjectionAdapter& adapter,
                                 const std::vector<LabeledPair>& batch,
                                 std::vector<double>& grad_out) {
    if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
    return batch_loss_and_gradient(adapter, batch, nullptr, grad_out);
}

std::vector<LabeledPair> make_pairs(const std::vector<QAPair>& qa,
                                    const EmbeddingStore& chunk_store,
                                    const EmbeddingStore& query_store, int neg_ratio,
                                    std::uint64_t seed) {
    if (neg_ratio < 0) throw std::invalid_argument("neg_ratio must be >= 0");
    if (static_cast<std::size_t>(neg_ratio) >= chunk_store.size()) {
        throw std::invalid_argument("neg_ratio must be smaller than the corpus size");
    }
    std::vector<std::string> chunk_ids;
    chunk_ids.reserve(chunk_store.size());
    for (const auto& [id, vec] : chunk_store.vectors()) chunk_ids.push_back(id);

    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> pairs;
    for (const auto& item : qa) {
        const EmbeddingVector& qvec = query_store.at(item.id);
        pairs.push_back({qvec, chunk_store.at(item.gold_chunk_id), +1});
        // Sample distinct non-gold chunks for this question.
        std::vector<std::string> candidates;
        candidates.reserve(chunk_ids.size() - 1);
        for (const auto& id : chunk_ids) {
            if (id != item.gold_chunk_id) candidates.push_back(id);
        }
        for (int i = 0; i < neg_ratio; ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            const std::size_t idx = pick(rng);
            pairs.push_back({qvec, chunk_store.at(candidates[idx]), -1});
            candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(idx));
        }
    }
    return pairs;
}

TrainResult train_adapter(const std::vector<LabeledPair>& pairs, const TrainConfig& cfg) {
    if (pairs.empty()) throw std::invalid_argument("training set must be non-empty");
    bool has_pos = false, has_neg = false;
    for (const auto& p : pairs) (p.label > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw std::invalid_argument("training set needs at least one pair of each label");
    }
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (cfg.batch_size < 1 || cfg.epochs < 1) {
        throw std::invalid_argument("batch_size and epochs must be >= 1");
    }

    TrainResult result;
    result.adapter = ProjectionAdapter::random_init(pairs.front().query_vec.dim(),
                                                    cfg.projection_dim, cfg.dropout_p, cfg.seed);
    result.loss_history.push_back(full_set_loss(result.adapter, pairs));

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;
    std::vector<LabeledPair> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
            batch.clear();
            const std::size_t end = std::min(order.size(), off + cfg.batch_size);
            for (std::size_t i = off; i < end; ++i) batch.push_back(pairs[order[i]]);
            std::mt19937_64* drop = cfg.dropout_p > 0.0 ? &dropout_rng : nullptr;
            const double loss = batch_loss_and_gradient(result.adapter, batch, drop, grad);
            if (!std::isfinite(loss)) {
                throw std::runtime_error(
                    "non-finite training loss at epoch " + std::to_string(epoch) +
                    "; try a lower learning rate");
            }
            for (std::size_t i = 0; i < grad.size(); ++i) {
                result.adapter.weights[i] -= cfg.learning_rate * grad[i];
            }
        }
        result.loss_history.push_back(full_set_loss(result.adapter, pairs));
    }
    return result;
}

AccuracyResult eval_accuracy(const ProjectionAdapter* adapter,
                             const std::vector<LabeledPair>& pairs,
                             const ThresholdPolicy& policy) {
    if (pairs.empty()) throw std::invalid_argument("pairs must be non-empty");
    std::vector<std::pair<double, int>> sims;
    sims.reserve(pairs.size());
    for (const auto& p : pairs) {
        const double s = adapter ? adapter_forward(*adapter, p) : cosine(p.query_vec, p.chunk_vec);
        sims.emplace_back(s, p.label);
    }
    auto accuracy_at = [&](double threshold) {
        std::size_t correct = 0;
        for (const auto& [s, label] : sims) {
            const int predicted = s > threshold ? +1 : -1;
            if (predicted == label) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(sims.size());
    };
    if (policy.kind == ThresholdPolicy::Kind::fixed) {
        return {accuracy_at(policy.fixed_value), policy.fixed_value};
    }
    // Sweep midpoints between consecutive similarity values plus the extremes.
    std::vector<double> values;
    for (const auto& [s, label] : sims) values.push_back(s);
    std::sort(values.begin(), values.end());
    std::vector<double> thresholds{-1.0, 1.0};
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        thresholds.push_back(0.5 * (values[i] + values[i + 1]));
    }
    std::sort(thresholds.begin(), thresholds.end());
    AccuracyResult best{-1.0, 0.0};
    for (double t : thresholds) {
        const double acc = accuracy_at(t);
        if (acc > best.accuracy) best = {acc, t};
    }
    return best;
}

SimilarityHistogram similarity_histogram(const ProjectionAdapter* adapter,
                                         const std::vector<LabeledPair>& pairs, int bin_count) {
    if (pairs.empty()) throw std::invalid_argument("pairs must be non-empty");
    if (bin_count < 1) throw std::invalid_argument("bin_count must be >= 1");
    SimilarityHistogram hist;
    hist.bin_edges.resize(bin_count + 1);
    for (int i = 0; i <= bin_count; ++i) {
        hist.bin_edges[i] = -1.0 + 2.0 * static_cast<double>(i) / bin_count;
    }
    hist.positive_counts.assign(bin_count, 0);
    hist.negative_counts.assign(bin_count, 0);
    for (const auto& p : pairs) {
        const double s = adapter ? adapter_forward(*adapter, p) : cosine(p.query_vec, p.chunk_vec);
        int bin = static_cast<int>((s + 1.0) / 2.0 * bin_count);
        bin = std::clamp(bin, 0, bin_count - 1);
        (p.label > 0 ? hist.positive_counts : hist.negative_counts)[bin] += 1;
    }
    return hist;
}

void write_histogram_csv(const std::filesystem::path& path, const SimilarityHistogram& hist) {
    std::ostringstream out;
    out << "bin_low,bin_high,positive_count,negative_count\n";
    for (std::size_t i = 0; i + 1 < hist.bin_edges.size(); ++i) {
        out << hist.bin_edges[i] << ',' << hist.bin_edges[i + 1] << ','
            << hist.positive_counts[i] << ',' << hist.negative_counts[i] << '\n';
    }
    atomic_write_file(path, out.str());
}

double histogram_overlap(const SimilarityHistogram& hist) {
    const double pos_total = static_cast<double>(
        std::accumulate(hist.positive_counts.begin(), hist.positive_counts.end(), 0L));
    const double neg_total = static_cast<double>(
        std::accumulate(hist.negative_counts.begin(), hist.negative_counts.end(), 0L));
    if (pos_total == 0.0 || neg_total == 0.0) return 0.0;
    double overlap = 0.0;
    for (std::size_t i = 0; i < hist.positive_counts.size(); ++i) {
        overlap += std::min(hist.positive_counts[i] / pos_total,
                            hist.negative_counts[i] / neg_total);
    }
    return overlap;
}

namespace {

constexpr char kAdapterMagic[4] = {'R', 'K', 'A', 'D'};
constexpr std::uint32_t kAdapterVersion = 1;

}  // namespace

void ProjectionAdapter::save(const std::filesystem::path& path) const {
    std::string buf;
    buf.append(kAdapterMagic, 4);
    auto append = [&buf](const auto& v) {
        buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    append(kAdapterVersion);
    append(static_cast<std::uint32_t>(input_dim));
    append(static_cast<std::uint32_t>(output_dim));
    append(dropout_p);
    append(seed);
    for (double w : weights) {
        const float f = static_cast<float>(w);
        append(f);
    }
    atomic_write_file(path, buf);
}

ProjectionAdapter ProjectionAdapter::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kAdapterMagic, 4) != 0) {
        throw std::runtime_error("not an adapter file: " + path.string());
    }
    auto read = [&in, &path](auto& v) {
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw std::runtime_error("truncated adapter file: " + path.string());
    };
    std::uint32_t version = 0;
    read(version);
    if (version != kAdapterVersion) {
        throw std::runtime_error("unsupported adapter version " + std::to_string(version));
    }
    ProjectionAdapter a;
    std::uint32_t in_dim = 0, out_dim = 0;
    read(in_dim);
    read(out_dim);
    read(a.dropout_p);
    read(a.seed);
    a.input_dim = in_dim;
    a.output_dim = out_dim;
    a.weights.resize(static_cast<std::size_t>(in_dim) * out_dim);
    for (auto& w : a.weights) {
        float f = 0.0f;
        read(f);
        w = f;
    }
    return a;
}

}  // namespace ragkit
