#include "ragkit/ir_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ragkit/workspace.hpp"

namespace ragkit {

Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open qrels: " + path.string());
    Qrels qrels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string query_id, chunk_id;
        int relevance = 0;
        if (!(ls >> query_id >> chunk_id >> relevance)) {
            throw std::runtime_error("malformed qrels line: " + line);
        }
        if (relevance > 0) qrels[query_id].insert(chunk_id);
    }
    return qrels;
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
    std::ostringstream out;
    for (const auto& [query_id, relevant] : qrels) {
        for (const auto& chunk_id : relevant) {
            out << query_id << ' ' << chunk_id << " 1\n";
        }
    }
    atomic_write_file(path, out.str());
}

namespace {

void check_queries_known(const std::vector<RankedList>& runs, const Qrels& qrels) {
    std::string missing;
    for (const auto& run : runs) {
        if (!qrels.count(run.query_id)) {
            if (!missing.empty()) missing += ", ";
            missing += run.query_id;
        }
    }
    if (!missing.empty()) {
        throw std::runtime_error("queries absent from qrels: " + missing);
    }
}

MetricReport aggregate(std::string name, int k, std::map<std::string, double> per_query) {
    MetricReport report;
    report.metric = std::move(name);
    report.k = k;
    report.per_query = std::move(per_query);
    if (!report.per_query.empty()) {
        double sum = 0.0;
        for (const auto& [q, v] : report.per_query) sum += v;
        report.aggregate = sum / static_cast<double>(report.per_query.size());
    }
    return report;
}

}  // namespace

MetricReport recall_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    check_queries_known(runs, qrels);
    std::map<std::string, double> per_query;
    for (const auto& run : runs) {
        const auto& relevant = qrels.at(run.query_id);
        std::size_t hits = 0;
        for (const auto& e : run.entries) {
            if (e.rank > k) break;
            if (relevant.count(e.chunk_id)) ++hits;
        }
        per_query[run.query_id] = static_cast<double>(hits) / static_cast<double>(relevant.size());
    }
    return aggregate("recall", k, std::move(per_query));
}

MetricReport mrr_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    check_queries_known(runs, qrels);
    std::map<std::string, double> per_query;
    for (const auto& run : runs) {
        const auto& relevant = qrels.at(run.query_id);
        double rr = 0.0;
        for (const auto& e : run.entries) {
            if (e.rank > k) break;
            if (relevant.count(e.chunk_id)) {
                rr = 1.0 / static_cast<double>(e.rank);
                break;
            }
        }
        per_query[run.query_id] = rr;
    }
    return aggregate("mrr", k, std::move(per_query));
}

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report) {
    std::ostringstream out;
    out << "query_id," << report.metric << "@" << report.k << '\n';
    for (const auto& [query_id, value] : report.per_query) {
        out << query_id << ',' << value << '\n';
    }
    out << "__aggregate__," << report.aggregate << '\n';
    atomic_write_file(path, out.str());
}

namespace {

// Lowercased tokens, surrounding ASCII punctuation stripped (internal hyphens kept).
std::vector<std::string> metric_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        std::size_t b = 0, e = word.size();
        auto is_punct = [](unsigned char c) {
            return c < 0x80 && !std::isalnum(c);
        };
        while (b < e && is_punct(static_cast<unsigned char>(word[b]))) ++b;
        while (e > b && is_punct(static_cast<unsigned char>(word[e - 1]))) --e;
        if (b >= e) continue;
        std::string t = word.substr(b, e - b);
        for (auto& c : t) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
        }
        tokens.push_back(std::move(t));
    }
    return tokens;
}

std::map<std::string, long> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, long> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

long clipped_matches(const std::map<std::string, long>& cand,
                     const std::map<std::string, long>& ref) {
    long matches = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) matches += std::min(count, it->second);
    }
    return matches;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double bleu(const std::string& candidate, const std::string& reference, const BleuConfig& config) {
    if (config.max_n < 1) throw std::invalid_argument("max_n must be >= 1");
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    double log_precision_sum = 0.0;
    for (int n = 1; n <= config.max_n; ++n) {
        const auto cand_grams = ngram_counts(cand, n);
        const auto ref_grams = ngram_counts(ref, n);
        long total = 0;
        for (const auto& [gram, count] : cand_grams) total += count;
        if (total == 0) return 0.0;  // candidate shorter than n
        const double matched =
            static_cast<double>(clipped_matches(cand_grams, ref_grams)) + config.smoothing;
        const double denom = static_cast<double>(total) + config.smoothing;
        if (matched <= 0.0) return 0.0;
        log_precision_sum += std::log(matched / denom);
    }
    double score = std::exp(log_precision_sum / config.max_n);
    if (config.brevity_penalty && cand.size() < ref.size()) {
        score *= std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
    }
    return std::min(1.0, score);
}

double rouge(const std::string& candidate, const std::string& reference,
             const RougeConfig& config) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    double precision = 0.0, recall = 0.0;
    if (config.variant == RougeConfig::Variant::ngram) {
        if (config.n < 1) throw std::invalid_argument("rouge n must be >= 1");
        const auto cand_grams = ngram_counts(cand, config.n);
        const auto ref_grams = ngram_counts(ref, config.n);
        long cand_total = 0, ref_total = 0;
        for (const auto& [g, c] : cand_grams) cand_total += c;
        for (const auto& [g, c] : ref_grams) ref_total += c;
        if (cand_total == 0 || ref_total == 0) return 0.0;
        const double matched = static_cast<double>(clipped_matches(cand_grams, ref_grams));
        precision = matched / static_cast<double>(cand_total);
        recall = matched / static_cast<double>(ref_total);
    } else {
        const double lcs = static_cast<double>(lcs_length(cand, ref));
        precision = lcs / static_cast<double>(cand.size());
        recall = lcs / static_cast<double>(ref.size());
    }
    if (config.measure == RougeConfig::Measure::recall) return recall;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace ragkit
