#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ragkit/ranked_list.hpp"

namespace ragkit {

// query_id -> relevant chunk ids; every set non-empty.
using Qrels = std::map<std::string, std::set<std::string>>;

Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

struct MetricReport {
    std::string metric;
    int k = 0;
    std::map<std::string, double> per_query;
    double aggregate = 0.0;  // arithmetic mean of per_query
};

MetricReport recall_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k);
MetricReport mrr_at_k(const std::vector<RankedList>& runs, const Qrels& qrels, int k);

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report);

struct BleuConfig {
    int max_n = 2;
    double smoothing = 0.0;  // added to n-gram match counts
    bool brevity_penalty = true;
};

struct RougeConfig {
    enum class Variant { ngram, lcs } variant = Variant::ngram;
    int n = 2;
    enum class Measure { recall, f1 } measure = Measure::recall;
};

// Demonstration metrics over lowercased, punctuation-stripped tokens.
double bleu(const std::string& candidate, const std::string& reference,
            const BleuConfig& config = {});
double rouge(const std::string& candidate, const std::string& reference,
             const RougeConfig& config = {});

}  // namespace ragkit
