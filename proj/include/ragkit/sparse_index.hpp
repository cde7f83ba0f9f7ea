#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"
#include "ragkit/ranked_list.hpp"

namespace ragkit {

enum class AnalyzerMode { analyzed, basic };

// Suffix-rewrite stemmer driven by a rules file (lines "suffix|replacement|min_stem").
// Rules are tried in file order each pass; a bounded number of passes runs
// until no rule fires.
class SuffixStemmer {
public:
    struct Rule {
        std::string suffix;
        std::string replacement;
        std::size_t min_stem = 0;
    };

    SuffixStemmer() = default;
    explicit SuffixStemmer(std::vector<Rule> rules) : rules_(std::move(rules)) {}
    static SuffixStemmer from_file(const std::filesystem::path& path);

    std::string stem(const std::string& term) const;
    bool empty() const { return rules_.empty(); }
    const std::vector<Rule>& rules() const { return rules_; }

private:
    std::vector<Rule> rules_;
};

struct AnalyzerConfig {
    AnalyzerMode mode = AnalyzerMode::basic;
    std::string language = "pt";
    std::set<std::string> stopwords;
    SuffixStemmer stemmer;

    static AnalyzerConfig basic();
    // Loads the bundled stop-word and stemmer-rule data files.
    static AnalyzerConfig analyzed(const std::filesystem::path& stopword_file,
                                   const std::filesystem::path& stemmer_rules_file,
                                   const std::string& language = "pt");
};

// Lowercase + split on non-word bytes; analyzed mode also drops stop words
// and stems. Deterministic for a fixed config.
std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

struct Bm25Params {
    double k1 = 0.82;
    double b = 0.68;
};

struct Posting {
    std::string chunk_id;
    long term_frequency = 0;
};

class PostingsIndex {
public:
    static PostingsIndex build(const std::vector<Chunk>& chunks, const AnalyzerConfig& config);

    std::size_t corpus_size() const { return lengths_.size(); }
    double average_length() const { return avgdl_; }
    long document_frequency(const std::string& term) const;
    long chunk_length(const std::string& chunk_id) const;
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
    const std::map<std::string, long>& lengths() const { return lengths_; }
    const AnalyzerConfig& analyzer() const { return analyzer_; }

    // Versioned JSON file; the analyzer config (stop words, stemmer rules)
    // is stored inline so a loaded index needs no data files.
    void save(const std::filesystem::path& path) const;
    static PostingsIndex load(const std::filesystem::path& path);

private:
    std::map<std::string, std::vector<Posting>> postings_;  // postings sorted by chunk id
    std::map<std::string, long> lengths_;                   // analyzed token counts
    double avgdl_ = 0.0;
    AnalyzerConfig analyzer_;
};

// IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); always non-negative.
double bm25_idf(std::size_t corpus_size, long doc_frequency);

RankedList bm25_search(const PostingsIndex& index, const std::string& query,
                       const Bm25Params& params, int top_k);

}  // namespace ragkit
