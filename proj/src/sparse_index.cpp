#include "ragkit/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

SuffixStemmer SuffixStemmer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stemmer rules: " + path.string());
    std::vector<Rule> rules;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t p1 = line.find('|');
        std::size_t p2 = line.find('|', p1 == std::string::npos ? p1 : p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos) {
            throw std::runtime_error("malformed stemmer rule: " + line);
        }
        Rule r;
        r.suffix = line.substr(0, p1);
        r.replacement = line.substr(p1 + 1, p2 - p1 - 1);
        r.min_stem = static_cast<std::size_t>(std::stoul(line.substr(p2 + 1)));
        if (r.suffix.empty()) throw std::runtime_error("empty suffix in rule: " + line);
        rules.push_back(std::move(r));
    }
    return SuffixStemmer(std::move(rules));
}

std::string SuffixStemmer::stem(const std::string& term) const {
    std::string word = term;
    // Rules apply in file order; up to three passes so plural + suffix
    // stripping compose, min_stem guards against over-stripping.
    for (int pass = 0; pass < 3; ++pass) {
        bool fired = false;
        for (const auto& r : rules_) {
            if (word.size() <= r.suffix.size()) continue;
            std::size_t stem_len = word.size() - r.suffix.size();
            if (stem_len < r.min_stem) continue;
            if (word.compare(stem_len, r.suffix.size(), r.suffix) == 0) {
                word = word.substr(0, stem_len) + r.replacement;
                fired = true;
                break;
            }
        }
        if (!fired) break;
    }
    return word;
}

AnalyzerConfig AnalyzerConfig::basic() {
    AnalyzerConfig c;
    c.mode = AnalyzerMode::basic;
    return c;
}

AnalyzerConfig AnalyzerConfig::analyzed(const std::filesystem::path& stopword_file,
                                        const std::filesystem::path& stemmer_rules_file,
                                        const std::string& language) {
    AnalyzerConfig c;
    c.mode = AnalyzerMode::analyzed;
    c.language = language;
    std::ifstream in(stopword_file);
    if (!in) throw std::runtime_error("cannot open stopword file: " + stopword_file.string());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] != '#') c.stopwords.insert(line);
    }
    c.stemmer = SuffixStemmer::from_file(stemmer_rules_file);
    if (c.stemmer.empty()) {
        throw std::runtime_error("analyzed mode requires stemmer rules: " +
                                 stemmer_rules_file.string());
    }
    return c;
}

namespace {

bool word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c >= 0x80;  // UTF-8 continuation/lead bytes stay inside words
}

// ASCII lowercase plus the Latin-1 supplement uppercase range encoded as
// UTF-8 (0xC3 0x80..0x9E excluding 0x97), which covers Portuguese accents.
void lowercase_utf8(std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c >= 'A' && c <= 'Z') {
            s[i] = static_cast<char>(c + 32);
        } else if (c == 0xC3 && i + 1 < s.size()) {
            unsigned char d = static_cast<unsigned char>(s[i + 1]);
            if (d >= 0x80 && d <= 0x9E && d != 0x97) {
                s[i + 1] = static_cast<char>(d + 0x20);
            }
            ++i;
        }
    }
}

}  // namespace

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
    std::vector<std::string> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::string term(text.substr(start, i - start));
        lowercase_utf8(term);
        if (config.mode == AnalyzerMode::analyzed) {
            if (config.stopwords.count(term)) continue;
            term = config.stemmer.stem(term);
        }
        if (!term.empty()) terms.push_back(std::move(term));
    }
    return terms;
}

PostingsIndex PostingsIndex::build(const std::vector<Chunk>& chunks,
                                   const AnalyzerConfig& config) {
    PostingsIndex index;
    index.analyzer_ = config;
    for (const auto& chunk : chunks) {
        if (index.lengths_.count(chunk.id)) {
            throw std::runtime_error("duplicate chunk id: " + chunk.id);
        }
        std::vector<std::string> terms = analyze(chunk.text, config);
        index.lengths_[chunk.id] = static_cast<long>(terms.size());
        std::unordered_map<std::string, long> tf;
        for (auto& t : terms) ++tf[t];
        for (auto& [term, freq] : tf) {
            index.postings_[term].push_back({chunk.id, freq});
        }
    }
    for (auto& [term, plist] : index.postings_) {
        std::sort(plist.begin(), plist.end(),
                  [](const Posting& a, const Posting& b) { return a.chunk_id < b.chunk_id; });
    }
    if (!index.lengths_.empty()) {
        double sum = 0.0;
        for (const auto& [id, len] : index.lengths_) sum += static_cast<double>(len);
        index.avgdl_ = sum / static_cast<double>(index.lengths_.size());
    }
    return index;
}

long PostingsIndex::document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : static_cast<long>(it->second.size());
}

long PostingsIndex::chunk_length(const std::string& chunk_id) const {
    auto it = lengths_.find(chunk_id);
    if (it == lengths_.end()) throw std::runtime_error("unknown chunk id: " + chunk_id);
    return it->second;
}

double bm25_idf(std::size_t corpus_size, long doc_frequency) {
    const double n = static_cast<double>(corpus_size);
    const double df = static_cast<double>(doc_frequency);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

RankedList bm25_search(const PostingsIndex& index, const std::string& query,
                       const Bm25Params& params, int top_k) {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    RankedList result;
    std::vector<std::string> terms = analyze(query, index.analyzer());
    if (terms.empty() || index.corpus_size() == 0) {
        result.zero_term_query = terms.empty();
        return result;
    }

    // Duplicate query terms accumulate once per occurrence.
    std::map<std::string, double> scores;
    for (const auto& term : terms) {
        auto it = index.postings().find(term);
        if (it == index.postings().end()) continue;
        const double idf = bm25_idf(index.corpus_size(), static_cast<long>(it->second.size()));
        for (const auto& posting : it->second) {
            const double tf = static_cast<double>(posting.term_frequency);
            const double len = static_cast<double>(index.chunk_length(posting.chunk_id));
            const double norm = params.k1 * (1.0 - params.b + params.b * len / index.average_length());
            scores[posting.chunk_id] += idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
    }

    std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t n = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(top_k));
    for (std::size_t i = 0; i < n; ++i) {
        result.entries.push_back({ranked[i].first, ranked[i].second, static_cast<int>(i) + 1});
    }
    return result;
}

void PostingsIndex::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = "ragkit.sparse_index";
    j["version"] = 1;
    j["analyzer"]["mode"] = analyzer_.mode == AnalyzerMode::analyzed ? "analyzed" : "basic";
    j["analyzer"]["language"] = analyzer_.language;
    j["analyzer"]["stopwords"] = analyzer_.stopwords;
    json rules = json::array();
    for (const auto& r : analyzer_.stemmer.rules()) {
        rules.push_back({{"suffix", r.suffix}, {"replacement", r.replacement}, {"min_stem", r.min_stem}});
    }
    j["analyzer"]["stemmer_rules"] = rules;
    j["avgdl"] = avgdl_;
    j["lengths"] = lengths_;
    json postings = json::object();
    for (const auto& [term, plist] : postings_) {
        json arr = json::array();
        for (const auto& p : plist) arr.push_back({p.chunk_id, p.term_frequency});
        postings[term] = std::move(arr);
    }
    j["postings"] = std::move(postings);
    atomic_write_file(path, j.dump());
}

PostingsIndex PostingsIndex::load(const std::filesystem::path& path) {
    json j = json::parse(read_file(path));
    if (j.value("format", "") != "ragkit.sparse_index" || j.value("version", 0) != 1) {
        throw std::runtime_error("unrecognized index file: " + path.string());
    }
    PostingsIndex index;
    index.analyzer_.mode =
        j["analyzer"]["mode"] == "analyzed" ? AnalyzerMode::analyzed : AnalyzerMode::basic;
    index.analyzer_.language = j["analyzer"]["language"].get<std::string>();
    index.analyzer_.stopwords = j["analyzer"]["stopwords"].get<std::set<std::string>>();
    std::vector<SuffixStemmer::Rule> rules;
    for (const auto& r : j["analyzer"]["stemmer_rules"]) {
        rules.push_back({r.at("suffix").get<std::string>(), r.at("replacement").get<std::string>(),
                         r.at("min_stem").get<std::size_t>()});
    }
    index.analyzer_.stemmer = SuffixStemmer(std::move(rules));
    index.avgdl_ = j["avgdl"].get<double>();
    index.lengths_ = j["lengths"].get<std::map<std::string, long>>();
    for (auto& [term, arr] : j["postings"].items()) {
        std::vector<Posting> plist;
        for (const auto& p : arr) {
            plist.push_back({p.at(0).get<std::string>(), p.at(1).get<long>()});
        }
        index.postings_[term] = std::move(plist);
    }
    return index;
}

}  // namespace ragkit
