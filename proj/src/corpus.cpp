#include "ragkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ragkit/model_clients.hpp"
#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

namespace {

bool is_blank(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

Tokenizer Tokenizer::make(const TokenizerSpec& spec) {
    Tokenizer t;
    t.kind_ = spec.kind;
    if (spec.kind == TokenizerKind::vocab_file) {
        if (!spec.vocab_path) {
            throw std::invalid_argument("vocab-file tokenizer requires vocab_path");
        }
        std::ifstream in(*spec.vocab_path);
        if (!in) {
            throw std::runtime_error("cannot open vocabulary file: " + spec.vocab_path->string());
        }
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) t.vocab_.push_back(line);
        }
        if (t.vocab_.empty()) {
            throw std::runtime_error("empty vocabulary file: " + spec.vocab_path->string());
        }
        std::sort(t.vocab_.begin(), t.vocab_.end(), [](const std::string& a, const std::string& b) {
            if (a.size() != b.size()) return a.size() > b.size();
            return a < b;
        });
    }
    return t;
}

std::vector<TokenSpan> Tokenizer::tokenize(std::string_view text) const {
    std::vector<TokenSpan> spans;
    if (kind_ == TokenizerKind::whitespace) {
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && is_blank(text[i])) ++i;
            if (i >= text.size()) break;
            std::size_t start = i;
            while (i < text.size() && !is_blank(text[i])) ++i;
            spans.push_back({start, i});
        }
        return spans;
    }
    // Greedy longest-match over the vocabulary, single byte fallback.
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_blank(text[i])) {
            ++i;
            continue;
        }
        std::size_t matched = 0;
        for (const auto& term : vocab_) {
            if (term.size() <= text.size() - i && text.compare(i, term.size(), term) == 0) {
                matched = term.size();
                break;
            }
        }
        if (matched == 0) matched = 1;
        spans.push_back({i, i + matched});
        i += matched;
    }
    return spans;
}

Document make_document(std::string id, std::string text, const Tokenizer& tokenizer) {
    if (id.empty()) {
        throw std::invalid_argument("document id must be non-empty");
    }
    Document doc;
    doc.id = std::move(id);
    doc.token_count = tokenizer.count(text);
    doc.text = std::move(text);
    return doc;
}

std::vector<Chunk> chunk_naive(const Document& doc, const Tokenizer& tokenizer,
                               long chunk_size, long overlap) {
    if (chunk_size < 1) {
        throw std::invalid_argument("chunk_size must be >= 1");
    }
    if (overlap < 0 || overlap >= chunk_size) {
        throw std::invalid_argument("overlap must satisfy 0 <= overlap < chunk_size");
    }
    std::vector<TokenSpan> spans = tokenizer.tokenize(doc.text);
    std::vector<Chunk> chunks;
    if (spans.empty()) return chunks;

    const long n = static_cast<long>(spans.size());
    const long stride = chunk_size - overlap;
    long index = 0;
    for (long start = 0; start < n; start += stride, ++index) {
        long end = std::min(start + chunk_size, n);
        Chunk c;
        c.id = doc.id + "#" + std::to_string(index);
        c.doc_id = doc.id;
        c.token_start = start;
        c.token_count = end - start;
        c.text = doc.text.substr(spans[start].begin, spans[end - 1].end - spans[start].begin);
        chunks.push_back(std::move(c));
        if (end == n) break;
    }
    return chunks;
}

SentenceRules SentenceRules::defaults() {
    return SentenceRules{{"Sr.", "Sra.", "Dr.", "Dra.", "Prof.", "Mr.", "Mrs.", "Ms.", "St.",
                          "vs.", "etc.", "e.g.", "i.e."}};
}

namespace {

// A terminator ends a sentence when it is followed by whitespace and the next
// non-space character opens with uppercase, a digit, or a quote.
bool upperish(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '"' || c == '\'' ||
           c >= 0x80;  // multibyte start (accented uppercase included)
}

bool ends_with_abbreviation(std::string_view text, std::size_t end,
                            const SentenceRules& rules) {
    for (const auto& abbr : rules.abbreviations) {
        if (end + 1 >= abbr.size()) {
            std::size_t start = end + 1 - abbr.size();
            if (text.compare(start, abbr.size(), abbr) == 0) {
                // Must begin at a word boundary.
                if (start == 0 || is_blank(text[start - 1])) return true;
            }
        }
    }
    return false;
}

}  // namespace

std::vector<Sentence> segment_sentences(const Document& doc, const SentenceRules& rules) {
    std::vector<Sentence> sentences;
    const std::string& text = doc.text;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        // Trim surrounding whitespace but keep byte offsets over the raw span.
        std::size_t b = start, e = end;
        while (b < e && is_blank(text[b])) ++b;
        while (e > b && is_blank(text[e - 1])) --e;
        if (b < e) {
            Sentence s;
            s.id = doc.id + "/s" + std::to_string(sentences.size());
            s.begin = b;
            s.end = e;
            s.text = text.substr(b, e - b);
            sentences.push_back(std::move(s));
        }
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // Absorb trailing closers like ." or .)
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')')) ++j;
        if (j < text.size() && !is_blank(text[j])) continue;
        if (c == '.' && ends_with_abbreviation(text, i, rules)) continue;
        std::size_t k = j;
        while (k < text.size() && is_blank(text[k])) ++k;
        if (k < text.size() && !upperish(static_cast<unsigned char>(text[k]))) continue;
        flush(j);
        i = j - 1;
    }
    flush(text.size());
    return sentences;
}

SentenceWindowChunk expand_window(const std::vector<Sentence>& sentences, int center_index,
                                  int radius, const std::string& doc_id) {
    if (center_index < 0 || center_index >= static_cast<int>(sentences.size())) {
        throw std::invalid_argument("center_index out of range");
    }
    if (radius < 0) {
        throw std::invalid_argument("radius must be >= 0");
    }
    int first = std::max(0, center_index - radius);
    int last = std::min(static_cast<int>(sentences.size()) - 1, center_index + radius);
    SentenceWindowChunk w;
    w.center_sentence_id = sentences[center_index].id;
    w.window_radius = radius;
    w.doc_id = doc_id;
    w.first_index = first;
    w.last_index = last;
    std::string text;
    for (int i = first; i <= last; ++i) {
        if (!text.empty()) text += ' ';
        text += sentences[i].text;
    }
    w.text = std::move(text);
    return w;
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
    return PromptTemplate(read_file(path));
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& slots) const {
    std::string out = body_;
    for (const auto& [name, value] : slots) {
        const std::string slot = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    }
    return out;
}

bool PromptTemplate::has_slot(const std::string& name) const {
    return body_.find("{" + name + "}") != std::string::npos;
}

namespace {

// Lenient: accept a single object or a one-element array, ignore extra keys.
QAPair parse_qa_response(const std::string& text, const Chunk& chunk, int attempt) {
    json j = json::parse(text);  // throws json::parse_error on malformed input
    if (j.is_array()) {
        if (j.size() != 1) {
            throw std::runtime_error("expected a single QA object, got array of " +
                                     std::to_string(j.size()));
        }
        j = j.at(0);
    }
    if (!j.is_object() || !j.contains("question") || !j.contains("answer")) {
        throw std::runtime_error("QA response missing question/answer keys");
    }
    QAPair qa;
    qa.id = chunk.id + "/qa";
    qa.question = j.at("question").get<std::string>();
    qa.answer = j.at("answer").get<std::string>();
    qa.gold_chunk_id = chunk.id;
    if (qa.question.empty() || qa.answer.empty()) {
        throw std::runtime_error("QA response has empty question or answer");
    }
    (void)attempt;
    return qa;
}

}  // namespace

QAPair generate_qa(const Chunk& chunk, GenerationClient& client, const PromptTemplate& tmpl,
                   int max_retries) {
    if (!tmpl.has_slot("document")) {
        throw std::invalid_argument("QA template must contain a {document} slot");
    }
    const std::string prompt = tmpl.render({{"document", chunk.text}});
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        GenParams params;
        params.seed = attempt;  // vary the seed across retries
        std::string response = client.generate(prompt, params);
        try {
            return parse_qa_response(response, chunk, attempt);
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw std::runtime_error("QA generation failed for chunk " + chunk.id + ": " + last_error);
}

QaDataset generate_qa_dataset(const std::vector<Chunk>& chunks, GenerationClient& client,
                              const PromptTemplate& tmpl, int max_retries) {
    QaDataset out;
    for (const auto& chunk : chunks) {
        try {
            out.pairs.push_back(generate_qa(chunk, client, tmpl, max_retries));
        } catch (const std::exception& e) {
            out.failures.push_back({chunk.id, e.what()});
        }
    }
    return out;
}

void write_chunks_jsonl(const std::filesystem::path& path, const std::vector<Chunk>& chunks) {
    std::ostringstream out;
    for (const auto& c : chunks) {
        json j{{"id", c.id},
               {"doc_id", c.doc_id},
               {"text", c.text},
               {"token_start", c.token_start},
               {"token_count", c.token_count}};
        out << j.dump() << '\n';
    }
    atomic_write_file(path, out.str());
}

std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<Chunk> chunks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        Chunk c;
        c.id = j.at("id").get<std::string>();
        c.doc_id = j.at("doc_id").get<std::string>();
        c.text = j.at("text").get<std::string>();
        c.token_start = j.at("token_start").get<long>();
        c.token_count = j.at("token_count").get<long>();
        chunks.push_back(std::move(c));
    }
    return chunks;
}

void write_qa_jsonl(const std::filesystem::path& path, const std::vector<QAPair>& pairs) {
    std::ostringstream out;
    for (const auto& qa : pairs) {
        json j{{"id", qa.id},
               {"question", qa.question},
               {"answer", qa.answer},
               {"gold_chunk_id", qa.gold_chunk_id}};
        out << j.dump() << '\n';
    }
    atomic_write_file(path, out.str());
}

std::vector<QAPair> read_qa_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<QAPair> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        QAPair qa;
        qa.id = j.at("id").get<std::string>();
        qa.question = j.at("question").get<std::string>();
        qa.answer = j.at("answer").get<std::string>();
        qa.gold_chunk_id = j.at("gold_chunk_id").get<std::string>();
        pairs.push_back(std::move(qa));
    }
    return pairs;
}

}  // namespace ragkit
