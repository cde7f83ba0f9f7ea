#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragkit {

struct Document {
    std::string id;
    std::string text;
    long token_count = 0;
};

struct Chunk {
    std::string id;
    std::string doc_id;
    std::string text;
    long token_start = 0;
    long token_count = 0;
};

struct Sentence {
    std::string id;
    std::string text;
    std::size_t begin = 0;  // byte offset into the document
    std::size_t end = 0;
};

struct SentenceWindowChunk {
    std::string center_sentence_id;
    int window_radius = 0;
    std::string text;
    std::string doc_id;
    int first_index = 0;
    int last_index = 0;
};

struct QAPair {
    std::string id;
    std::string question;
    std::string answer;
    std::string gold_chunk_id;
};

enum class TokenizerKind { whitespace, vocab_file };

struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::whitespace;
    std::optional<std::filesystem::path> vocab_path;
};

struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Deterministic token counting. The whitespace backend splits on blanks; the
// vocab-file backend does greedy longest-match against a user-supplied term
// list (one token per line), falling back to single bytes.
class Tokenizer {
public:
    static Tokenizer make(const TokenizerSpec& spec);

    std::vector<TokenSpan> tokenize(std::string_view text) const;
    long count(std::string_view text) const { return static_cast<long>(tokenize(text).size()); }

private:
    TokenizerKind kind_ = TokenizerKind::whitespace;
    std::vector<std::string> vocab_;  // sorted by length desc for greedy match
};

Document make_document(std::string id, std::string text, const Tokenizer& tokenizer);

std::vector<Chunk> chunk_naive(const Document& doc, const Tokenizer& tokenizer,
                               long chunk_size, long overlap);

struct SentenceRules {
    std::vector<std::string> abbreviations;  // tokens a terminator never ends, e.g. "Sr."
    static SentenceRules defaults();
};

std::vector<Sentence> segment_sentences(const Document& doc,
                                        const SentenceRules& rules = SentenceRules::defaults());

SentenceWindowChunk expand_window(const std::vector<Sentence>& sentences,
                                  int center_index, int radius,
                                  const std::string& doc_id);

// Prompt template with named {slots}. Unknown braces pass through literally.
class PromptTemplate {
public:
    PromptTemplate() = default;
    explicit PromptTemplate(std::string body) : body_(std::move(body)) {}
    static PromptTemplate from_file(const std::filesystem::path& path);

    std::string render(const std::map<std::string, std::string>& slots) const;
    bool has_slot(const std::string& name) const;
    const std::string& body() const { return body_; }

private:
    std::string body_;
};

class GenerationClient;

struct QaFailure {
    std::string chunk_id;
    std::string reason;
};

struct QaDataset {
    std::vector<QAPair> pairs;
    std::vector<QaFailure> failures;
};

// Single-chunk QA generation; throws std::runtime_error after exhausting retries.
QAPair generate_qa(const Chunk& chunk, GenerationClient& client,
                   const PromptTemplate& tmpl, int max_retries = 2);

// Batch driver: per-chunk failures are recorded, never abort the batch.
QaDataset generate_qa_dataset(const std::vector<Chunk>& chunks, GenerationClient& client,
                              const PromptTemplate& tmpl, int max_retries = 2);

// JSONL persistence for chunk corpora and QA datasets.
void write_chunks_jsonl(const std::filesystem::path& path, const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path);
void write_qa_jsonl(const std::filesystem::path& path, const std::vector<QAPair>& pairs);
std::vector<QAPair> read_qa_jsonl(const std::filesystem::path& path);

}  // namespace ragkit
