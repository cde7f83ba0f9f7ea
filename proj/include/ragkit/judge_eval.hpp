#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ragkit/corpus.hpp"

namespace ragkit {

class GenerationClient;

struct JudgeScore {
    std::string raw_text;
    int value = 0;
    bool valid = false;  // value in {1, 3, 5, 7, 10}
};

// Lenient extraction of a lone integer from the judge reply; validity is
// strict to the five rubric categories. Off-rubric integers stay invalid.
JudgeScore parse_judge_score(const std::string& raw_text);

JudgeScore judge_answer(const std::string& reference, const std::string& candidate,
                        GenerationClient& client, const PromptTemplate& tmpl,
                        int max_retries = 2);

struct EvalRecord {
    std::string qa_id;
    std::string generated_answer;
    std::string reference_answer;
    JudgeScore score;
    std::string run_tag;
};

struct EvalReport {
    std::string run_tag;
    double mean_score = 0.0;        // mean over valid scores only
    double relative_maximum = 0.0;  // 0 when not supplied
    double degradation = 0.0;
    double coverage = 0.0;          // valid / total
    std::vector<EvalRecord> records;
};

// Assembles mean/coverage from records; degradation filled when
// relative_maximum > 0.
EvalReport make_report(const std::string& run_tag, std::vector<EvalRecord> records,
                       double relative_maximum = 0.0);

struct RelativeMaximumResult {
    double mean = 0.0;
    double coverage = 0.0;
    std::vector<EvalRecord> records;
};

// For each question, answer from a prompt containing exactly the gold chunk,
// then judge against the reference answer. Returns the mean of valid scores.
RelativeMaximumResult relative_maximum(const std::vector<QAPair>& qa,
                                       const std::map<std::string, Chunk>& chunks_by_id,
                                       GenerationClient& generator, GenerationClient& judge,
                                       const PromptTemplate& answer_tmpl,
                                       const PromptTemplate& judge_tmpl,
                                       int max_retries = 2);

// 1 - experiment_score / relative_maximum. Throws on non-positive maximum.
double degradation(double experiment_score, double relative_maximum);

// Negative-percentage display at one decimal, e.g. "-20.0%". The fractional
// digit truncates toward zero so reported values never overstate the loss.
std::string format_degradation_percent(double degradation_value);

void write_report_json(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report_json(const std::filesystem::path& path);
void write_records_jsonl(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace ragkit
