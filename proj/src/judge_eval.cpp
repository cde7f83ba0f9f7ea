#include "ragkit/judge_eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ragkit/model_clients.hpp"
#include "ragkit/workspace.hpp"

namespace ragkit {

using nlohmann::json;

JudgeScore parse_judge_score(const std::string& raw_text) {
    JudgeScore score;
    score.raw_text = raw_text;
    // Accept exactly one integer embedded in the reply; anything else is invalid.
    std::optional<long> found;
    std::size_t i = 0;
    while (i < raw_text.size()) {
        if (std::isdigit(static_cast<unsigned char>(raw_text[i]))) {
            std::size_t start = i;
            while (i < raw_text.size() && std::isdigit(static_cast<unsigned char>(raw_text[i]))) ++i;
            if (found.has_value()) return score;  // more than one integer
            found = std::stol(raw_text.substr(start, i - start));
        } else {
            ++i;
        }
    }
    if (!found) return score;
    score.value = static_cast<int>(*found);
    score.valid = score.value == 1 || score.value == 3 || score.value == 5 || score.value == 7 ||
                  score.value == 10;
    return score;
}

JudgeScore judge_answer(const std::string& reference, const std::string& candidate,
                        GenerationClient& client, const PromptTemplate& tmpl, int max_retries) {
    if (!tmpl.has_slot("text_1") || !tmpl.has_slot("text_2")) {
        throw std::invalid_argument("judge template must contain {text_1} and {text_2} slots");
    }
    const std::string prompt = tmpl.render({{"text_1", reference}, {"text_2", candidate}});
    JudgeScore score;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        GenParams params;
        params.seed = attempt;
        score = parse_judge_score(client.generate(prompt, params));
        if (score.valid) return score;
    }
    return score;  // invalid, carried in the record
}

EvalReport make_report(const std::string& run_tag, std::vector<EvalRecord> records,
                       double relative_maximum_score) {
    EvalReport report;
    report.run_tag = run_tag;
    report.records = std::move(records);
    long valid = 0;
    double sum = 0.0;
    for (const auto& r : report.records) {
        if (r.score.valid) {
            ++valid;
            sum += static_cast<double>(r.score.value);
        }
    }
    report.mean_score = valid > 0 ? sum / static_cast<double>(valid) : 0.0;
    report.coverage = report.records.empty()
                          ? 0.0
                          : static_cast<double>(valid) / static_cast<double>(report.records.size());
    report.relative_maximum = relative_maximum_score;
    report.degradation =
        relative_maximum_score > 0.0 ? degradation(report.mean_score, relative_maximum_score) : 0.0;
    return report;
}

RelativeMaximumResult relative_maximum(const std::vector<QAPair>& qa,
                                       const std::map<std::string, Chunk>& chunks_by_id,
                                       GenerationClient& generator, GenerationClient& judge,
                                       const PromptTemplate& answer_tmpl,
                                       const PromptTemplate& judge_tmpl, int max_retries) {
    RelativeMaximumResult result;
    for (const auto& item : qa) {
        auto it = chunks_by_id.find(item.gold_chunk_id);
        if (it == chunks_by_id.end()) {
            throw std::runtime_error("gold chunk not found: " + item.gold_chunk_id);
        }
        EvalRecord record;
        record.qa_id = item.id;
        record.reference_answer = item.answer;
        record.run_tag = "relative-maximum";
        try {
            const std::string prompt =
                answer_tmpl.render({{"context", it->second.text}, {"question", item.question}});
            record.generated_answer = generator.generate(prompt, GenParams{});
            record.score =
                judge_answer(item.answer, record.generated_answer, judge, judge_tmpl, max_retries);
        } catch (const std::exception& e) {
            record.score.raw_text = std::string("error: ") + e.what();
            record.score.valid = false;
        }
        result.records.push_back(std::move(record));
    }
    long valid = 0;
    double sum = 0.0;
    for (const auto& r : result.records) {
        if (r.score.valid) {
            ++valid;
            sum += static_cast<double>(r.score.value);
        }
    }
    result.mean = valid > 0 ? sum / static_cast<double>(valid) : 0.0;
    result.coverage = result.records.empty()
                          ? 0.0
                          : static_cast<double>(valid) / static_cast<double>(result.records.size());
    return result;
}

double degradation(double experiment_score, double relative_maximum_score) {
    if (!(relative_maximum_score > 0.0)) {
        throw std::domain_error("relative maximum must be positive");
    }
    return 1.0 - experiment_score / relative_maximum_score;
}

std::string format_degradation_percent(double degradation_value) {
    // One decimal, truncated toward zero. Values within 1e-9 of a decimal
    // boundary snap to it first so exact ratios are not undercut by the
    // floating-point quotient (1 - 6.04/7.55 must print as 20.0, not 19.9).
    const double pct = degradation_value * 100.0;
    double tenths = pct * 10.0;
    const double nearest = std::round(tenths);
    if (std::fabs(tenths - nearest) < 1e-9) tenths = nearest;
    const double truncated = std::trunc(tenths) / 10.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", -truncated);
    // Avoid "-0.0%".
    if (std::string(buf) == "-0.0%") return "0.0%";
    return buf;
}

namespace {

json record_to_json(const EvalRecord& r) {
    return json{{"qa_id", r.qa_id},
                {"generated_answer", r.generated_answer},
                {"reference_answer", r.reference_answer},
                {"score_raw", r.score.raw_text},
                {"score_value", r.score.value},
                {"score_valid", r.score.valid},
                {"run_tag", r.run_tag}};
}

EvalRecord record_from_json(const json& j) {
    EvalRecord r;
    r.qa_id = j.at("qa_id").get<std::string>();
    r.generated_answer = j.at("generated_answer").get<std::string>();
    r.reference_answer = j.at("reference_answer").get<std::string>();
    r.score.raw_text = j.at("score_raw").get<std::string>();
    r.score.value = j.at("score_value").get<int>();
    r.score.valid = j.at("score_valid").get<bool>();
    r.run_tag = j.at("run_tag").get<std::string>();
    return r;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
    json j{{"format", "ragkit.eval_report"},
           {"version", 1},
           {"run_tag", report.run_tag},
           {"mean_score", report.mean_score},
           {"relative_maximum", report.relative_maximum},
           {"degradation", report.degradation},
           {"degradation_display", format_degradation_percent(report.degradation)},
           {"coverage", report.coverage}};
    json records = json::array();
    for (const auto& r : report.records) records.push_back(record_to_json(r));
    j["records"] = std::move(records);
    atomic_write_file(path, j.dump(2));
}

EvalReport read_report_json(const std::filesystem::path& path) {
    json j = json::parse(read_file(path));
    if (j.value("format", "") != "ragkit.eval_report") {
        throw std::runtime_error("not an eval report: " + path.string());
    }
    EvalReport report;
    report.run_tag = j.at("run_tag").get<std::string>();
    report.mean_score = j.at("mean_score").get<double>();
    report.relative_maximum = j.at("relative_maximum").get<double>();
    report.degradation = j.at("degradation").get<double>();
    report.coverage = j.at("coverage").get<double>();
    for (const auto& r : j.at("records")) report.records.push_back(record_from_json(r));
    return report;
}

void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<EvalRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    atomic_write_file(path, out.str());
}

std::vector<EvalRecord> read_records_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<EvalRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(json::parse(line)));
    }
    return records;
}

}  // namespace ragkit
