#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ragkit {

struct RankedEntry {
    std::string chunk_id;
    double score = 0.0;
    int rank = 0;  // 1-based
};

// Ordered retrieval result for one query. Ranks are 1..n without gaps and
// scores are non-increasing with rank.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
    bool zero_term_query = false;
};

// TREC-style run file: one line per entry, "query_id chunk_id rank score run_tag".
void write_run_file(const std::filesystem::path& path,
                    const std::vector<RankedList>& runs,
                    const std::string& run_tag);

std::vector<RankedList> read_run_file(const std::filesystem::path& path);

}  // namespace ragkit
