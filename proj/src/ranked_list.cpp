#include "ragkit/ranked_list.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ragkit/workspace.hpp"

namespace ragkit {

void write_run_file(const std::filesystem::path& path, const std::vector<RankedList>& runs,
                    const std::string& run_tag) {
    std::ostringstream out;
    for (const auto& run : runs) {
        for (std::size_t i = 0; i < run.entries.size(); ++i) {
            if (run.entries[i].rank != static_cast<int>(i) + 1) {
                throw std::invalid_argument("run for query " + run.query_id +
                                            " has non-contiguous ranks");
            }
        }
        for (const auto& e : run.entries) {
            char score_buf[64];
            std::snprintf(score_buf, sizeof(score_buf), "%.9g", e.score);
            out << run.query_id << ' ' << e.chunk_id << ' ' << e.rank << ' ' << score_buf << ' '
                << run_tag << '\n';
        }
    }
    atomic_write_file(path, out.str());
}

std::vector<RankedList> read_run_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open run file: " + path.string());
    }
    std::vector<RankedList> runs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string query_id, chunk_id, tag;
        int rank = 0;
        double score = 0.0;
        if (!(ls >> query_id >> chunk_id >> rank >> score >> tag)) {
            throw std::runtime_error("malformed run line: " + line);
        }
        if (runs.empty() || runs.back().query_id != query_id) {
            auto it = std::find_if(runs.begin(), runs.end(),
                                   [&](const RankedList& r) { return r.query_id == query_id; });
            if (it != runs.end()) {
                it->entries.push_back({chunk_id, score, rank});
                continue;
            }
            runs.push_back(RankedList{query_id, {}, false});
        }
        runs.back().entries.push_back({chunk_id, score, rank});
    }
    for (auto& run : runs) {
        std::sort(run.entries.begin(), run.entries.end(),
                  [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
    }
    return runs;
}

}  // namespace ragkit
