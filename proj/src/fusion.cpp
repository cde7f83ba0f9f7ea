#include "ragkit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ragkit {

RankedList rrf_fuse(const std::vector<RankedList>& lists, const FusionConfig& config) {
    if (lists.size() < 2) {
        throw std::invalid_argument("rrf_fuse needs at least two input lists");
    }
    if (!(config.k >= 0.0) || !std::isfinite(config.k)) {
        throw std::invalid_argument("RRF k must be finite and >= 0");
    }
    const std::string& query_id = lists.front().query_id;
    for (const auto& list : lists) {
        if (list.query_id != query_id) {
            throw std::invalid_argument("rrf_fuse: mismatched query ids: '" + query_id +
                                        "' vs '" + list.query_id + "'");
        }
    }
    std::map<std::string, double> fused;
    for (const auto& list : lists) {
        for (const auto& e : list.entries) {
            fused[e.chunk_id] += 1.0 / (config.k + static_cast<double>(e.rank));
        }
    }
    std::vector<std::pair<std::string, double>> ranked(fused.begin(), fused.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    RankedList out;
    out.query_id = query_id;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        out.entries.push_back({ranked[i].first, ranked[i].second, static_cast<int>(i) + 1});
    }
    return out;
}

}  // namespace ragkit
