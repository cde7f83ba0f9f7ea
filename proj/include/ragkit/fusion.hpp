#pragma once

#include <vector>

#include "ragkit/ranked_list.hpp"

namespace ragkit {

struct FusionConfig {
    double k = 0.0;  // RRF constant; required, no silent default in the API
};

// Reciprocal Rank Fusion: every chunk appearing in at least one list scores
// sum over the lists containing it of 1 / (k + rank). Ties break by
// ascending chunk id. All lists must share one query id.
RankedList rrf_fuse(const std::vector<RankedList>& lists, const FusionConfig& config);

}  // namespace ragkit
