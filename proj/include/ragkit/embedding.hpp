#pragma once

#include <cstddef>
#include <vector>

namespace ragkit {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

// Exact cosine with 64-bit accumulation. Throws on dim mismatch or zero vector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

}  // namespace ragkit
