#pragma once

#include <cstdint>
#include <vector>

#include "jtr/rng.hpp"
#include "jtr/types.hpp"

namespace jtr {

struct KMeansResult {
    Matrix centroids;                 // k x dim
    std::vector<uint32_t> assignment; // one centroid index per input row
    double inertia = 0.0;             // squared distance sum under the final state
    uint32_t iterations = 0;
};

// Lloyd iterations with greedy plus-plus seeding. Ties in the assignment
// step go to the lower centroid index, so the result is a pure function of
// (points, k, max_iters, rng state). Clusters are kept non-empty by moving
// the globally farthest point into any cluster that drains. At convergence
// each centroid is the mean of its members and each point sits in its
// nearest cluster.
KMeansResult kmeans(const Matrix& points, uint32_t k, uint32_t max_iters, Rng& rng);

} // namespace jtr
