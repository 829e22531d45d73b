#pragma once

#include <cstdint>
#include <vector>

#include "jtr/encoder.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr {

// Work counters for one search. node_scores stays within
// branch_factor * beam_width * depth and doc_scores within the total number
// of leaf document slots; those bounds are what makes the tree cheaper than
// a full scan. wall_time_ns is filled by retrieve (end to end), not by the
// beam pass alone.
struct SearchStats {
    uint64_t node_scores = 0;
    uint64_t doc_scores = 0;
    uint64_t leaves_visited = 0;
    uint64_t wall_time_ns = 0;
};

struct RankedDoc {
    uint32_t doc = 0;
    float score = 0.0f;
};

// Level-wise beam search. The frontier starts at the root; each round moves
// any leaves in the frontier into the result first, then keeps the
// best-scoring internal nodes until the beam is full and descends into
// their children. Nodes are only scored when a round has more candidates
// than open slots, and ties prefer the lower node id. Returns up to
// beam_width leaves, fewer when the tree runs out.
std::vector<uint64_t> beam_search_leaves(const TreeIndex& tree, const std::vector<float>& query_embedding,
                                         uint32_t beam_width, SearchStats* stats = nullptr);

// Encode the query, beam to leaves, score the union of their documents and
// return the top_k by (score desc, doc index asc).
std::vector<RankedDoc> retrieve(const TreeIndex& tree, const QueryEncoder& encoder, const float* query_features,
                                size_t feature_dim, const Corpus& corpus, uint32_t beam_width, uint32_t top_k,
                                SearchStats* stats = nullptr);

// Oracle path: same encoding, same scoring, same ordering, but over every
// document. retrieve with a beam wide enough to touch all leaves must match
// this exactly.
std::vector<RankedDoc> brute_force(const QueryEncoder& encoder, const float* query_features, size_t feature_dim,
                                   const Corpus& corpus, uint32_t top_k);

} // namespace jtr
