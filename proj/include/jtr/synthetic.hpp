#pragma once

#include <cstdint>
#include <utility>

#include "jtr/types.hpp"

namespace jtr {

// Synthetic retrieval workload made of Gaussian blobs. Blob centers are
// unit vectors scaled by blob_spread; documents and queries scatter around
// them with the given noise, so spread must stay above noise for the blobs
// to remain separable. Query i belongs to blob i mod num_blobs and its
// judgments are the rels_per_query blob documents closest by dot product.
struct BlobSpec {
    uint32_t num_blobs = 16;
    uint32_t docs_per_blob = 64;
    uint32_t dim = 32;
    float blob_spread = 1.0f;
    float noise = 0.25f;
    uint32_t num_queries = 256;
    uint32_t rels_per_query = 5;
    uint64_t seed = 0;
};

struct SyntheticData {
    Corpus corpus;
    QuerySet queries;
    Qrels qrels;
};

SyntheticData generate_blobs(const BlobSpec& spec);

// contiguous slice [begin, begin + count) of a query set together with the
// judgments of the selected queries
std::pair<QuerySet, Qrels> take_queries(const QuerySet& queries, const Qrels& qrels, size_t begin, size_t count);

} // namespace jtr
