#pragma once

#include <cstdint>

#include "jtr/encoder.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr {

// Ranking metrics over a run, averaged across the run's queries. A query
// counts toward the mean only when the judgments give it something to
// find: MRR and recall need at least one doc judged relevant (>= 1), NDCG
// needs a nonzero ideal gain. Raises EmptyQuerySet when no query qualifies.

// mean reciprocal rank of the first relevant doc within the top k (0 when
// none of the top k are relevant)
double mrr_at_k(const RunResult& run, const Qrels& qrels, uint32_t k);

// mean fraction of the relevant docs that appear within the top k
double recall_at_k(const RunResult& run, const Qrels& qrels, uint32_t k);

// mean normalized discounted cumulative gain over the top k, gains
// 2^relevance - 1, rank discount log2(rank + 1)
double ndcg_at_k(const RunResult& run, const Qrels& qrels, uint32_t k);

// mean single-threaded query time in milliseconds, one query at a time,
// after the first ten queries warm the caches untimed; raises
// EmptyQuerySet when nothing is left to time
double measure_aqt(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries, const Corpus& corpus,
                   uint32_t beam_width, uint32_t top_k);

// mean fraction of each query's relevant docs that sit inside the leaves
// its beam visits; shows how much recall the tree structure itself caps
double beam_retrievability(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries,
                           const Qrels& qrels, const Corpus& corpus, uint32_t beam_width);

} // namespace jtr
