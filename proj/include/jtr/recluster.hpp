#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jtr/encoder.hpp"
#include "jtr/tree.hpp"
#include "jtr/types.hpp"

namespace jtr {

// Reclustering moves documents into the leaves that retrieval feedback says
// their queries actually reach. Two binary matrices drive it, both with one
// row per training query: the routing matrix (columns are leaf columns,
// ones at the leaves the beam visits) and the feedback matrix (columns are
// documents, ones at the docs the query should find). Counting co-occurrence
// gives, per document, how many queries both want the doc and reach each
// leaf; every document then keeps its best few leaves.

// run the beam for every query; row q holds the leaf columns visited
SparseBinaryMatrix route_queries(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries,
                                 uint32_t beam_width);

// exact top-k docs per query by brute force; exactly k ones per row
SparseBinaryMatrix feedback_matrix(const QueryEncoder& encoder, const QuerySet& queries, const Corpus& corpus,
                                   uint32_t k);

// force the judged docs (relevance >= 1) into a feedback matrix, so known
// positives survive even when the brute-force top-k misses them
void include_judged(SparseBinaryMatrix& feedback, const QuerySet& queries, const Qrels& qrels, const Corpus& corpus);

// sparse count matrix, rows are docs, entries (leaf column, count > 0)
struct CountMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<std::vector<std::pair<uint32_t, uint32_t>>> entries;

    uint32_t at(size_t row, uint32_t col) const;
};

// per-document leaf counts: how many queries want the doc and reach the leaf
CountMatrix doc_leaf_counts(const SparseBinaryMatrix& feedback, const SparseBinaryMatrix& routes);

// The new assignment: each document keeps the max_leaves leaves with the
// highest counts, ties preferring the document's current leaves and then
// the lower leaf column. Documents no query asked for keep all their
// current leaves. Returns one (leaf id, docs) entry per leaf, ready for
// TreeIndex::set_leaf_docs.
std::vector<std::pair<uint64_t, std::vector<uint32_t>>> reassign_leaves(const SparseBinaryMatrix& feedback,
                                                                        const SparseBinaryMatrix& routes,
                                                                        uint32_t max_leaves, const TreeIndex& tree);

// current doc-to-leaf-column assignment as a binary matrix (docs x leaves)
SparseBinaryMatrix assignment_matrix(const TreeIndex& tree);

// docs each query's beamed leaves would hand to scoring: predicted[q, d] = 1
// iff some visited leaf holds d
SparseBinaryMatrix predicted_feedback(const SparseBinaryMatrix& routes, const SparseBinaryMatrix& assignment);

// number of (query, doc) pairs present in both matrices; used as the
// retrievability proxy that reclustering tries to raise
uint64_t overlap_count(const SparseBinaryMatrix& truth, const SparseBinaryMatrix& predicted);

// debug dump, TSV rows "doc_id<TAB>leaf_node_id<TAB>count"
void save_doc_leaf_counts(const CountMatrix& counts, const Corpus& corpus, const TreeIndex& tree,
                          const std::string& path);

} // namespace jtr
