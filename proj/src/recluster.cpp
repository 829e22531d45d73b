#include "jtr/recluster.hpp"

#include <algorithm>

#include "bytes.hpp"
#include "jtr/error.hpp"
#include "jtr/retrieval.hpp"

namespace jtr {

SparseBinaryMatrix route_queries(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries,
                                 uint32_t beam_width) {
    if (queries.size() == 0) {
        raise(ErrorCode::EmptyQuerySet, "route_queries needs at least one query");
    }
    if (queries.dim() != encoder.in_dim()) {
        raise(ErrorCode::DimensionMismatch, "query dim " + std::to_string(queries.dim()) + " vs encoder input dim " +
                                                std::to_string(encoder.in_dim()));
    }
    SparseBinaryMatrix routes(queries.size(), tree.num_leaves());
    std::vector<uint32_t> cols;
    for (size_t q = 0; q < queries.size(); ++q) {
        std::vector<float> embedded = encoder.encode(queries.features_of(q), queries.dim());
        std::vector<uint64_t> leaves = beam_search_leaves(tree, embedded, beam_width);
        cols.clear();
        for (uint64_t leaf : leaves) {
            cols.push_back(tree.leaf_column(leaf));
        }
        std::sort(cols.begin(), cols.end());
        routes.set_row(q, cols);
    }
    return routes;
}

SparseBinaryMatrix feedback_matrix(const QueryEncoder& encoder, const QuerySet& queries, const Corpus& corpus,
                                   uint32_t k) {
    if (queries.size() == 0) {
        raise(ErrorCode::EmptyQuerySet, "feedback_matrix needs at least one query");
    }
    if (k == 0 || k > corpus.size()) {
        raise(ErrorCode::KTooLarge, "feedback depth " + std::to_string(k) + " not in [1, " +
                                        std::to_string(corpus.size()) + "]");
    }
    SparseBinaryMatrix feedback(queries.size(), corpus.size());
    std::vector<uint32_t> cols;
    for (size_t q = 0; q < queries.size(); ++q) {
        std::vector<RankedDoc> top = brute_force(encoder, queries.features_of(q), queries.dim(), corpus, k);
        cols.clear();
        for (const RankedDoc& rd : top) {
            cols.push_back(rd.doc);
        }
        std::sort(cols.begin(), cols.end());
        feedback.set_row(q, cols);
    }
    return feedback;
}

void include_judged(SparseBinaryMatrix& feedback, const QuerySet& queries, const Qrels& qrels, const Corpus& corpus) {
    if (feedback.rows() != queries.size()) {
        raise(ErrorCode::ShapeMismatch, "feedback has " + std::to_string(feedback.rows()) + " rows for " +
                                            std::to_string(queries.size()) + " queries");
    }
    if (feedback.cols() != corpus.size()) {
        raise(ErrorCode::ShapeMismatch, "feedback has " + std::to_string(feedback.cols()) + " columns for " +
                                            std::to_string(corpus.size()) + " docs");
    }
    std::vector<uint32_t> added;
    for (size_t q = 0; q < queries.size(); ++q) {
        const auto& judged = qrels.for_query(queries.query_id(q));
        if (judged.empty()) {
            continue;
        }
        const std::vector<uint32_t>& row = feedback.row(q);
        added.clear();
        for (const auto& [doc_id, rel] : judged) {
            if (rel < 1) {
                continue;
            }
            uint32_t col = static_cast<uint32_t>(corpus.index_of(doc_id));
            if (!std::binary_search(row.begin(), row.end(), col)) {
                added.push_back(col);
            }
        }
        if (!added.empty()) {
            std::vector<uint32_t> merged(row.begin(), row.end());
            merged.insert(merged.end(), added.begin(), added.end());
            std::sort(merged.begin(), merged.end());
            feedback.set_row(q, merged);
        }
    }
}

uint32_t CountMatrix::at(size_t row, uint32_t col) const {
    if (row >= rows) {
        raise(ErrorCode::ShapeMismatch, "count row " + std::to_string(row) + " out of range");
    }
    for (const auto& [c, n] : entries[row]) {
        if (c == col) {
            return n;
        }
    }
    return 0;
}

CountMatrix doc_leaf_counts(const SparseBinaryMatrix& feedback, const SparseBinaryMatrix& routes) {
    if (feedback.rows() != routes.rows()) {
        raise(ErrorCode::ShapeMismatch, "feedback has " + std::to_string(feedback.rows()) + " rows, routes " +
                                            std::to_string(routes.rows()));
    }
    CountMatrix counts;
    counts.rows = feedback.cols();
    counts.cols = routes.cols();
    counts.entries.resize(counts.rows);

    SparseBinaryMatrix queries_of_doc = feedback.transposed();
    std::vector<uint32_t> scratch(counts.cols, 0);
    std::vector<uint32_t> touched;
    for (size_t doc = 0; doc < counts.rows; ++doc) {
        touched.clear();
        for (uint32_t q : queries_of_doc.row(doc)) {
            for (uint32_t leaf : routes.row(q)) {
                if (scratch[leaf] == 0) {
                    touched.push_back(leaf);
                }
                scratch[leaf] += 1;
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& row = counts.entries[doc];
        row.reserve(touched.size());
        for (uint32_t leaf : touched) {
            row.emplace_back(leaf, scratch[leaf]);
            scratch[leaf] = 0;
        }
    }
    return counts;
}

std::vector<std::pair<uint64_t, std::vector<uint32_t>>> reassign_leaves(const SparseBinaryMatrix& feedback,
                                                                        const SparseBinaryMatrix& routes,
                                                                        uint32_t max_leaves, const TreeIndex& tree) {
    if (max_leaves == 0) {
        raise(ErrorCode::ConfigError, "max_leaves must be at least 1");
    }
    if (routes.cols() != tree.num_leaves()) {
        raise(ErrorCode::ShapeMismatch, "routes have " + std::to_string(routes.cols()) + " leaf columns, tree has " +
                                            std::to_string(tree.num_leaves()));
    }
    if (feedback.cols() != tree.doc_count()) {
        raise(ErrorCode::ShapeMismatch, "feedback has " + std::to_string(feedback.cols()) + " doc columns, tree has " +
                                            std::to_string(tree.doc_count()));
    }
    CountMatrix counts = doc_leaf_counts(feedback, routes);

    std::vector<std::pair<uint64_t, std::vector<uint32_t>>> result;
    result.reserve(tree.num_leaves());
    for (uint64_t leaf : tree.leaf_ids()) {
        result.emplace_back(leaf, std::vector<uint32_t>());
    }

    // candidate tuple: count, currently-assigned flag, leaf column
    struct Candidate {
        uint32_t count;
        bool original;
        uint32_t col;
    };
    std::vector<Candidate> cands;
    std::vector<char> original(tree.num_leaves(), 0);
    for (uint32_t doc = 0; doc < tree.doc_count(); ++doc) {
        const std::vector<uint64_t>& current = tree.leaves_of_doc(doc);
        if (counts.entries[doc].empty()) {
            // no feedback touches this doc, leave it where it is
            for (uint64_t leaf : current) {
                result[tree.leaf_column(leaf)].second.push_back(doc);
            }
            continue;
        }
        for (uint64_t leaf : current) {
            original[tree.leaf_column(leaf)] = 1;
        }
        cands.clear();
        for (const auto& [col, count] : counts.entries[doc]) {
            cands.push_back({count, original[col] != 0, col});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.count != b.count) {
                return a.count > b.count;
            }
            if (a.original != b.original) {
                return a.original;
            }
            return a.col < b.col;
        });
        size_t take = std::min<size_t>(max_leaves, cands.size());
        for (size_t i = 0; i < take; ++i) {
            result[cands[i].col].second.push_back(doc);
        }
        for (uint64_t leaf : current) {
            original[tree.leaf_column(leaf)] = 0;
        }
    }
    return result;
}

SparseBinaryMatrix assignment_matrix(const TreeIndex& tree) {
    SparseBinaryMatrix assignment(tree.doc_count(), tree.num_leaves());
    std::vector<uint32_t> cols;
    for (uint32_t doc = 0; doc < tree.doc_count(); ++doc) {
        cols.clear();
        for (uint64_t leaf : tree.leaves_of_doc(doc)) {
            cols.push_back(tree.leaf_column(leaf));
        }
        std::sort(cols.begin(), cols.end());
        assignment.set_row(doc, cols);
    }
    return assignment;
}

SparseBinaryMatrix predicted_feedback(const SparseBinaryMatrix& routes, const SparseBinaryMatrix& assignment) {
    if (routes.cols() != assignment.cols()) {
        raise(ErrorCode::ShapeMismatch, "routes have " + std::to_string(routes.cols()) + " leaf columns, assignment " +
                                            std::to_string(assignment.cols()));
    }
    SparseBinaryMatrix docs_of_leaf = assignment.transposed();
    SparseBinaryMatrix predicted(routes.rows(), assignment.rows());
    std::vector<uint32_t> reached;
    for (size_t q = 0; q < routes.rows(); ++q) {
        reached.clear();
        for (uint32_t leaf : routes.row(q)) {
            const auto& docs = docs_of_leaf.row(leaf);
            reached.insert(reached.end(), docs.begin(), docs.end());
        }
        std::sort(reached.begin(), reached.end());
        reached.erase(std::unique(reached.begin(), reached.end()), reached.end());
        predicted.set_row(q, reached);
    }
    return predicted;
}

uint64_t overlap_count(const SparseBinaryMatrix& truth, const SparseBinaryMatrix& predicted) {
    if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
        raise(ErrorCode::ShapeMismatch, "overlap needs matching shapes, got " + std::to_string(truth.rows()) + "x" +
                                            std::to_string(truth.cols()) + " and " + std::to_string(predicted.rows()) +
                                            "x" + std::to_string(predicted.cols()));
    }
    uint64_t total = 0;
    for (size_t r = 0; r < truth.rows(); ++r) {
        const auto& a = truth.row(r);
        const auto& b = predicted.row(r);
        size_t i = 0;
        size_t j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] == b[j]) {
                total += 1;
                ++i;
                ++j;
            } else if (a[i] < b[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }
    return total;
}

void save_doc_leaf_counts(const CountMatrix& counts, const Corpus& corpus, const TreeIndex& tree,
                          const std::string& path) {
    if (counts.rows != corpus.size()) {
        raise(ErrorCode::ShapeMismatch, "count matrix has " + std::to_string(counts.rows) + " rows for " +
                                            std::to_string(corpus.size()) + " docs");
    }
    std::string out = "# doc_id\tleaf_node_id\tcount\n";
    for (size_t doc = 0; doc < counts.rows; ++doc) {
        for (const auto& [col, count] : counts.entries[doc]) {
            out += corpus.doc_id(doc);
            out += '\t';
            out += std::to_string(tree.leaf_ids()[col]);
            out += '\t';
            out += std::to_string(count);
            out += '\n';
        }
    }
    bytes::write_file(path, out);
}

} // namespace jtr
