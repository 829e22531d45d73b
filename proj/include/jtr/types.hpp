#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace jtr {

// Dense row-major float32 matrix. Embeddings and model parameters are stored
// in float32; computations that need headroom (loss terms, metric sums,
// gradient math) accumulate in float64 at the call site.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols);
    Matrix(size_t rows, size_t cols, std::vector<float> values);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    float* row(size_t i) { return values_.data() + i * cols_; }
    const float* row(size_t i) const { return values_.data() + i * cols_; }
    float& at(size_t i, size_t j) { return values_[i * cols_ + j]; }
    float at(size_t i, size_t j) const { return values_[i * cols_ + j]; }

    std::vector<float>& values() { return values_; }
    const std::vector<float>& values() const { return values_; }

    bool all_finite() const;

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<float> values_;
};

// inner product over float32 inputs, accumulated in float32; this single
// routine backs node scoring, leaf document scoring and the brute-force
// oracle so the tree path and the oracle agree bit for bit
float dot_f32(const float* a, const float* b, size_t n);

// same product accumulated in float64, for loss and gradient math
double dot_f64(const float* a, const float* b, size_t n);

// Document collection: one opaque string id per row of the embedding matrix.
// Ids are unique; lookup goes through index_of().
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<std::string> doc_ids, Matrix embeddings);

    size_t size() const { return doc_ids_.size(); }
    size_t dim() const { return embeddings_.cols(); }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::string& doc_id(size_t i) const { return doc_ids_[i]; }
    const Matrix& embeddings() const { return embeddings_; }

    // dense row index for an id; raises UnknownId when absent
    uint32_t index_of(const std::string& doc_id) const;
    bool contains(const std::string& doc_id) const;

private:
    std::vector<std::string> doc_ids_;
    Matrix embeddings_;
    std::unordered_map<std::string, uint32_t> index_;
};

// Query collection, same layout as Corpus but holding raw query features
// (the encoder input, not the encoded embedding).
class QuerySet {
public:
    QuerySet() = default;
    QuerySet(std::vector<std::string> query_ids, Matrix features);

    size_t size() const { return query_ids_.size(); }
    size_t dim() const { return features_.cols(); }
    const std::vector<std::string>& query_ids() const { return query_ids_; }
    const std::string& query_id(size_t i) const { return query_ids_[i]; }
    const Matrix& features() const { return features_; }
    const float* features_of(size_t i) const { return features_.row(i); }

    uint32_t index_of(const std::string& query_id) const;
    bool contains(const std::string& query_id) const;

private:
    std::vector<std::string> query_ids_;
    Matrix features_;
    std::unordered_map<std::string, uint32_t> index_;
};

struct Judgment {
    std::string query_id;
    std::string doc_id;
    uint32_t relevance = 0;
};

// Relevance judgments. Construction rejects duplicate (query, doc) pairs;
// per-query lookup preserves input order.
class Qrels {
public:
    Qrels() = default;
    explicit Qrels(std::vector<Judgment> judgments);

    const std::vector<Judgment>& judgments() const { return judgments_; }
    size_t size() const { return judgments_.size(); }

    // judged (doc_id, relevance) pairs for a query, empty when unseen
    const std::vector<std::pair<std::string, uint32_t>>& for_query(const std::string& query_id) const;

private:
    std::vector<Judgment> judgments_;
    std::unordered_map<std::string, std::vector<std::pair<std::string, uint32_t>>> by_query_;
};

// Binary matrix stored as sorted column indices per row. Used for the
// query-to-leaf routing matrix, the feedback matrix and leaf assignments.
class SparseBinaryMatrix {
public:
    SparseBinaryMatrix() = default;
    SparseBinaryMatrix(size_t rows, size_t cols);

    size_t rows() const { return row_cols_.size(); }
    size_t cols() const { return cols_; }
    size_t nnz() const;

    // columns must be strictly ascending and < cols()
    void set_row(size_t row, std::vector<uint32_t> columns);
    const std::vector<uint32_t>& row(size_t row) const { return row_cols_[row]; }
    bool at(size_t row, uint32_t col) const;

    SparseBinaryMatrix transposed() const;

private:
    size_t cols_ = 0;
    std::vector<std::vector<uint32_t>> row_cols_;
};

struct ScoredDoc {
    std::string doc_id;
    float score = 0.0f;
};

// Ranked retrieval output for a set of queries, in insertion order. Scores
// within a query must be non-increasing and doc ids unique.
class RunResult {
public:
    void add_query(const std::string& query_id, std::vector<ScoredDoc> ranked);

    size_t num_queries() const { return entries_.size(); }
    const std::string& query_id(size_t i) const { return entries_[i].first; }
    const std::vector<ScoredDoc>& ranking(size_t i) const { return entries_[i].second; }

private:
    std::vector<std::pair<std::string, std::vector<ScoredDoc>>> entries_;
    std::unordered_map<std::string, size_t> seen_;
};

} // namespace jtr
