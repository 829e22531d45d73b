#include "jtr/types.hpp"

#include <algorithm>
#include <cmath>

#include "jtr/error.hpp"

namespace jtr {

Matrix::Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}

Matrix::Matrix(size_t rows, size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        raise(ErrorCode::ShapeMismatch, "matrix of " + std::to_string(rows) + "x" + std::to_string(cols) +
                                            " given " + std::to_string(values_.size()) + " values");
    }
}

bool Matrix::all_finite() const {
    for (float v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

float dot_f32(const float* a, const float* b, size_t n) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; i++) acc += a[i] * b[i];
    return acc;
}

double dot_f64(const float* a, const float* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; i++) acc += double(a[i]) * double(b[i]);
    return acc;
}

namespace {

std::unordered_map<std::string, uint32_t> build_index(const std::vector<std::string>& ids,
                                                      const char* what) {
    std::unordered_map<std::string, uint32_t> index;
    index.reserve(ids.size());
    for (size_t i = 0; i < ids.size(); i++) {
        if (ids[i].empty()) raise(ErrorCode::StructureInvalid, std::string("empty ") + what + " id");
        auto [it, inserted] = index.emplace(ids[i], uint32_t(i));
        (void)it;
        if (!inserted) raise(ErrorCode::StructureInvalid, std::string("duplicate ") + what + " id " + ids[i]);
    }
    return index;
}

} // namespace

Corpus::Corpus(std::vector<std::string> doc_ids, Matrix embeddings)
    : doc_ids_(std::move(doc_ids)), embeddings_(std::move(embeddings)) {
    if (doc_ids_.size() != embeddings_.rows()) {
        raise(ErrorCode::ShapeMismatch, "corpus has " + std::to_string(doc_ids_.size()) + " ids for " +
                                            std::to_string(embeddings_.rows()) + " embedding rows");
    }
    if (doc_ids_.empty()) raise(ErrorCode::StructureInvalid, "corpus is empty");
    if (embeddings_.cols() == 0) raise(ErrorCode::StructureInvalid, "corpus dimension is zero");
    if (!embeddings_.all_finite()) raise(ErrorCode::NonFiniteValue, "corpus embeddings contain a non-finite value");
    index_ = build_index(doc_ids_, "doc");
}

uint32_t Corpus::index_of(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) raise(ErrorCode::UnknownId, "doc id " + doc_id + " not in corpus");
    return it->second;
}

bool Corpus::contains(const std::string& doc_id) const { return index_.count(doc_id) != 0; }

QuerySet::QuerySet(std::vector<std::string> query_ids, Matrix features)
    : query_ids_(std::move(query_ids)), features_(std::move(features)) {
    if (query_ids_.size() != features_.rows()) {
        raise(ErrorCode::ShapeMismatch, "query set has " + std::to_string(query_ids_.size()) + " ids for " +
                                            std::to_string(features_.rows()) + " feature rows");
    }
    if (!query_ids_.empty() && features_.cols() == 0) {
        raise(ErrorCode::StructureInvalid, "query dimension is zero");
    }
    if (!features_.all_finite()) raise(ErrorCode::NonFiniteValue, "query features contain a non-finite value");
    index_ = build_index(query_ids_, "query");
}

uint32_t QuerySet::index_of(const std::string& query_id) const {
    auto it = index_.find(query_id);
    if (it == index_.end()) raise(ErrorCode::UnknownId, "query id " + query_id + " not in query set");
    return it->second;
}

bool QuerySet::contains(const std::string& query_id) const { return index_.count(query_id) != 0; }

Qrels::Qrels(std::vector<Judgment> judgments) : judgments_(std::move(judgments)) {
    for (const Judgment& j : judgments_) {
        auto& rows = by_query_[j.query_id];
        for (const auto& [doc, rel] : rows) {
            (void)rel;
            if (doc == j.doc_id) {
                raise(ErrorCode::DuplicatePair, "judgment repeated for (" + j.query_id + ", " + j.doc_id + ")");
            }
        }
        rows.emplace_back(j.doc_id, j.relevance);
    }
}

const std::vector<std::pair<std::string, uint32_t>>& Qrels::for_query(const std::string& query_id) const {
    static const std::vector<std::pair<std::string, uint32_t>> empty;
    auto it = by_query_.find(query_id);
    return it == by_query_.end() ? empty : it->second;
}

SparseBinaryMatrix::SparseBinaryMatrix(size_t rows, size_t cols) : cols_(cols), row_cols_(rows) {}

size_t SparseBinaryMatrix::nnz() const {
    size_t n = 0;
    for (const auto& r : row_cols_) n += r.size();
    return n;
}

void SparseBinaryMatrix::set_row(size_t row, std::vector<uint32_t> columns) {
    if (row >= row_cols_.size()) raise(ErrorCode::ShapeMismatch, "row index out of range");
    for (size_t i = 0; i < columns.size(); i++) {
        if (columns[i] >= cols_) raise(ErrorCode::ShapeMismatch, "column index out of range");
        if (i > 0 && columns[i] <= columns[i - 1]) {
            raise(ErrorCode::ShapeMismatch, "row columns must be strictly ascending");
        }
    }
    row_cols_[row] = std::move(columns);
}

bool SparseBinaryMatrix::at(size_t row, uint32_t col) const {
    const auto& r = row_cols_[row];
    return std::binary_search(r.begin(), r.end(), col);
}

SparseBinaryMatrix SparseBinaryMatrix::transposed() const {
    SparseBinaryMatrix t(cols_, rows());
    for (size_t i = 0; i < rows(); i++) {
        for (uint32_t c : row_cols_[i]) t.row_cols_[c].push_back(uint32_t(i));
    }
    return t;
}

void RunResult::add_query(const std::string& query_id, std::vector<ScoredDoc> ranked) {
    if (seen_.count(query_id)) raise(ErrorCode::DuplicatePair, "query " + query_id + " already in run");
    std::unordered_map<std::string, int> docs;
    for (size_t i = 0; i < ranked.size(); i++) {
        if (!docs.emplace(ranked[i].doc_id, 1).second) {
            raise(ErrorCode::DuplicatePair, "doc " + ranked[i].doc_id + " repeated for query " + query_id);
        }
        if (i > 0 && ranked[i].score > ranked[i - 1].score) {
            raise(ErrorCode::StructureInvalid, "scores must be non-increasing for query " + query_id);
        }
    }
    seen_.emplace(query_id, entries_.size());
    entries_.emplace_back(query_id, std::move(ranked));
}

} // namespace jtr
