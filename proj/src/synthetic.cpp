#include "jtr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "jtr/error.hpp"
#include "jtr/rng.hpp"

namespace jtr {

namespace {

// unit-length Gaussian direction, redrawn in the measure-zero case of a
// vanishing norm so the scale below stays meaningful
std::vector<double> unit_direction(Rng& rng, size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (size_t j = 0; j < dim; ++j) {
            v[j] = rng.next_gaussian();
            norm += v[j] * v[j];
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (size_t j = 0; j < dim; ++j) {
        v[j] /= norm;
    }
    return v;
}

} // namespace

SyntheticData generate_blobs(const BlobSpec& spec) {
    if (spec.num_blobs == 0 || spec.docs_per_blob == 0 || spec.dim == 0 || spec.num_queries == 0) {
        raise(ErrorCode::ConfigError, "blob counts, dim and query count must all be at least 1");
    }
    if (spec.rels_per_query == 0 || spec.rels_per_query > spec.docs_per_blob) {
        raise(ErrorCode::ConfigError, "rels_per_query " + std::to_string(spec.rels_per_query) + " not in [1, " +
                                          std::to_string(spec.docs_per_blob) + "]");
    }
    if (!(spec.noise >= 0.0f) || !(spec.blob_spread > spec.noise)) {
        raise(ErrorCode::ConfigError, "blobs need blob_spread > noise >= 0");
    }

    Rng rng(spec.seed);
    size_t dim = spec.dim;

    std::vector<std::vector<double>> centers(spec.num_blobs);
    for (uint32_t b = 0; b < spec.num_blobs; ++b) {
        centers[b] = unit_direction(rng, dim);
        for (size_t j = 0; j < dim; ++j) {
            centers[b][j] *= double(spec.blob_spread);
        }
    }

    size_t num_docs = size_t(spec.num_blobs) * spec.docs_per_blob;
    Matrix doc_features(num_docs, dim);
    std::vector<std::string> doc_ids(num_docs);
    for (uint32_t b = 0; b < spec.num_blobs; ++b) {
        for (uint32_t i = 0; i < spec.docs_per_blob; ++i) {
            size_t row = size_t(b) * spec.docs_per_blob + i;
            doc_ids[row] = "d" + std::to_string(row);
            for (size_t j = 0; j < dim; ++j) {
                doc_features.at(row, j) = float(centers[b][j] + double(spec.noise) * rng.next_gaussian());
            }
        }
    }

    Matrix query_features(spec.num_queries, dim);
    std::vector<std::string> query_ids(spec.num_queries);
    std::vector<uint32_t> query_blob(spec.num_queries);
    for (uint32_t q = 0; q < spec.num_queries; ++q) {
        query_ids[q] = "q" + std::to_string(q);
        query_blob[q] = q % spec.num_blobs;
        const auto& c = centers[query_blob[q]];
        for (size_t j = 0; j < dim; ++j) {
            query_features.at(q, j) = float(c[j] + double(spec.noise) * rng.next_gaussian());
        }
    }

    // judgments: the closest blob documents by the same dot product the
    // index scores with, ties to the lower document index
    std::vector<Judgment> judgments;
    judgments.reserve(size_t(spec.num_queries) * spec.rels_per_query);
    std::vector<std::pair<float, uint32_t>> scored(spec.docs_per_blob);
    for (uint32_t q = 0; q < spec.num_queries; ++q) {
        uint32_t base = query_blob[q] * spec.docs_per_blob;
        for (uint32_t i = 0; i < spec.docs_per_blob; ++i) {
            float s = dot_f32(query_features.row(q), doc_features.row(base + i), dim);
            scored[i] = {s, base + i};
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return a.second < b.second;
        });
        for (uint32_t r = 0; r < spec.rels_per_query; ++r) {
            judgments.push_back({query_ids[q], doc_ids[scored[r].second], 1});
        }
    }

    return SyntheticData{Corpus(std::move(doc_ids), std::move(doc_features)),
                         QuerySet(std::move(query_ids), std::move(query_features)), Qrels(std::move(judgments))};
}

std::pair<QuerySet, Qrels> take_queries(const QuerySet& queries, const Qrels& qrels, size_t begin, size_t count) {
    if (count == 0 || begin + count > queries.size()) {
        raise(ErrorCode::ConfigError, "query slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                          ") out of range for " + std::to_string(queries.size()) + " queries");
    }
    std::vector<std::string> ids(count);
    Matrix features(count, queries.dim());
    std::unordered_set<std::string> kept;
    for (size_t i = 0; i < count; ++i) {
        ids[i] = queries.query_id(begin + i);
        kept.insert(ids[i]);
        const float* src = queries.features_of(begin + i);
        std::copy(src, src + queries.dim(), features.row(i));
    }
    std::vector<Judgment> judgments;
    for (const auto& j : qrels.judgments()) {
        if (kept.count(j.query_id)) {
            judgments.push_back(j);
        }
    }
    return {QuerySet(std::move(ids), std::move(features)), Qrels(std::move(judgments))};
}

} // namespace jtr
