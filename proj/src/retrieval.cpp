#include "jtr/retrieval.hpp"

#include <algorithm>
#include <chrono>

#include "jtr/error.hpp"

namespace jtr {

namespace {

struct Scored {
    uint64_t id;
    float score;
};

// (score desc, id asc)
bool better(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

// keep the best `keep` of `candidates`, order of the result is best first
std::vector<uint64_t> select_top(const TreeIndex& tree, const std::vector<uint64_t>& candidates, size_t keep,
                                 const std::vector<float>& query_embedding, SearchStats& stats) {
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (uint64_t id : candidates) {
        scored.push_back({id, node_score(tree.node(id), query_embedding)});
        stats.node_scores++;
    }
    std::sort(scored.begin(), scored.end(), better);
    std::vector<uint64_t> out;
    out.reserve(keep);
    for (size_t i = 0; i < keep; i++) out.push_back(scored[i].id);
    return out;
}

} // namespace

std::vector<uint64_t> beam_search_leaves(const TreeIndex& tree, const std::vector<float>& query_embedding,
                                         uint32_t beam_width, SearchStats* stats) {
    if (beam_width == 0) raise(ErrorCode::ConfigError, "beam width must be at least 1");
    if (query_embedding.size() != tree.dim()) {
        raise(ErrorCode::DimensionMismatch, "query embedding dimension " + std::to_string(query_embedding.size()) +
                                                " against tree dimension " + std::to_string(tree.dim()));
    }
    SearchStats local;
    SearchStats& st = stats ? *stats : local;

    std::vector<uint64_t> result;
    std::vector<uint64_t> frontier = {0};

    while (!frontier.empty() && result.size() < beam_width) {
        std::vector<uint64_t> leaves, internals;
        for (uint64_t id : frontier) {
            (tree.node(id).is_leaf() ? leaves : internals).push_back(id);
        }

        size_t open = beam_width - result.size();
        if (leaves.size() <= open) {
            result.insert(result.end(), leaves.begin(), leaves.end());
        } else {
            // more leaves than room: the beam ends on the best of them
            for (uint64_t id : select_top(tree, leaves, open, query_embedding, st)) result.push_back(id);
            break;
        }

        open = beam_width - result.size();
        if (open == 0) break;

        std::vector<uint64_t> expand;
        if (internals.size() <= open) {
            expand = std::move(internals);
        } else {
            expand = select_top(tree, internals, open, query_embedding, st);
        }

        frontier.clear();
        for (uint64_t id : expand) {
            const auto& children = tree.node(id).children;
            frontier.insert(frontier.end(), children.begin(), children.end());
        }
    }

    st.leaves_visited += result.size();
    return result;
}

namespace {

std::vector<RankedDoc> rank_docs(std::vector<RankedDoc> scored, uint32_t top_k) {
    std::sort(scored.begin(), scored.end(), [](const RankedDoc& a, const RankedDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    if (scored.size() > top_k) scored.resize(top_k);
    return scored;
}

} // namespace

std::vector<RankedDoc> retrieve(const TreeIndex& tree, const QueryEncoder& encoder, const float* query_features,
                                size_t feature_dim, const Corpus& corpus, uint32_t beam_width, uint32_t top_k,
                                SearchStats* stats) {
    if (top_k == 0) raise(ErrorCode::ConfigError, "top_k must be at least 1");
    if (tree.doc_count() != corpus.size()) {
        raise(ErrorCode::DimensionMismatch, "tree covers " + std::to_string(tree.doc_count()) +
                                                " docs but the corpus holds " + std::to_string(corpus.size()));
    }
    SearchStats local;
    SearchStats& st = stats ? *stats : local;
    auto start = std::chrono::steady_clock::now();

    std::vector<float> q = encoder.encode(query_features, feature_dim);
    if (q.size() != tree.dim()) {
        raise(ErrorCode::DimensionMismatch, "encoded query dimension " + std::to_string(q.size()) +
                                                " against tree dimension " + std::to_string(tree.dim()));
    }
    if (tree.dim() != corpus.dim()) {
        raise(ErrorCode::DimensionMismatch, "tree dimension " + std::to_string(tree.dim()) +
                                                " against corpus dimension " + std::to_string(corpus.dim()));
    }

    std::vector<uint64_t> leaves = beam_search_leaves(tree, q, beam_width, &st);

    std::vector<uint32_t> candidates;
    for (uint64_t leaf : leaves) {
        const auto& docs = tree.docs_of_leaf(leaf);
        candidates.insert(candidates.end(), docs.begin(), docs.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<RankedDoc> scored;
    scored.reserve(candidates.size());
    for (uint32_t d : candidates) {
        scored.push_back({d, dot_f32(corpus.embeddings().row(d), q.data(), q.size())});
        st.doc_scores++;
    }
    auto out = rank_docs(std::move(scored), top_k);
    st.wall_time_ns += uint64_t(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
    return out;
}

std::vector<RankedDoc> brute_force(const QueryEncoder& encoder, const float* query_features, size_t feature_dim,
                                   const Corpus& corpus, uint32_t top_k) {
    if (top_k == 0) raise(ErrorCode::ConfigError, "top_k must be at least 1");
    std::vector<float> q = encoder.encode(query_features, feature_dim);
    if (q.size() != corpus.dim()) {
        raise(ErrorCode::DimensionMismatch, "encoded query dimension " + std::to_string(q.size()) +
                                                " against corpus dimension " + std::to_string(corpus.dim()));
    }
    std::vector<RankedDoc> scored;
    scored.reserve(corpus.size());
    for (size_t d = 0; d < corpus.size(); d++) {
        scored.push_back({uint32_t(d), dot_f32(corpus.embeddings().row(d), q.data(), q.size())});
    }
    return rank_docs(std::move(scored), top_k);
}

} // namespace jtr
