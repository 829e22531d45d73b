#include "jtr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "jtr/error.hpp"
#include "jtr/retrieval.hpp"

namespace jtr {

namespace {

void check_k(uint32_t k) {
    if (k == 0) {
        raise(ErrorCode::ConfigError, "metric cutoff k must be at least 1");
    }
}

std::unordered_map<std::string, uint32_t> relevance_of(const Qrels& qrels, const std::string& query_id) {
    std::unordered_map<std::string, uint32_t> rel;
    for (const auto& [doc_id, r] : qrels.for_query(query_id)) {
        rel.emplace(doc_id, r);
    }
    return rel;
}

double finish_mean(double sum, size_t used, const char* metric) {
    if (used == 0) {
        raise(ErrorCode::EmptyQuerySet, std::string(metric) + " has no evaluable queries");
    }
    return sum / double(used);
}

} // namespace

double mrr_at_k(const RunResult& run, const Qrels& qrels, uint32_t k) {
    check_k(k);
    double sum = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < run.num_queries(); ++i) {
        auto rel = relevance_of(qrels, run.query_id(i));
        bool any_relevant = std::any_of(rel.begin(), rel.end(), [](const auto& p) { return p.second >= 1; });
        if (!any_relevant) {
            continue;
        }
        used += 1;
        const auto& ranking = run.ranking(i);
        size_t depth = std::min<size_t>(k, ranking.size());
        for (size_t r = 0; r < depth; ++r) {
            auto it = rel.find(ranking[r].doc_id);
            if (it != rel.end() && it->second >= 1) {
                sum += 1.0 / double(r + 1);
                break;
            }
        }
    }
    return finish_mean(sum, used, "MRR");
}

double recall_at_k(const RunResult& run, const Qrels& qrels, uint32_t k) {
    check_k(k);
    double sum = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < run.num_queries(); ++i) {
        auto rel = relevance_of(qrels, run.query_id(i));
        size_t relevant = 0;
        for (const auto& [doc_id, r] : rel) {
            if (r >= 1) {
                relevant += 1;
            }
        }
        if (relevant == 0) {
            continue;
        }
        used += 1;
        const auto& ranking = run.ranking(i);
        size_t depth = std::min<size_t>(k, ranking.size());
        size_t found = 0;
        for (size_t r = 0; r < depth; ++r) {
            auto it = rel.find(ranking[r].doc_id);
            if (it != rel.end() && it->second >= 1) {
                found += 1;
            }
        }
        sum += double(found) / double(relevant);
    }
    return finish_mean(sum, used, "recall");
}

double ndcg_at_k(const RunResult& run, const Qrels& qrels, uint32_t k) {
    check_k(k);
    double sum = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < run.num_queries(); ++i) {
        const auto& judged = qrels.for_query(run.query_id(i));

        // ideal gain: judged relevances sorted descending, best k
        std::vector<uint32_t> rels;
        rels.reserve(judged.size());
        for (const auto& [doc_id, r] : judged) {
            rels.push_back(r);
        }
        std::sort(rels.begin(), rels.end(), std::greater<uint32_t>());
        double ideal = 0.0;
        for (size_t r = 0; r < std::min<size_t>(k, rels.size()); ++r) {
            ideal += (std::exp2(double(rels[r])) - 1.0) / std::log2(double(r + 2));
        }
        if (ideal == 0.0) {
            continue;
        }
        used += 1;

        auto rel = relevance_of(qrels, run.query_id(i));
        const auto& ranking = run.ranking(i);
        double dcg = 0.0;
        size_t depth = std::min<size_t>(k, ranking.size());
        for (size_t r = 0; r < depth; ++r) {
            auto it = rel.find(ranking[r].doc_id);
            if (it != rel.end() && it->second >= 1) {
                dcg += (std::exp2(double(it->second)) - 1.0) / std::log2(double(r + 2));
            }
        }
        sum += dcg / ideal;
    }
    return finish_mean(sum, used, "NDCG");
}

double measure_aqt(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries, const Corpus& corpus,
                   uint32_t beam_width, uint32_t top_k) {
    const size_t warm = 10;
    if (queries.size() <= warm) {
        raise(ErrorCode::EmptyQuerySet, "timing needs more than " + std::to_string(warm) + " queries, got " +
                                            std::to_string(queries.size()));
    }
    for (size_t q = 0; q < warm; ++q) {
        retrieve(tree, encoder, queries.features_of(q), queries.dim(), corpus, beam_width, top_k);
    }
    double total_ms = 0.0;
    for (size_t q = warm; q < queries.size(); ++q) {
        auto start = std::chrono::steady_clock::now();
        retrieve(tree, encoder, queries.features_of(q), queries.dim(), corpus, beam_width, top_k);
        auto stop = std::chrono::steady_clock::now();
        total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
    }
    return total_ms / double(queries.size() - warm);
}

double beam_retrievability(const TreeIndex& tree, const QueryEncoder& encoder, const QuerySet& queries,
                           const Qrels& qrels, const Corpus& corpus, uint32_t beam_width) {
    if (tree.doc_count() != corpus.size()) {
        raise(ErrorCode::DimensionMismatch, "tree indexes " + std::to_string(tree.doc_count()) + " docs, corpus has " +
                                                std::to_string(corpus.size()));
    }
    double sum = 0.0;
    size_t used = 0;
    for (size_t q = 0; q < queries.size(); ++q) {
        std::vector<uint32_t> relevant;
        for (const auto& [doc_id, r] : qrels.for_query(queries.query_id(q))) {
            if (r >= 1) {
                relevant.push_back(corpus.index_of(doc_id));
            }
        }
        if (relevant.empty()) {
            continue;
        }
        used += 1;

        std::vector<float> embedded = encoder.encode(queries.features_of(q), queries.dim());
        std::set<uint32_t> reachable;
        for (uint64_t leaf : beam_search_leaves(tree, embedded, beam_width)) {
            const auto& docs = tree.docs_of_leaf(leaf);
            reachable.insert(docs.begin(), docs.end());
        }
        size_t inside = 0;
        for (uint32_t doc : relevant) {
            if (reachable.count(doc)) {
                inside += 1;
            }
        }
        sum += double(inside) / double(relevant.size());
    }
    return finish_mean(sum, used, "beam retrievability");
}

} // namespace jtr
