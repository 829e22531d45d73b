#pragma once

// Reference implementations used only by tests. Everything here is written
// the slow, obvious way (exhaustive enumeration, dense products, f64 math)
// so the library can be checked against independently derived values.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "jtr/training.hpp"
#include "jtr/types.hpp"

namespace jtr_oracle {

// squared-error of a clustering, centroids recomputed as f64 means
inline double partition_sse(const jtr::Matrix& points, const std::vector<uint32_t>& assignment, uint32_t k) {
    size_t n = points.rows(), dim = points.cols();
    std::vector<double> sums(size_t(k) * dim, 0.0);
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; i++) {
        counts[assignment[i]]++;
        const float* p = points.row(i);
        double* s = sums.data() + size_t(assignment[i]) * dim;
        for (size_t j = 0; j < dim; j++) s[j] += p[j];
    }
    double sse = 0.0;
    for (size_t i = 0; i < n; i++) {
        const float* p = points.row(i);
        const double* s = sums.data() + size_t(assignment[i]) * dim;
        double cnt = double(counts[assignment[i]]);
        for (size_t j = 0; j < dim; j++) {
            double d = double(p[j]) - s[j] / cnt;
            sse += d * d;
        }
    }
    return sse;
}

// minimum squared error over every partition of n points into k non-empty
// clusters, by brute enumeration; feasible for n <= 12 or so
inline double best_partition_sse(const jtr::Matrix& points, uint32_t k) {
    size_t n = points.rows();
    std::vector<uint32_t> assignment(n, 0);
    double best = std::numeric_limits<double>::infinity();

    // canonical labels: point 0 is always cluster 0 and a new label may only
    // be one past the highest label used so far, so each partition is
    // visited exactly once
    auto rec = [&](auto&& self, size_t i, uint32_t used) -> void {
        if (i == n) {
            if (used == k) best = std::min(best, partition_sse(points, assignment, k));
            return;
        }
        if (used + (n - i) < k) return;
        uint32_t limit = std::min(uint32_t(used + 1), k);
        for (uint32_t c = 0; c < limit; c++) {
            assignment[i] = c;
            self(self, i + 1, std::max(used, c + 1));
        }
    };
    rec(rec, 0, 0);
    return best;
}

// Shadow copies of every parameter the loss touches, in f64. The loss is
// evaluated from these alone so finite differences probe exactly the same
// function the analytic gradients claim to differentiate.
struct ShadowParams {
    std::map<uint64_t, std::vector<double>> node_emb;
    std::vector<double> weight; // out_dim x in_dim
    std::vector<double> bias;   // out_dim

    static ShadowParams capture(const jtr::TrainingInstance& inst, const jtr::TreeIndex& tree,
                                const jtr::QueryEncoder& enc) {
        ShadowParams p;
        for (const auto& level : inst.levels) {
            auto copy = [&](uint64_t id) {
                const auto& e = tree.embedding(id);
                p.node_emb[id] = std::vector<double>(e.begin(), e.end());
            };
            copy(level.positive);
            for (uint64_t n : level.negatives) copy(n);
        }
        p.weight.assign(enc.weight().values().begin(), enc.weight().values().end());
        p.bias.assign(enc.bias().begin(), enc.bias().end());
        return p;
    }
};

// Independent loss evaluation: the per-level term is written as
// log(1 + sum_j exp(s_j - s_pos)) rather than the max-subtracted softmax,
// so the two implementations share no numerical path.
inline double shadow_instance_loss(const jtr::TrainingInstance& inst, const ShadowParams& p,
                                   const std::vector<double>& features) {
    size_t in_dim = features.size();
    size_t out_dim = p.bias.size();
    std::vector<double> phi(out_dim);
    for (size_t i = 0; i < out_dim; i++) {
        double acc = p.bias[i];
        for (size_t j = 0; j < in_dim; j++) acc += p.weight[i * in_dim + j] * features[j];
        phi[i] = acc;
    }
    auto score = [&](uint64_t id) {
        const std::vector<double>& e = p.node_emb.at(id);
        double acc = 0.0;
        for (size_t i = 0; i < out_dim; i++) acc += phi[i] * e[i];
        return acc;
    };
    double total = 0.0;
    for (const auto& level : inst.levels) {
        double s_pos = score(level.positive);
        double sum = 0.0;
        for (uint64_t n : level.negatives) sum += std::exp(score(n) - s_pos);
        total += std::log1p(sum);
    }
    return total / double(inst.levels.size());
}

// central finite difference through the shadow evaluator
template <typename Mutate>
double central_diff(const jtr::TrainingInstance& inst, ShadowParams p, const std::vector<double>& features,
                    Mutate&& mutate, double h) {
    mutate(p, +h);
    double up = shadow_instance_loss(inst, p, features);
    mutate(p, -2.0 * h);
    double down = shadow_instance_loss(inst, p, features);
    return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// dense copy of a sparse binary matrix
inline std::vector<std::vector<int>> densify(const jtr::SparseBinaryMatrix& m) {
    std::vector<std::vector<int>> d(m.rows(), std::vector<int>(m.cols(), 0));
    for (size_t r = 0; r < m.rows(); r++) {
        for (uint32_t c : m.row(r)) d[r][c] = 1;
    }
    return d;
}

// trace of A^T B computed the long way, via an explicit dense transpose
// and f64 matrix product
inline double dense_transpose_product_trace(const jtr::SparseBinaryMatrix& a, const jtr::SparseBinaryMatrix& b) {
    auto da = densify(a);
    auto db = densify(b);
    size_t rows = da.size();
    size_t cols = da.empty() ? 0 : da[0].size();
    std::vector<std::vector<double>> at(cols, std::vector<double>(rows, 0.0));
    for (size_t r = 0; r < rows; r++) {
        for (size_t c = 0; c < cols; c++) at[c][r] = double(da[r][c]);
    }
    double trace = 0.0;
    for (size_t c = 0; c < cols; c++) {
        for (size_t r = 0; r < rows; r++) trace += at[c][r] * double(db[r][c]);
    }
    return trace;
}

// predicted feedback as a dense boolean product: routes (Q x K) times the
// transpose of the assignment (N x K)
inline std::vector<std::vector<int>> dense_predicted(const jtr::SparseBinaryMatrix& routes,
                                                     const jtr::SparseBinaryMatrix& assignment) {
    auto r = densify(routes);
    auto a = densify(assignment);
    std::vector<std::vector<int>> out(routes.rows(), std::vector<int>(assignment.rows(), 0));
    for (size_t q = 0; q < routes.rows(); q++) {
        for (size_t d = 0; d < assignment.rows(); d++) {
            int hit = 0;
            for (size_t k = 0; k < routes.cols(); k++) hit |= r[q][k] & a[d][k];
            out[q][d] = hit;
        }
    }
    return out;
}

// best achievable count sum for one document when it may sit in at most
// max_leaves leaves, by enumerating every subset of the leaf columns
inline uint64_t best_leaf_subset_sum(const std::vector<uint32_t>& counts_by_col, uint32_t max_leaves) {
    size_t k = counts_by_col.size();
    uint64_t best = 0;
    for (uint64_t mask = 0; mask < (uint64_t(1) << k); mask++) {
        if (size_t(__builtin_popcountll(mask)) > max_leaves) continue;
        uint64_t sum = 0;
        for (size_t i = 0; i < k; i++) {
            if (mask & (uint64_t(1) << i)) sum += counts_by_col[i];
        }
        best = std::max(best, sum);
    }
    return best;
}

} // namespace jtr_oracle
