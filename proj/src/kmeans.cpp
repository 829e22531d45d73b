#include "jtr/kmeans.hpp"

#include <algorithm>
#include <cstring>

#include "jtr/error.hpp"

namespace jtr {

namespace {

double sq_dist(const float* a, const float* b, size_t dim) {
    double acc = 0.0;
    for (size_t i = 0; i < dim; i++) {
        double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

Matrix seed_centroids(const Matrix& points, uint32_t k, Rng& rng) {
    size_t n = points.rows(), dim = points.cols();
    if (n == 0 || k == 0 || k > n) raise(ErrorCode::KTooLarge, "seeding needs 1 <= k <= point count");
    Matrix centroids(k, dim);
    std::vector<char> chosen(n, 0);

    auto take = [&](uint32_t slot, size_t point) {
        std::memcpy(centroids.row(slot), points.row(point), dim * sizeof(float));
        chosen[point] = 1;
    };

    take(0, size_t(rng.next_below(n)));

    std::vector<double> best(n);
    for (size_t i = 0; i < n; i++) best[i] = sq_dist(points.row(i), centroids.row(0), dim);

    for (uint32_t c = 1; c < k; c++) {
        double total = 0.0;
        for (double d : best) total += d;
        size_t pick = n;
        if (total > 0.0) {
            double r = rng.next_double() * total;
            double run = 0.0;
            for (size_t i = 0; i < n; i++) {
                run += best[i];
                if (r < run) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = n - 1;
        } else {
            // all remaining mass is zero (duplicate-heavy input); fall back
            // to a uniform pick among the unchosen points
            size_t free_count = 0;
            for (char f : chosen) free_count += (f == 0);
            size_t skip = size_t(rng.next_below(free_count));
            for (size_t i = 0; i < n; i++) {
                if (!chosen[i] && skip-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        take(c, pick);
        for (size_t i = 0; i < n; i++) best[i] = std::min(best[i], sq_dist(points.row(i), centroids.row(c), dim));
    }
    return centroids;
}

} // namespace

KMeansResult kmeans(const Matrix& points, uint32_t k, uint32_t max_iters, Rng& rng) {
    size_t n = points.rows(), dim = points.cols();
    if (k == 0) raise(ErrorCode::ConfigError, "kmeans needs k >= 1");
    if (max_iters == 0) raise(ErrorCode::ConfigError, "kmeans needs max_iters >= 1");
    if (k > n) {
        raise(ErrorCode::KTooLarge, "kmeans asked for " + std::to_string(k) + " clusters from " +
                                        std::to_string(n) + " points");
    }

    KMeansResult res;
    res.centroids = seed_centroids(points, k, rng);
    res.assignment.assign(n, 0);

    std::vector<uint32_t> prev_assign;
    std::vector<size_t> counts(k);
    double prev_inertia = 0.0;
    bool have_prev_inertia = false;

    for (uint32_t iter = 1; iter <= max_iters; iter++) {
        res.iterations = iter;

        // assignment step, ties to the lower centroid index
        double inertia = 0.0;
        for (size_t i = 0; i < n; i++) {
            uint32_t best_c = 0;
            double best_d = sq_dist(points.row(i), res.centroids.row(0), dim);
            for (uint32_t c = 1; c < k; c++) {
                double d = sq_dist(points.row(i), res.centroids.row(c), dim);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            res.assignment[i] = best_c;
            inertia += best_d;
        }

        // refill any drained cluster with the farthest point whose own
        // cluster keeps at least two members
        std::fill(counts.begin(), counts.end(), 0);
        for (uint32_t a : res.assignment) counts[a]++;
        for (uint32_t c = 0; c < k; c++) {
            while (counts[c] == 0) {
                size_t donor = n;
                double far_d = -1.0;
                for (size_t i = 0; i < n; i++) {
                    if (counts[res.assignment[i]] < 2) continue;
                    double d = sq_dist(points.row(i), res.centroids.row(res.assignment[i]), dim);
                    if (d > far_d) {
                        far_d = d;
                        donor = i;
                    }
                }
                if (donor == n) raise(ErrorCode::StructureInvalid, "kmeans cannot refill an empty cluster");
                inertia -= far_d;
                counts[res.assignment[donor]]--;
                res.assignment[donor] = c;
                counts[c]++;
                std::memcpy(res.centroids.row(c), points.row(donor), dim * sizeof(float));
            }
        }

        if (have_prev_inertia && inertia > prev_inertia * (1.0 + 1e-6) + 1e-9) {
            raise(ErrorCode::StructureInvalid, "kmeans inertia increased between iterations");
        }
        prev_inertia = inertia;
        have_prev_inertia = true;
        res.inertia = inertia;

        if (!prev_assign.empty() && prev_assign == res.assignment) break;
        prev_assign = res.assignment;

        // update step: centroids become the member means
        std::vector<double> sums(size_t(k) * dim, 0.0);
        for (size_t i = 0; i < n; i++) {
            double* s = sums.data() + size_t(res.assignment[i]) * dim;
            const float* p = points.row(i);
            for (size_t j = 0; j < dim; j++) s[j] += p[j];
        }
        for (uint32_t c = 0; c < k; c++) {
            float* row = res.centroids.row(c);
            const double* s = sums.data() + size_t(c) * dim;
            for (size_t j = 0; j < dim; j++) row[j] = float(s[j] / double(counts[c]));
        }
    }

    // report inertia against the final centroids
    double inertia = 0.0;
    for (size_t i = 0; i < n; i++) inertia += sq_dist(points.row(i), res.centroids.row(res.assignment[i]), dim);
    res.inertia = inertia;
    return res;
}

} // namespace jtr
