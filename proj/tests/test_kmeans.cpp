#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "jtr/error.hpp"
#include "jtr/kmeans.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace jtr;

namespace {

Matrix blob_points(size_t per_blob, size_t blobs, size_t dim, double spread, double noise, Rng& rng) {
    Matrix centers(blobs, dim);
    for (size_t b = 0; b < blobs; b++) {
        for (size_t j = 0; j < dim; j++) centers.at(b, j) = float(rng.next_gaussian() * spread);
    }
    Matrix pts(per_blob * blobs, dim);
    for (size_t b = 0; b < blobs; b++) {
        for (size_t i = 0; i < per_blob; i++) {
            for (size_t j = 0; j < dim; j++) {
                pts.at(b * per_blob + i, j) = centers.at(b, j) + float(rng.next_gaussian() * noise);
            }
        }
    }
    return pts;
}

} // namespace

TEST_CASE("kmeans matches the exhaustive optimum on tiny separated sets") {
    // blobs far apart so the global optimum is unambiguous
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        Rng rng(seed);
        Matrix pts = blob_points(4, 2, 2, 20.0, 0.5, rng);
        double oracle = jtr_oracle::best_partition_sse(pts, 2);

        Rng krng(seed + 100);
        KMeansResult res = kmeans(pts, 2, 50, krng);
        double got = jtr_oracle::partition_sse(pts, res.assignment, 2);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
    }

    Rng rng(77);
    Matrix pts = blob_points(3, 3, 2, 25.0, 0.4, rng);
    double oracle = jtr_oracle::best_partition_sse(pts, 3);
    Rng krng(7);
    KMeansResult res = kmeans(pts, 3, 50, krng);
    CHECK(jtr_oracle::partition_sse(pts, res.assignment, 3) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("kmeans postconditions hold on random data") {
    Rng rng(5);
    Matrix pts = jtr_test::random_matrix(60, 6, rng);
    Rng krng(9);
    KMeansResult res = kmeans(pts, 5, 100, krng);

    REQUIRE(res.assignment.size() == 60);
    REQUIRE(res.centroids.rows() == 5);

    // every cluster non-empty
    std::vector<size_t> counts(5, 0);
    for (uint32_t a : res.assignment) counts[a]++;
    for (size_t c : counts) CHECK(c > 0);

    // centroids are the member means, recomputed in f64
    for (uint32_t c = 0; c < 5; c++) {
        std::vector<double> mean(6, 0.0);
        size_t cnt = 0;
        for (size_t i = 0; i < 60; i++) {
            if (res.assignment[i] != c) continue;
            cnt++;
            for (size_t j = 0; j < 6; j++) mean[j] += pts.at(i, j);
        }
        for (size_t j = 0; j < 6; j++) {
            CHECK(double(res.centroids.at(c, j)) == doctest::Approx(mean[j] / double(cnt)).epsilon(1e-5));
        }
    }

    // every point sits in its nearest cluster
    auto d2 = [&](size_t i, uint32_t c) {
        double acc = 0.0;
        for (size_t j = 0; j < 6; j++) {
            double d = double(pts.at(i, j)) - double(res.centroids.at(c, j));
            acc += d * d;
        }
        return acc;
    };
    for (size_t i = 0; i < 60; i++) {
        double assigned = d2(i, res.assignment[i]);
        for (uint32_t c = 0; c < 5; c++) CHECK(assigned <= d2(i, c) + 1e-5);
    }

    // inertia matches a direct recomputation
    double inertia = 0.0;
    for (size_t i = 0; i < 60; i++) inertia += d2(i, res.assignment[i]);
    CHECK(res.inertia == doctest::Approx(inertia).epsilon(1e-9));
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
    Rng rng(21);
    Matrix pts = jtr_test::random_matrix(40, 4, rng);
    Rng r1(1234), r2(1234);
    KMeansResult a = kmeans(pts, 4, 50, r1);
    KMeansResult b = kmeans(pts, 4, 50, r2);
    CHECK(a.assignment == b.assignment);
    CHECK(a.centroids.values() == b.centroids.values());
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("kmeans keeps clusters non-empty on duplicate-heavy input") {
    Matrix pts(6, 2, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    Rng rng(3);
    KMeansResult res = kmeans(pts, 3, 20, rng);
    std::set<uint32_t> used(res.assignment.begin(), res.assignment.end());
    CHECK(used.size() == 3);
}

TEST_CASE("kmeans recovers well separated blobs") {
    Rng rng(13);
    Matrix pts = blob_points(20, 4, 8, 10.0, 0.3, rng);
    Rng krng(1);
    KMeansResult res = kmeans(pts, 4, 100, krng);

    // all points of one blob land in one cluster, and blobs do not share
    for (size_t b = 0; b < 4; b++) {
        uint32_t label = res.assignment[b * 20];
        for (size_t i = 1; i < 20; i++) CHECK(res.assignment[b * 20 + i] == label);
    }
    std::set<uint32_t> labels;
    for (size_t b = 0; b < 4; b++) labels.insert(res.assignment[b * 20]);
    CHECK(labels.size() == 4);
}

TEST_CASE("kmeans rejects impossible requests") {
    Matrix pts(2, 2, {0, 0, 1, 1});
    Rng rng(1);
    CHECK_THROWS_AS(kmeans(pts, 3, 10, rng), Error);
    try {
        kmeans(pts, 3, 10, rng);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KTooLarge);
    }
    CHECK_THROWS_AS(kmeans(pts, 0, 10, rng), Error);
}
