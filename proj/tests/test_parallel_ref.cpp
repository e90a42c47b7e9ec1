#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lotus/detectors.hpp"
#include "lotus/ot.hpp"
#include "lotus/rng.hpp"
#include "lotus/serial_ref.hpp"

#include <vector>

using namespace lotus;

namespace {

DiscreteMeasure random_measure(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    DiscreteMeasure m;
    m.points.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m.points(i, j) = rng.normal();
    m.weights.resize(n);
    for (int i = 0; i < n; ++i) m.weights(i) = 0.2 + rng.uniform();
    m.weights /= m.weights.sum();
    return m;
}

RowMatrix random_matrix(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("pairwise squared distances match the serial twin bitwise") {
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const DiscreteMeasure m = random_measure(37, 5, seed);
        CHECK(bitwise_equal(pairwise_sq_dist(m).values, ref::pairwise_sq_dist(m).values));
    }
}

TEST_CASE("quadratic transport energy matches the serial twin bitwise") {
    Rng rng(7);
    const DiscreteMeasure ma = random_measure(14, 3, 10);
    const DiscreteMeasure mb = random_measure(11, 4, 11);
    const PairwiseMetricMatrix a = pairwise_sq_dist(ma);
    const PairwiseMetricMatrix b = pairwise_sq_dist(mb);
    Coupling plan;
    plan.plan.resize(14, 11);
    for (int i = 0; i < 14; ++i)
        for (int j = 0; j < 11; ++j) plan.plan(i, j) = rng.uniform();
    plan.plan /= plan.plan.sum();
    CHECK(gw_energy(plan, a, b) == ref::gw_energy(plan, a, b));
}

TEST_CASE("sinkhorn matches the serial twin bitwise") {
    Rng rng(21);
    const int n = 23, m = 19;
    Matrix cost(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) cost(i, j) = rng.uniform();
    Vector a(n), b(m);
    for (int i = 0; i < n; ++i) a(i) = 0.3 + rng.uniform();
    for (int j = 0; j < m; ++j) b(j) = 0.3 + rng.uniform();
    a /= a.sum();
    b /= b.sum();

    const SinkhornResult par = sinkhorn(cost, a, b, 0.05, 2000, 1e-9);
    const SinkhornResult ser = ref::sinkhorn(cost, a, b, 0.05, 2000, 1e-9);
    CHECK(par.converged == ser.converged);
    CHECK(par.iterations == ser.iterations);
    CHECK(par.cost == ser.cost);
    CHECK(bitwise_equal(par.coupling.plan, ser.coupling.plan));
}

TEST_CASE("detector scores match their serial twins bitwise") {
    const RowMatrix x = random_matrix(60, 4, 31);
    CHECK(bitwise_equal(knn_score(x, 5, "largest"), ref::knn_score(x, 5, "largest")));
    CHECK(bitwise_equal(knn_score(x, 7, "mean"), ref::knn_score(x, 7, "mean")));
    CHECK(bitwise_equal(knn_score(x, 4, "median"), ref::knn_score(x, 4, "median")));
    CHECK(bitwise_equal(hbos_score(x, 10), ref::hbos_score(x, 10)));
    CHECK(bitwise_equal(iforest_score(x, 40, 32, 5), ref::iforest_score(x, 40, 32, 5)));
    CHECK(bitwise_equal(loda_score(x, 25, 10, 5), ref::loda_score(x, 25, 10, 5)));
    CHECK(bitwise_equal(abod_score(x, 6), ref::abod_score(x, 6)));
}

TEST_CASE("seeded detectors stay reproducible through both paths") {
    const RowMatrix x = random_matrix(80, 3, 41);
    for (const std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        CHECK(bitwise_equal(iforest_score(x, 30, 64, seed),
                            ref::iforest_score(x, 30, 64, seed)));
        CHECK(bitwise_equal(loda_score(x, 15, 8, seed), ref::loda_score(x, 15, 8, seed)));
    }
}
