#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lotus/rng.hpp"
#include "lotus/transform.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace lotus;

namespace {

RowMatrix random_matrix(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

double column_mean(const RowMatrix& x, int c) { return x.col(c).mean(); }

double column_var(const RowMatrix& x, int c) {
    const double m = column_mean(x, c);
    return (x.col(c).array() - m).square().mean();
}

double abs_correlation(const Vector& u, const Vector& v) {
    const Vector uc = u.array() - u.mean();
    const Vector vc = v.array() - v.mean();
    const double denom = std::sqrt(uc.squaredNorm() * vc.squaredNorm());
    if (denom == 0.0) return 0.0;
    return std::abs(uc.dot(vc)) / denom;
}

std::vector<std::vector<double>> sorted_rows(const RowMatrix& x) {
    std::vector<std::vector<double>> rows(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
        rows[i].resize(x.cols());
        for (int j = 0; j < x.cols(); ++j) rows[i][j] = x(i, j);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace

TEST_CASE("standardize maps a constant column to zeros") {
    RowMatrix x(3, 1);
    x << 1.0, 1.0, 1.0;
    const RowMatrix out = standardize(x);
    for (int i = 0; i < 3; ++i) CHECK(out(i, 0) == 0.0);
}

TEST_CASE("standardize uses population variance") {
    RowMatrix x(2, 1);
    x << 0.0, 2.0;
    const RowMatrix out = standardize(x);
    CHECK(out(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize produces zero mean and unit variance per column") {
    const RowMatrix x = random_matrix(20, 4, 11);
    const RowMatrix out = standardize(x);
    for (int c = 0; c < 4; ++c) {
        CHECK(std::abs(column_mean(out, c)) < 1e-10);
        CHECK(std::abs(column_var(out, c) - 1.0) < 1e-10);
    }
}

TEST_CASE("standardize rejects empty and non-finite input") {
    CHECK_THROWS(standardize(RowMatrix(0, 3)));
    RowMatrix bad(2, 1);
    bad << 1.0, std::nan("");
    CHECK_THROWS(standardize(bad));
}

TEST_CASE("subsample is the identity when the input fits") {
    const RowMatrix x = random_matrix(10, 3, 7);
    const RowMatrix out = subsample(x, 20, 123);
    REQUIRE(out.rows() == 10);
    CHECK((out.array() == x.array()).all());
}

TEST_CASE("subsample is deterministic per seed and picks input rows") {
    const RowMatrix x = random_matrix(100, 3, 42);
    const RowMatrix s1 = subsample(x, 50, 9);
    const RowMatrix s2 = subsample(x, 50, 9);
    REQUIRE(s1.rows() == 50);
    CHECK((s1.array() == s2.array()).all());

    std::set<std::vector<double>> input_rows;
    for (int i = 0; i < x.rows(); ++i) {
        std::vector<double> row(3);
        for (int j = 0; j < 3; ++j) row[j] = x(i, j);
        input_rows.insert(row);
    }
    for (int i = 0; i < s1.rows(); ++i) {
        std::vector<double> row(3);
        for (int j = 0; j < 3; ++j) row[j] = s1(i, j);
        CHECK(input_rows.count(row) == 1);
    }

    const RowMatrix s3 = subsample(x, 50, 10);
    CHECK_FALSE((s1.array() == s3.array()).all());
}

TEST_CASE("fast_ica output has identity covariance on retained components") {
    const RowMatrix x = random_matrix(300, 5, 3);
    const IcaResult res = fast_ica(x, TransformConfig{});
    const int n = static_cast<int>(res.transformed.rows());
    const Matrix cov =
        (res.transformed.transpose() * res.transformed) / static_cast<double>(n);
    const Matrix eye = Matrix::Identity(cov.rows(), cov.cols());
    CHECK((cov - eye).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fast_ica drops directions with no variance") {
    RowMatrix x = random_matrix(100, 3, 5);
    RowMatrix aug(100, 4);
    aug.leftCols(3) = x;
    aug.col(3) = x.col(0) + 2.0 * x.col(1);  // linearly dependent column
    const IcaResult res = fast_ica(aug, TransformConfig{});
    CHECK(res.transformed.cols() == 3);
}

TEST_CASE("fast_ica unmixes two independent uniform sources") {
    Rng rng(17);
    const int n = 2000;
    Matrix sources(n, 2);
    for (int i = 0; i < n; ++i) {
        sources(i, 0) = rng.uniform(-1.0, 1.0);
        sources(i, 1) = rng.uniform(-1.0, 1.0);
    }
    Matrix mix(2, 2);
    mix << 0.8, 0.6, -0.3, 1.1;
    RowMatrix x = (sources * mix.transpose()).eval();

    TransformConfig cfg;
    cfg.ica_max_iter = 400;
    const IcaResult res = fast_ica(x, cfg);
    REQUIRE(res.converged);
    REQUIRE(res.transformed.cols() == 2);
    for (int c = 0; c < 2; ++c) {
        const double best = std::max(abs_correlation(res.transformed.col(c), sources.col(0)),
                                     abs_correlation(res.transformed.col(c), sources.col(1)));
        CHECK(best > 0.95);
    }
}

TEST_CASE("phi yields uniform weights that sum to one") {
    Dataset ds;
    ds.features = random_matrix(80, 4, 21);
    const DiscreteMeasure m = phi(ds, TransformConfig{});
    REQUIRE(m.size() == 80);
    CHECK(m.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < m.size(); ++i)
        CHECK(m.weights(i) == doctest::Approx(1.0 / 80).epsilon(1e-12));
    m.validate();
}

TEST_CASE("phi caps the point count at max_rows") {
    Dataset ds;
    ds.features = random_matrix(5000, 3, 33);
    TransformConfig cfg;
    cfg.max_rows = 2000;
    const DiscreteMeasure m = phi(ds, cfg);
    CHECK(m.size() == 2000);
}

TEST_CASE("phi is bitwise deterministic") {
    Dataset ds;
    ds.features = random_matrix(150, 4, 55);
    TransformConfig cfg;
    cfg.seed = 99;
    const DiscreteMeasure m1 = phi(ds, cfg);
    const DiscreteMeasure m2 = phi(ds, cfg);
    CHECK((m1.points.array() == m2.points.array()).all());
    CHECK((m1.weights.array() == m2.weights.array()).all());
}

TEST_CASE("phi never reads labels") {
    Dataset ds;
    ds.features = random_matrix(120, 3, 77);
    ds.labels = std::vector<int>(120, 0);
    const DiscreteMeasure m1 = phi(ds, TransformConfig{});
    (*ds.labels)[5] = 1;
    (*ds.labels)[17] = 1;
    const DiscreteMeasure m2 = phi(ds, TransformConfig{});
    CHECK((m1.points.array() == m2.points.array()).all());
    CHECK((m1.weights.array() == m2.weights.array()).all());
}

TEST_CASE("phi of a row-permuted dataset yields the same point multiset") {
    Rng rng(101);
    const int n = 60, d = 3;
    Dataset ds;
    ds.features.resize(n, d);
    // non-Gaussian features so the rotation converges to a stable fixed point
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ds.features(i, j) = rng.uniform(-1.0, 1.0);

    Dataset perm = ds;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    for (int i = 0; i < n; ++i) perm.features.row(i) = ds.features.row(order[i]);

    const DiscreteMeasure m1 = phi(ds, TransformConfig{});
    const DiscreteMeasure m2 = phi(perm, TransformConfig{});
    REQUIRE(m1.size() == m2.size());
    REQUIRE(m1.dim() == m2.dim());
    const auto r1 = sorted_rows(m1.points);
    const auto r2 = sorted_rows(m2.points);
    for (int i = 0; i < m1.size(); ++i)
        for (int j = 0; j < m1.dim(); ++j)
            CHECK(r1[i][j] == doctest::Approx(r2[i][j]).epsilon(1e-6));
}

TEST_CASE("phi rejects degenerate datasets") {
    Dataset one_row;
    one_row.features = random_matrix(1, 3, 1);
    CHECK_THROWS(phi(one_row, TransformConfig{}));

    Dataset no_cols;
    no_cols.features = RowMatrix(5, 0);
    CHECK_THROWS(phi(no_cols, TransformConfig{}));

    TransformConfig bad;
    bad.max_rows = 1;
    Dataset ok;
    ok.features = random_matrix(10, 2, 2);
    CHECK_THROWS(phi(ok, bad));
}
