#include "lotus/serial_ref.hpp"

#include "lotus/detail/detector_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lotus::ref {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double lse_row(const Matrix& k, int i, const Vector& v) {
    const int m = static_cast<int>(k.cols());
    double mx = kNegInf;
    for (int j = 0; j < m; ++j) mx = std::max(mx, k(i, j) + v(j));
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::exp(k(i, j) + v(j) - mx);
    return mx + std::log(s);
}

double lse_col(const Matrix& k, int j, const Vector& u) {
    const int n = static_cast<int>(k.rows());
    double mx = kNegInf;
    for (int i = 0; i < n; ++i) mx = std::max(mx, k(i, j) + u(i));
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(k(i, j) + u(i) - mx);
    return mx + std::log(s);
}

double weighted_square_quad(const Matrix& m, const Vector& w) {
    const int n = static_cast<int>(m.rows());
    std::vector<double> part(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += m(i, j) * m(i, j) * w(j);
        part[i] = s * w(i);
    }
    double out = 0.0;
    for (int i = 0; i < n; ++i) out += part[i];
    return out;
}

double dense_cross_term(const Matrix& a, const Matrix& p, const Matrix& b) {
    const int n = static_cast<int>(p.rows());
    const int m = static_cast<int>(p.cols());
    Matrix u(n, m), v(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a(i, k) * p(k, j);
            u(i, j) = s;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += p(i, k) * b(k, j);
            v(i, j) = s;
        }
    std::vector<double> part(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += u(i, j) * v(i, j);
        part[i] = s;
    }
    double out = 0.0;
    for (int i = 0; i < n; ++i) out += part[i];
    return out;
}

}  // namespace

PairwiseMetricMatrix pairwise_sq_dist(const DiscreteMeasure& measure) {
    measure.validate();
    const int n = measure.size();
    const int d = measure.dim();
    const RowMatrix& x = measure.points;
    Matrix out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) {
                out(i, j) = 0.0;
                continue;
            }
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = x(i, k) - x(j, k);
                s += diff * diff;
            }
            out(i, j) = s;
        }
    }
    return {out};
}

double gw_energy(const Coupling& plan, const PairwiseMetricMatrix& a,
                 const PairwiseMetricMatrix& b) {
    const Matrix& p = plan.plan;
    const int n = static_cast<int>(p.rows());
    const int m = static_cast<int>(p.cols());
    if (a.values.rows() != n || a.values.cols() != n || b.values.rows() != m ||
        b.values.cols() != m)
        throw std::invalid_argument("gw_energy: plan and metric matrix sizes do not match");
    if (!p.allFinite() || p.minCoeff() < 0.0)
        throw std::invalid_argument("gw_energy: plan must be finite and nonnegative");
    const Vector ra = p.rowwise().sum();
    const Vector cb = p.colwise().sum().transpose();
    const double term_a = weighted_square_quad(a.values, ra);
    const double term_b = weighted_square_quad(b.values, cb);
    const double cross = dense_cross_term(a.values, p, b.values);
    return std::max(0.0, term_a + term_b - 2.0 * cross);
}

SinkhornResult sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double epsilon,
                        int max_iter, double tol) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    if (a.size() != n || b.size() != m)
        throw std::invalid_argument("sinkhorn: weight sizes do not match cost matrix");
    if (!cost.allFinite()) throw std::invalid_argument("sinkhorn: cost matrix must be finite");
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
    if (max_iter < 1) throw std::invalid_argument("sinkhorn: max_iter must be at least 1");
    if (!(tol > 0.0)) throw std::invalid_argument("sinkhorn: tol must be positive");

    const Matrix k = cost / -epsilon;
    Vector loga(n), logb(m);
    for (int i = 0; i < n; ++i) loga(i) = safe_log(a(i));
    for (int j = 0; j < m; ++j) logb(j) = safe_log(b(j));
    Vector u = Vector::Zero(n), v = Vector::Zero(m);

    SinkhornResult res;
    auto plan_entry = [&](int i, int j) {
        const double e = k(i, j) + u(i) + v(j);
        return e == kNegInf ? 0.0 : std::exp(e);
    };
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        for (int i = 0; i < n; ++i) u(i) = loga(i) - lse_row(k, i, v);
        for (int j = 0; j < m; ++j) v(j) = logb(j) - lse_col(k, j, u);
        double err = 0.0;
        std::vector<double> rsum(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += plan_entry(i, j);
            rsum[i] = s;
        }
        for (int i = 0; i < n; ++i) err = std::max(err, std::abs(rsum[i] - a(i)));
        if (err < tol) {
            res.converged = true;
            break;
        }
    }

    res.coupling.plan.resize(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) res.coupling.plan(i, j) = plan_entry(i, j);
    std::vector<double> part(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += cost(i, j) * res.coupling.plan(i, j);
        part[i] = s;
    }
    res.cost = 0.0;
    for (int i = 0; i < n; ++i) res.cost += part[i];
    return res;
}

Vector knn_score(const RowMatrix& x, int k, const std::string& method) {
    const detail::KnnMethod m = detail::parse_knn_method(method);
    detail::check_knn_args(x, k);
    const int n = static_cast<int>(x.rows());
    Vector out(n);
    for (int i = 0; i < n; ++i) out(i) = detail::knn_point_score(x, i, k, m);
    return out;
}

Vector hbos_score(const RowMatrix& x, int n_bins) {
    detail::check_hist_args(x, n_bins);
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Matrix contrib(n, d);
    for (int f = 0; f < d; ++f) detail::hbos_feature_contrib(x, f, n_bins, contrib);
    Vector out = Vector::Zero(n);
    for (int f = 0; f < d; ++f) out += contrib.col(f);
    return out;
}

Vector iforest_score(const RowMatrix& x, int n_estimators, int max_samples, std::uint64_t seed) {
    detail::check_iforest_args(x, n_estimators, max_samples);
    const int n = static_cast<int>(x.rows());
    const int sample_size = std::min<int>(max_samples, n);
    Matrix depths(n, n_estimators);
    for (int t = 0; t < n_estimators; ++t) detail::iforest_tree_depths(x, t, sample_size, seed, depths);
    Vector avg = Vector::Zero(n);
    for (int t = 0; t < n_estimators; ++t) avg += depths.col(t);
    avg /= static_cast<double>(n_estimators);
    const double norm = detail::average_path_length(sample_size);
    Vector out(n);
    for (int i = 0; i < n; ++i) out(i) = std::exp2(-avg(i) / norm);
    return out;
}

Vector loda_score(const RowMatrix& x, int n_projections, int n_bins, std::uint64_t seed) {
    detail::check_loda_args(x, n_projections, n_bins);
    const int n = static_cast<int>(x.rows());
    Matrix contrib(n, n_projections);
    for (int p = 0; p < n_projections; ++p)
        detail::loda_projection_contrib(x, p, n_bins, seed, contrib);
    Vector out = Vector::Zero(n);
    for (int p = 0; p < n_projections; ++p) out += contrib.col(p);
    out /= static_cast<double>(n_projections);
    return out;
}

Vector abod_score(const RowMatrix& x, int k) {
    detail::check_knn_args(x, k);
    const int n = static_cast<int>(x.rows());
    Vector out(n);
    for (int i = 0; i < n; ++i) out(i) = detail::abod_point_score(x, i, k);
    return out;
}

}  // namespace lotus::ref
