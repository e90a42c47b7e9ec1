#include "lotus/transform.hpp"

#include "lotus/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lotus {

namespace {

constexpr double kEigFloor = 1e-10;

// W <- (W W')^(-1/2) W, the symmetric decorrelation step.
Matrix sym_orth(const Matrix& w) {
    const Matrix m = w * w.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const Vector inv_sqrt = es.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

RowMatrix standardize(const RowMatrix& x) {
    if (x.rows() < 1) throw std::invalid_argument("standardize: empty input");
    if (!x.allFinite()) throw std::invalid_argument("standardize: input must be finite");
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    RowMatrix out(n, d);
    for (int f = 0; f < d; ++f) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += x(i, f);
        mean /= n;
        double var = 0.0, meansq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double c = x(i, f) - mean;
            var += c * c;
            meansq += x(i, f) * x(i, f);
        }
        var /= n;
        meansq /= n;
        if (var <= 1e-15 * std::max(1.0, meansq)) {
            out.col(f).setZero();
        } else {
            const double inv_sd = 1.0 / std::sqrt(var);
            for (int i = 0; i < n; ++i) out(i, f) = (x(i, f) - mean) * inv_sd;
        }
    }
    return out;
}

RowMatrix subsample(const RowMatrix& x, int max_rows, std::uint64_t seed) {
    if (max_rows < 1) throw std::invalid_argument("subsample: max_rows must be positive");
    const int n = static_cast<int>(x.rows());
    if (n <= max_rows) return x;
    Rng rng(mix_seed(seed, 0x5ab5a317ULL));
    const std::vector<int> keep = rng.sample_without_replacement(n, max_rows);
    RowMatrix out(max_rows, x.cols());
    for (int i = 0; i < max_rows; ++i) out.row(i) = x.row(keep[i]);
    return out;
}

IcaResult fast_ica(const RowMatrix& x, const TransformConfig& cfg) {
    cfg.validate();
    if (x.rows() < 2) throw std::invalid_argument("ica: needs at least 2 rows");
    const int n = static_cast<int>(x.rows());
    const RowMatrix xs = standardize(x);

    const Matrix cov = (xs.transpose() * xs) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const Vector evals = es.eigenvalues();  // ascending
    const int d = static_cast<int>(cov.rows());
    std::vector<int> keep;
    for (int j = d - 1; j >= 0; --j)
        if (evals(j) > kEigFloor) keep.push_back(j);
    const int k = static_cast<int>(keep.size());
    if (k == 0) throw std::invalid_argument("ica: input has no varying directions");

    Matrix white(d, k);
    for (int c = 0; c < k; ++c)
        white.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(evals(keep[c]));
    const RowMatrix xw = xs * white;  // n x k, identity covariance

    // fixed seed: the rotation must not depend on caller configuration
    Rng rng(0x1ca5eedULL);
    Matrix w(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) w(i, j) = rng.normal();
    w = sym_orth(w);

    bool converged = false;
    for (int it = 0; it < cfg.ica_max_iter; ++it) {
        const Matrix y = xw * w.transpose();       // n x k projections
        const Matrix g = y.array().tanh().matrix();
        const Matrix gp = (1.0 - g.array().square()).matrix();
        const Vector gp_mean = gp.colwise().mean().transpose();
        Matrix w_new = (g.transpose() * xw) / static_cast<double>(n);
        w_new -= gp_mean.asDiagonal() * w;
        w_new = sym_orth(w_new);
        double delta = 0.0;
        const Matrix overlap = w_new * w.transpose();
        for (int i = 0; i < k; ++i)
            delta = std::max(delta, std::abs(1.0 - std::abs(overlap(i, i))));
        w = w_new;
        if (delta < cfg.ica_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) return {xw, false};
    return {xw * w.transpose(), true};
}

DiscreteMeasure phi(const Dataset& dataset, const TransformConfig& cfg) {
    cfg.validate();
    if (dataset.features.rows() < 2)
        throw std::invalid_argument("phi: dataset needs at least 2 rows");
    if (dataset.features.cols() < 1)
        throw std::invalid_argument("phi: dataset needs at least 1 feature");
    if (!dataset.features.allFinite())
        throw std::invalid_argument("phi: features must be finite");
    const RowMatrix sub = subsample(dataset.features, cfg.max_rows, cfg.seed);
    const IcaResult ica = fast_ica(sub, cfg);
    const int n = static_cast<int>(ica.transformed.rows());
    return DiscreteMeasure{ica.transformed, Vector::Constant(n, 1.0 / n)};
}

}  // namespace lotus
