#include "lotus/ot.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lotus {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Returned factors are polished to this marginal accuracy, well under the 1e-6
// they must satisfy; projections inside the descent loop stop at the looser
// tolerance since their residual only steers the next step.
constexpr double kProjTol = 1e-9;
constexpr double kLoopTol = 1e-6;
constexpr double kGFloor = 1e-12;

// Eigen's own threading is disabled; all parallelism is explicit so results do
// not depend on thread count.
const bool kEigenSingleThread = [] {
    Eigen::setNbThreads(1);
    return true;
}();

void check_weights(const Vector& w, const char* who) {
    if (!w.allFinite() || w.minCoeff() < 0.0)
        throw std::invalid_argument(std::string(who) + ": weights must be finite and nonnegative");
    if (std::abs(w.sum() - 1.0) > 1e-6)
        throw std::invalid_argument(std::string(who) + ": weights must sum to 1");
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// log(sum exp(vals)) over one row/column, serial so the result is reproducible.
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

// w' (M.^2) w with per-row partials combined in index order.
double weighted_square_quad(const Matrix& m, const Vector& w) {
    const int n = static_cast<int>(m.rows());
    std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += m(i, j) * m(i, j) * w(j);
        part[i] = s * w(i);
    }
    double out = 0.0;
    for (int i = 0; i < n; ++i) out += part[i];
    return out;
}

// <A P, P B> where A, B are symmetric; per-row partials keep it deterministic.
double dense_cross_term(const Matrix& a, const Matrix& p, const Matrix& b) {
    const int n = static_cast<int>(p.rows());
    const int m = static_cast<int>(p.cols());
    Matrix u(n, m), v(n, m);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a(i, k) * p(k, j);
            u(i, j) = s;
        }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += p(i, k) * b(k, j);
            v(i, j) = s;
        }
    std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += u(i, j) * v(i, j);
        part[i] = s;
    }
    double out = 0.0;
    for (int i = 0; i < n; ++i) out += part[i];
    return out;
}

// KL projection of exp(log_kernel) onto the polytope with the given marginals,
// run entirely in the log domain. Column marginals must be strictly positive;
// zero row marginals zero out the corresponding rows. Potentials passed via
// u_io/v_io warm-start the iteration and receive the final values; err_out
// receives the final column residual (rows are exact by construction).
Matrix kl_project(const Matrix& log_kernel, const Vector& row_marg, const Vector& col_marg,
                  int max_iter, double tol, Vector* u_io = nullptr, Vector* v_io = nullptr,
                  double* err_out = nullptr) {
    const int n = static_cast<int>(log_kernel.rows());
    const int r = static_cast<int>(log_kernel.cols());
    Vector lrm(n), lcm(r);
    for (int i = 0; i < n; ++i) lrm(i) = safe_log(row_marg(i));
    for (int j = 0; j < r; ++j) lcm(j) = safe_log(col_marg(j));
    Vector u = (u_io && u_io->size() == n) ? *u_io : Vector::Zero(n);
    Vector v = (v_io && v_io->size() == r) ? *v_io : Vector::Zero(r);
    double err = std::numeric_limits<double>::infinity();
    bool stopped = false;
    Vector v_new(r);
    for (int it = 0; it < max_iter; ++it) {
        for (int j = 0; j < r; ++j) v_new(j) = lcm(j) - lse_col(log_kernel, j, u);
        // the v update exposes the column sums of the state left by the
        // previous round: csum_j = col_marg(j) * exp(v(j) - v_new(j)); rows
        // there are exact, so that residual alone decides the stop
        if (it > 0) {
            err = 0.0;
            for (int j = 0; j < r; ++j) {
                if (col_marg(j) == 0.0) continue;
                err = std::max(err, col_marg(j) * std::abs(std::exp(v(j) - v_new(j)) - 1.0));
            }
            if (err < tol) {
                stopped = true;
                break;
            }
        }
        v = v_new;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) u(i) = lrm(i) - lse_row(log_kernel, i, v);
    }
    if (!stopped && max_iter > 0 && err_out) {
        err = 0.0;
        for (int j = 0; j < r; ++j) {
            if (col_marg(j) == 0.0) continue;
            const double vn = lcm(j) - lse_col(log_kernel, j, u);
            err = std::max(err, col_marg(j) * std::abs(std::exp(v(j) - vn) - 1.0));
        }
    }
    if (u_io) *u_io = u;
    if (v_io) *v_io = v;
    if (err_out) *err_out = err;
    Matrix out(n, r);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) {
            const double e = log_kernel(i, j) + u(i) + v(j);
            out(i, j) = e == kNegInf ? 0.0 : std::exp(e);
        }
    return out;
}

struct LrGrads {
    Matrix q;
    Matrix r;
    Vector g;
};

// Energy of the factored plan against factored geometries; O((n+m) k r) work.
// Unclamped: near-zero optima may come out at -1e-15, and diverged candidates
// must stay visibly bad rather than clamp to zero. The public result clamps.
double lr_energy(const SqDistFactors& fa, const SqDistFactors& fb, const Matrix& q,
                 const Matrix& rf, const Vector& g, double term_const) {
    const Vector gi = g.cwiseMax(kGFloor).cwiseInverse();
    const Matrix qt = q * gi.asDiagonal();
    const Matrix ta = fa.right.transpose() * qt;
    const Matrix ua = fa.left.transpose() * qt;
    const Matrix tb = fb.right.transpose() * rf;
    const Matrix ub = fb.left.transpose() * rf;
    const Matrix ma = ua.transpose() * ta;  // qt' A qt
    const Matrix mb = ub.transpose() * tb;  // rf' B rf
    const double cross = ma.cwiseProduct(mb.transpose()).sum();
    return term_const - 2.0 * cross;
}

LrGrads lr_gradients(const SqDistFactors& fa, const SqDistFactors& fb, const Matrix& q,
                     const Matrix& rf, const Vector& g) {
    const Vector gi = g.cwiseMax(kGFloor).cwiseInverse();
    const Matrix qt = q * gi.asDiagonal();
    const Matrix ta = fa.right.transpose() * qt;   // A2' Q D^-1
    const Matrix taq = fa.right.transpose() * q;   // A2' Q
    const Matrix uat = fa.left.transpose() * qt;   // A1' Q D^-1
    const Matrix uaq = fa.left.transpose() * q;    // A1' Q
    const Matrix tb = fb.right.transpose() * rf;   // B2' R
    const Matrix ub = fb.left.transpose() * rf;    // B1' R
    const Matrix mb = ub.transpose() * tb;         // R' B R
    const Vector cq = q.colwise().sum().transpose();
    const Vector cr = rf.colwise().sum().transpose();
    const Vector rb = rf.transpose() * fb.alpha;  // R' beta
    const Vector qa = q.transpose() * fa.alpha;   // Q' alpha

    LrGrads out;
    out.q = -2.0 * (fa.left * (ta * (mb * gi.asDiagonal())));
    out.q.noalias() += fa.alpha * (cr.cwiseProduct(gi)).transpose();
    out.q.rowwise() += (rb.cwiseProduct(gi)).transpose();

    out.r = -2.0 * (fb.left * (tb * ((uat.transpose() * taq) * gi.asDiagonal())));
    out.r.noalias() += fb.alpha * (cq.cwiseProduct(gi)).transpose();
    out.r.rowwise() += (qa.cwiseProduct(gi)).transpose();

    const Matrix x = uaq.transpose() * ta;  // Q' A Q D^-1
    // diag(Q' grad_P R) without forming the product
    Vector diag = (x.cwiseProduct(mb.transpose())).rowwise().sum();
    diag = -2.0 * diag + qa.cwiseProduct(cr) + cq.cwiseProduct(rb);
    out.g = -diag.cwiseQuotient(g.cwiseMax(kGFloor).cwiseAbs2());
    return out;
}

// Data-driven symmetry breaking: rows are modulated by the normalized
// second-moment statistic, so it commutes with point permutations and is
// identical for isometric inputs.
Matrix init_factor(const Vector& w, const Vector& g, const Vector& alpha, double pert) {
    const int n = static_cast<int>(w.size());
    const int r = static_cast<int>(g.size());
    const double lo = alpha.minCoeff();
    const double hi = alpha.maxCoeff();
    Vector t = Vector::Zero(n);
    if (hi > lo) t = ((alpha.array() - lo) / (hi - lo)).matrix();
    Matrix f(n, r);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < r; ++k)
            f(i, k) = w(i) * g(k) *
                      (1.0 + pert * std::cos(std::numbers::pi * (k + 1) * t(i) + k));
    return f;
}

Matrix log_of(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out(i, j) = safe_log(m(i, j));
    return out;
}

}  // namespace

PairwiseMetricMatrix pairwise_sq_dist(const DiscreteMeasure& measure) {
    measure.validate();
    const int n = measure.size();
    const int d = measure.dim();
    const RowMatrix& x = measure.points;
    Matrix out(n, n);
#pragma omp parallel for schedule(static)
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

double gw_energy(const LowRankCoupling& plan, const PairwiseMetricMatrix& a,
                 const PairwiseMetricMatrix& b) {
    const int n = static_cast<int>(plan.q.rows());
    const int m = static_cast<int>(plan.r_factor.rows());
    const int r = plan.rank;
    if (plan.q.cols() != r || plan.r_factor.cols() != r || plan.g.size() != r)
        throw std::invalid_argument("gw_energy: factor shapes do not match rank");
    if (a.values.rows() != n || b.values.rows() != m)
        throw std::invalid_argument("gw_energy: factors and metric matrix sizes do not match");
    const Vector gi = plan.g.cwiseMax(kGFloor).cwiseInverse();
    const Matrix qt = plan.q * gi.asDiagonal();
    const Vector ra = qt * plan.r_factor.colwise().sum().transpose();
    const Vector cb = plan.r_factor * gi.asDiagonal() * plan.q.colwise().sum().transpose();
    const double term_a = weighted_square_quad(a.values, ra);
    const double term_b = weighted_square_quad(b.values, cb);
    const Matrix ma = qt.transpose() * a.values * qt;
    const Matrix mb = plan.r_factor.transpose() * b.values * plan.r_factor;
    const double cross = ma.cwiseProduct(mb.transpose()).sum();
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
    check_weights(a, "sinkhorn");
    check_weights(b, "sinkhorn");

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
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) u(i) = loga(i) - lse_row(k, i, v);
#pragma omp parallel for schedule(static)
        for (int j = 0; j < m; ++j) v(j) = logb(j) - lse_col(k, j, u);
        // columns are exact after the v update; the row residual drives the stop
        double err = 0.0;
        std::vector<double> rsum(n, 0.0);
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) res.coupling.plan(i, j) = plan_entry(i, j);
    std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += cost(i, j) * res.coupling.plan(i, j);
        part[i] = s;
    }
    res.cost = 0.0;
    for (int i = 0; i < n; ++i) res.cost += part[i];
    return res;
}

SqDistFactors make_sq_dist_factors(const DiscreteMeasure& measure) {
    measure.validate();
    const int n = measure.size();
    const int d = measure.dim();
    const RowMatrix& x = measure.points;
    const Vector& w = measure.weights;
    const Vector z = x.rowwise().squaredNorm();

    SqDistFactors f;
    f.left.resize(n, d + 2);
    f.right.resize(n, d + 2);
    f.left.col(0) = z;
    f.left.col(1).setOnes();
    f.left.rightCols(d) = -2.0 * x;
    f.right.col(0).setOnes();
    f.right.col(1) = z;
    f.right.rightCols(d) = x;

    const Vector xm = x.colwise().mean().transpose();
    f.mean_entry = std::max(0.0, 2.0 * z.mean() - 2.0 * xm.squaredNorm());

    // alpha_i = sum_j w_j (z_i + z_j - 2 x_i.x_j)^2, expanded into weighted moments
    const double s1 = w.dot(z);
    const double s2 = w.dot(z.cwiseAbs2());
    const Matrix mom2 = x.transpose() * w.asDiagonal() * x;  // d x d
    const Vector m1 = x.transpose() * w;
    const Vector m2 = x.transpose() * w.cwiseProduct(z);
    f.alpha.resize(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        const double quad = xi * mom2 * xi.transpose();
        const double val = z(i) * z(i) + s2 + 4.0 * quad + 2.0 * z(i) * s1 -
                           4.0 * z(i) * xi.dot(m1) - 4.0 * xi.dot(m2);
        f.alpha(i) = std::max(0.0, val);
    }
    f.quad = w.dot(f.alpha);
    return f;
}

double resolve_epsilon(const SolverConfig& cfg, double mean_a, double mean_b) {
    if (cfg.epsilon) return *cfg.epsilon;
    return std::max(1e-2 * std::sqrt(std::max(0.0, mean_a) * std::max(0.0, mean_b)), 1e-9);
}

GwResult entropic_gw(const DiscreteMeasure& a_meas, const DiscreteMeasure& b_meas,
                     const SolverConfig& cfg) {
    cfg.validate();
    const Matrix a = pairwise_sq_dist(a_meas).values;
    const Matrix b = pairwise_sq_dist(b_meas).values;
    const Vector& wa = a_meas.weights;
    const Vector& wb = b_meas.weights;
    const double eps = resolve_epsilon(cfg, a.mean(), b.mean());

    const Vector alpha = a.cwiseAbs2() * wa;
    const Vector beta = b.cwiseAbs2() * wb;
    const double term_const = wa.dot(alpha) + wb.dot(beta);
    auto energy_of = [&](const Matrix& p) {
        return std::max(0.0, term_const - 2.0 * dense_cross_term(a, p, b));
    };

    // One mirror-descent trajectory from the independent coupling. With
    // staging the entropic smoothing starts two decades above the target and
    // cools stagewise, which traverses basins the fixed-eps run cannot leave;
    // the returned result is the better of the two trajectories.
    struct Trajectory {
        Matrix best_p;
        double best_energy = 0.0;
        std::vector<double> trace;
        int iterations = 0;
        bool converged = false;
    };
    auto run = [&](bool staged) {
        Trajectory t;
        Matrix p = wa * wb.transpose();
        double energy = energy_of(p);
        t.best_energy = energy;
        t.best_p = p;
        t.trace.push_back(energy);
        double eps_s = staged ? 100.0 * eps : eps;
        int stage_it = 0;
        for (int it = 1; it <= cfg.max_outer_iter; ++it) {
            t.iterations = it;
            ++stage_it;
            Matrix grad = -2.0 * (a * (p * b));
            grad.colwise() += alpha;
            grad.rowwise() += beta.transpose();
            const SinkhornResult sr = sinkhorn(grad, wa, wb, eps_s, cfg.max_inner_iter, kProjTol);
            const double delta = (sr.coupling.plan - p).cwiseAbs().maxCoeff();
            p = sr.coupling.plan;
            energy = energy_of(p);
            t.trace.push_back(energy);
            if (energy < t.best_energy) {
                t.best_energy = energy;
                t.best_p = p;
            }
            if (delta < cfg.tol && eps_s <= eps) {
                t.converged = true;
                break;
            }
            // a stage ends when the coupling settles or the stage budget runs out
            if (staged && eps_s > eps && (delta < cfg.tol || stage_it >= 15)) {
                eps_s = std::max(eps, eps_s * 0.7);
                stage_it = 0;
            }
        }
        return t;
    };

    Trajectory plain = run(false);
    Trajectory staged = run(true);
    Trajectory& win = staged.best_energy < plain.best_energy ? staged : plain;

    GwResult res;
    res.epsilon_used = eps;
    res.cost = win.best_energy;
    res.coupling = Coupling{std::move(win.best_p)};
    res.energy_trace = std::move(win.trace);
    res.iterations = win.iterations;
    res.converged = win.converged;
    return res;
}

namespace {

// Annealed best-response core. Each outer iteration re-solves the q block from
// the bare gradient kernel at smoothing eps_t, then the r block at the updated
// q; eps_t cools geometrically from two decades above the configured epsilon.
// The factor g joins via guarded mirror steps once the smoothing has cooled,
// accepted only when the energy after reprojecting q and r decreases. The best
// feasible iterate seen is the recorded and returned state, so the per
// iteration energy trace is non-increasing by construction.
GwResult gw_lowrank_ordered(const SqDistFactors& fa, const SqDistFactors& fb, const Vector& a,
                            const Vector& b, const SolverConfig& cfg) {
    const int rank = cfg.rank;
    const int inner = cfg.max_inner_iter;
    const double eps = resolve_epsilon(cfg, fa.mean_entry, fb.mean_entry);
    const double term_const = fa.quad + fb.quad;
    constexpr double kAnneal0 = 100.0;   // initial smoothing multiple of epsilon
    constexpr double kAnnealRate = 0.7;  // geometric cooling per outer iteration
    constexpr double kGammaBase = 10.0;  // g step before gradient-norm rescaling
    constexpr double kAcceptTol = 1e-4;  // projection residual for accepting a candidate

    Vector g = Vector::Constant(rank, 1.0 / rank);
    Matrix q = init_factor(a, g, fa.alpha, cfg.init_perturbation);
    Matrix rf = init_factor(b, g, fb.alpha, cfg.init_perturbation);
    q = kl_project(log_of(q), a, g, inner, kLoopTol);
    rf = kl_project(log_of(rf), b, g, inner, kLoopTol);

    double best_e = lr_energy(fa, fb, q, rf, g, term_const);
    Matrix q_best = q, r_best = rf;
    Vector g_best = g;
    GwResult res;
    res.epsilon_used = eps;
    res.energy_trace.push_back(std::max(0.0, best_e));

    double gam_g = kGammaBase;
    Vector uq, vq, ur, vr;  // warm-start potentials for the q/r projections
    for (int it = 1; it <= cfg.max_outer_iter; ++it) {
        const double eps_t = eps * (1.0 + (kAnneal0 - 1.0) * std::pow(kAnnealRate, it - 1));
        const bool cooled = eps_t <= eps * (1.0 + 1e-3);

        if (cooled) {
            // guarded mirror step of g; q and r follow by reprojection
            const double e_cur = lr_energy(fa, fb, q, rf, g, term_const);
            const LrGrads gr = lr_gradients(fa, fb, q, rf, g);
            const double ng = std::max(gr.g.cwiseAbs().maxCoeff(), 1e-30);
            double gamma = std::min(std::max(gam_g * 2.0, kGammaBase), 1e6 * kGammaBase);
            for (int bt = 0; bt < 20; ++bt) {
                const double step = gamma / ng;
                Vector lg(rank);
                for (int k = 0; k < rank; ++k) lg(k) = safe_log(g(k)) - step * gr.g(k);
                Vector g_try = (lg.array() - lg.maxCoeff()).exp().matrix();
                g_try /= g_try.sum();
                g_try = g_try.cwiseMax(kGFloor);
                g_try /= g_try.sum();
                // q and rf are already feasible for marginals close to g_try, so
                // these projections converge from zero potentials in a few
                // rounds; the descent-step potentials belong to a kernel of a
                // very different scale and would only slow them down
                double eq = 0.0, er = 0.0;
                const Matrix q_try = kl_project(log_of(q), a, g_try, inner, kLoopTol, nullptr,
                                                nullptr, &eq);
                const Matrix r_try = kl_project(log_of(rf), b, g_try, inner, kLoopTol, nullptr,
                                                nullptr, &er);
                const double e_try = lr_energy(fa, fb, q_try, r_try, g_try, term_const);
                if (eq < kAcceptTol && er < kAcceptTol && std::isfinite(e_try) &&
                    e_try <= e_cur + 1e-12 * std::max(1.0, std::abs(e_cur))) {
                    g = g_try;
                    q = q_try;
                    rf = r_try;
                    gam_g = gamma;
                    break;
                }
                gamma *= 0.5;
            }
        }

        const double s = 1.0 / eps_t;
        double eq = 0.0, er = 0.0;
        const LrGrads g1 = lr_gradients(fa, fb, q, rf, g);
        const Matrix q_new = kl_project(-s * g1.q, a, g, inner, kLoopTol, &uq, &vq, &eq);
        const LrGrads g2 = lr_gradients(fa, fb, q_new, rf, g);
        const Matrix r_new = kl_project(-s * g2.r, b, g, inner, kLoopTol, &ur, &vr, &er);
        const double e_new = lr_energy(fa, fb, q_new, r_new, g, term_const);
        if (!std::isfinite(e_new)) break;
        const double delta = (q_new - q).cwiseAbs().maxCoeff() +
                             (r_new - rf).cwiseAbs().maxCoeff();
        q = q_new;
        rf = r_new;
        if (e_new < best_e && eq < kAcceptTol && er < kAcceptTol) {
            best_e = e_new;
            q_best = q;
            r_best = rf;
            g_best = g;
        }
        res.energy_trace.push_back(std::max(0.0, best_e));
        res.iterations = it;
        if (delta < cfg.tol && cooled) {
            res.converged = true;
            break;
        }
    }

    // return the incumbent with its projections finished to full accuracy
    q = std::move(q_best);
    rf = std::move(r_best);
    g = std::move(g_best);
    {
        Vector u1, v1, u2, v2;
        double err = 0.0;
        Matrix q_p = q, r_p = rf;
        for (int round = 0; round < 50; ++round) {
            q_p = kl_project(log_of(q), a, g, cfg.max_inner_iter, kProjTol, &u1, &v1, &err);
            if (err < kProjTol) break;
        }
        for (int round = 0; round < 50; ++round) {
            r_p = kl_project(log_of(rf), b, g, cfg.max_inner_iter, kProjTol, &u2, &v2, &err);
            if (err < kProjTol) break;
        }
        q = std::move(q_p);
        rf = std::move(r_p);
    }
    res.cost = std::max(0.0, lr_energy(fa, fb, q, rf, g, term_const));
    res.low_rank = LowRankCoupling{std::move(q), std::move(rf), std::move(g), cfg.rank};
    return res;
}

}  // namespace

GwResult gw_lowrank(const DiscreteMeasure& a_meas, const DiscreteMeasure& b_meas,
                    const SolverConfig& cfg) {
    cfg.validate();
    a_meas.validate();
    b_meas.validate();
    const int n = a_meas.size();
    const int m = b_meas.size();
    if (cfg.rank > std::min(n, m))
        throw std::invalid_argument("gw_lowrank: rank exceeds min of the two sizes");

    const SqDistFactors fa = make_sq_dist_factors(a_meas);
    const SqDistFactors fb = make_sq_dist_factors(b_meas);

    // The solver is run with the arguments in a canonical order chosen by
    // permutation-invariant geometry statistics, which makes the cost exactly
    // symmetric in the two measures.
    const bool swap_args = std::tie(m, fb.mean_entry, fb.quad) < std::tie(n, fa.mean_entry, fa.quad);
    GwResult res = swap_args ? gw_lowrank_ordered(fb, fa, b_meas.weights, a_meas.weights, cfg)
                             : gw_lowrank_ordered(fa, fb, a_meas.weights, b_meas.weights, cfg);
    if (swap_args && res.low_rank)
        std::swap(res.low_rank->q, res.low_rank->r_factor);
    return res;
}

double max_marginal_violation(const Coupling& plan, const Vector& a, const Vector& b) {
    const Vector ra = plan.plan.rowwise().sum();
    const Vector cb = plan.plan.colwise().sum().transpose();
    return std::max((ra - a).cwiseAbs().maxCoeff(), (cb - b).cwiseAbs().maxCoeff());
}

double max_marginal_violation(const LowRankCoupling& plan, const Vector& a, const Vector& b) {
    const Vector gi = plan.g.cwiseMax(kGFloor).cwiseInverse();
    const Matrix qt = plan.q * gi.asDiagonal();
    const Vector ra = qt * plan.r_factor.colwise().sum().transpose();
    const Vector cb = plan.r_factor * gi.asDiagonal() * plan.q.colwise().sum().transpose();
    const double row_err = (ra - a).cwiseAbs().maxCoeff();
    const double col_err = (cb - b).cwiseAbs().maxCoeff();
    // the factors must also couple with g itself
    const Vector qg = plan.q.colwise().sum().transpose();
    const Vector rg = plan.r_factor.colwise().sum().transpose();
    const double g_err = std::max((qg - plan.g).cwiseAbs().maxCoeff(),
                                  (rg - plan.g).cwiseAbs().maxCoeff());
    return std::max({row_err, col_err, g_err});
}

}  // namespace lotus
