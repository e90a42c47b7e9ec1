#pragma once

#include "lotus/types.hpp"

namespace lotus {

PairwiseMetricMatrix pairwise_sq_dist(const DiscreteMeasure& measure);

// Quadratic transport energy sum_{i,i',j,j'} (A_{ii'} - B_{jj'})^2 P_{ij} P_{i'j'},
// evaluated with the plan's own marginals so it is valid for any nonnegative plan.
double gw_energy(const Coupling& plan, const PairwiseMetricMatrix& a, const PairwiseMetricMatrix& b);
double gw_energy(const LowRankCoupling& plan, const PairwiseMetricMatrix& a,
                 const PairwiseMetricMatrix& b);

struct SinkhornResult {
    Coupling coupling;
    double cost = 0.0;  // <cost_matrix, plan>, entropy excluded
    int iterations = 0;
    bool converged = false;
};

// Entropic linear OT in the log domain. tol bounds the worst marginal violation.
SinkhornResult sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double epsilon,
                        int max_iter, double tol);

// Exact rank-(d+2) factorization of the squared-distance matrix, A = left * right^T,
// plus the weighted moments the solvers need. Nothing quadratic in n is materialized.
struct SqDistFactors {
    Matrix left;        // n x (d+2)
    Matrix right;       // n x (d+2)
    Vector alpha;       // (A.^2) * weights
    double quad = 0.0;  // weights' * (A.^2) * weights
    double mean_entry = 0.0;
};
SqDistFactors make_sq_dist_factors(const DiscreteMeasure& measure);

// Unset epsilon resolves to 1e-2 * sqrt(mean_a * mean_b) where the means are the
// plain entry means of the two distance matrices.
double resolve_epsilon(const SolverConfig& cfg, double mean_a, double mean_b);

GwResult entropic_gw(const DiscreteMeasure& a, const DiscreteMeasure& b, const SolverConfig& cfg);
GwResult gw_lowrank(const DiscreteMeasure& a, const DiscreteMeasure& b, const SolverConfig& cfg);

double max_marginal_violation(const Coupling& plan, const Vector& a, const Vector& b);
double max_marginal_violation(const LowRankCoupling& plan, const Vector& a, const Vector& b);

}  // namespace lotus
