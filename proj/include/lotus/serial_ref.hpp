#pragma once

#include "lotus/ot.hpp"
#include "lotus/types.hpp"

#include <cstdint>

// Serial twins of the parallel kernels. Each mirrors the parallel code path
// with identical per-element arithmetic and combine order, so results must
// match bitwise regardless of thread count. Kept for equivalence tests and
// for the kernel benchmark.
namespace lotus::ref {

PairwiseMetricMatrix pairwise_sq_dist(const DiscreteMeasure& measure);

double gw_energy(const Coupling& plan, const PairwiseMetricMatrix& a,
                 const PairwiseMetricMatrix& b);

SinkhornResult sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, double epsilon,
                        int max_iter, double tol);

Vector knn_score(const RowMatrix& x, int k, const std::string& method);
Vector hbos_score(const RowMatrix& x, int n_bins);
Vector iforest_score(const RowMatrix& x, int n_estimators, int max_samples, std::uint64_t seed);
Vector loda_score(const RowMatrix& x, int n_projections, int n_bins, std::uint64_t seed);
Vector abod_score(const RowMatrix& x, int k);

}  // namespace lotus::ref
