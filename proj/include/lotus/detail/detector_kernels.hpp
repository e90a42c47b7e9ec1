#pragma once

#include "lotus/types.hpp"

#include <cstdint>
#include <string>

// Per-item scoring kernels shared by the parallel detectors and their serial
// twins. Each call computes one output element (or one column of
// contributions) with a fixed inner order, so callers may distribute items
// across threads without changing results.
namespace lotus::detail {

enum class KnnMethod { largest, mean, median };

KnnMethod parse_knn_method(const std::string& method);

void check_knn_args(const RowMatrix& x, int k);
void check_hist_args(const RowMatrix& x, int n_bins);
void check_iforest_args(const RowMatrix& x, int n_estimators, int max_samples);
void check_loda_args(const RowMatrix& x, int n_projections, int n_bins);

double knn_point_score(const RowMatrix& x, int i, int k, KnnMethod method);
double abod_point_score(const RowMatrix& x, int i, int k);

// Writes column f of contrib: per-point negative log density of feature f.
void hbos_feature_contrib(const RowMatrix& x, int f, int n_bins, Matrix& contrib);

// Builds tree t from its derived seed and writes every point's path depth
// (leaf correction included) into column t of depths.
void iforest_tree_depths(const RowMatrix& x, int t, int sample_size, std::uint64_t seed,
                         Matrix& depths);

// Writes column p of contrib: negative log density under sparse projection p.
void loda_projection_contrib(const RowMatrix& x, int p, int n_bins, std::uint64_t seed,
                             Matrix& contrib);

// Expected unsuccessful-search path length in a binary search tree of n points.
double average_path_length(int n);

}  // namespace lotus::detail
