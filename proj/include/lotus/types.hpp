#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lotus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Sample tables are row-major: one row per point.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Weighted point cloud, the unit every transport operation acts on.
struct DiscreteMeasure {
    RowMatrix points;  // n x d
    Vector weights;    // n entries, nonnegative, summing to 1

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    void validate() const;
};

// Symmetric nonnegative squared-distance matrix with zero diagonal.
struct PairwiseMetricMatrix {
    Matrix values;
    void validate(double tol = 1e-9) const;
};

struct Coupling {
    Matrix plan;  // n x m, nonnegative
};

// Factored plan P = q * diag(1/g) * r_factor^T. q couples the source weights
// with g, r_factor couples the target weights with g.
struct LowRankCoupling {
    Matrix q;         // n x rank
    Matrix r_factor;  // m x rank
    Vector g;         // rank entries, strictly positive, summing to 1
    int rank = 0;
};

struct GwResult {
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double epsilon_used = 0.0;
    std::optional<Coupling> coupling;         // set by entropic_gw
    std::optional<LowRankCoupling> low_rank;  // set by gw_lowrank
    std::vector<double> energy_trace;         // objective after init and each accepted step
};

struct SolverConfig {
    std::optional<double> epsilon;  // entropy strength; unset picks a scale-adaptive default
    int rank = 6;
    int max_outer_iter = 100;
    int max_inner_iter = 1000;
    double tol = 1e-6;
    double init_perturbation = 1e-4;
    void validate() const;
};

struct TransformConfig {
    int max_rows = 2000;
    int ica_max_iter = 200;
    double ica_tol = 1e-4;
    std::uint64_t seed = 0;
    void validate() const;
};

// Raw feature table plus optional 0/1 outlier labels (1 = outlier).
struct Dataset {
    RowMatrix features;
    std::optional<std::vector<int>> labels;
    std::string name;
};

}  // namespace lotus
