#include "lotus/types.hpp"

#include <cmath>
#include <stdexcept>

namespace lotus {

void DiscreteMeasure::validate() const {
    if (points.rows() < 1) throw std::invalid_argument("measure: needs at least one point");
    if (weights.size() != points.rows())
        throw std::invalid_argument("measure: weight count does not match point count");
    if (!points.allFinite()) throw std::invalid_argument("measure: points must be finite");
    if (!weights.allFinite() || weights.minCoeff() < 0.0)
        throw std::invalid_argument("measure: weights must be finite and nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("measure: weights must sum to 1");
}

void PairwiseMetricMatrix::validate(double tol) const {
    if (values.rows() != values.cols())
        throw std::invalid_argument("metric matrix: must be square");
    if (!values.allFinite()) throw std::invalid_argument("metric matrix: entries must be finite");
    if (values.minCoeff() < -tol)
        throw std::invalid_argument("metric matrix: entries must be nonnegative");
    if (values.diagonal().cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("metric matrix: diagonal must be zero");
    if ((values - values.transpose()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("metric matrix: must be symmetric");
}

void SolverConfig::validate() const {
    if (epsilon && *epsilon <= 0.0) throw std::invalid_argument("solver config: epsilon must be positive");
    if (rank < 1) throw std::invalid_argument("solver config: rank must be at least 1");
    if (max_outer_iter < 1) throw std::invalid_argument("solver config: max_outer_iter must be at least 1");
    if (max_inner_iter < 1) throw std::invalid_argument("solver config: max_inner_iter must be at least 1");
    if (!(tol > 0.0)) throw std::invalid_argument("solver config: tol must be positive");
    if (init_perturbation < 0.0)
        throw std::invalid_argument("solver config: init_perturbation must be nonnegative");
}

void TransformConfig::validate() const {
    if (max_rows < 2) throw std::invalid_argument("transform config: max_rows must be at least 2");
    if (ica_max_iter < 0) throw std::invalid_argument("transform config: ica_max_iter must be nonnegative");
    if (!(ica_tol > 0.0)) throw std::invalid_argument("transform config: ica_tol must be positive");
}

}  // namespace lotus
