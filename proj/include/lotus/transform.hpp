#pragma once

#include "lotus/types.hpp"

#include <cstdint>

namespace lotus {

// Column-wise zero mean, unit variance (population). Columns with no variance
// become all-zero instead of dividing by ~0.
RowMatrix standardize(const RowMatrix& x);

// Uniform sample of at most max_rows rows without replacement, original row
// order preserved. Identity when the input is small enough.
RowMatrix subsample(const RowMatrix& x, int max_rows, std::uint64_t seed);

struct IcaResult {
    RowMatrix transformed;  // n x k, k = number of retained components
    bool converged = false;
};

// Whitens via eigendecomposition (components with eigenvalue <= 1e-10 are
// dropped), then runs symmetric fixed-point ICA with the logcosh contrast.
// If the rotation does not converge the whitened matrix is returned as is,
// flagged converged = false.
IcaResult fast_ica(const RowMatrix& x, const TransformConfig& cfg);

// Dataset -> comparable point cloud: subsample, standardize + ICA, uniform
// weights. Labels are never consulted.
DiscreteMeasure phi(const Dataset& dataset, const TransformConfig& cfg);

}  // namespace lotus
