#pragma once

#include "lotus/detectors.hpp"
#include "lotus/meta_store.hpp"
#include "lotus/selector.hpp"
#include "lotus/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lotus {

// Mann-Whitney AUC with midranks for ties; labels must contain both classes.
double roc_auc(const Vector& scores, const std::vector<int>& labels);

// Datasets x methods AUC grid; absent cells mark per-cell failures.
struct ScoreTable {
    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::vector<std::vector<std::optional<double>>> cells;  // [dataset][method]

    std::string to_csv() const;  // "dataset" column first, 6 decimals, blank = missing
    static ScoreTable from_csv(const std::string& text);
    int method_index(const std::string& name) const;
};

// Mean over datasets of each method's rank (1 = best AUC, ties get midranks).
// Every cell must be present.
std::map<std::string, double> average_rank(const ScoreTable& table);

struct RopeResult {
    double p_left = 0.0;   // probability the first argument is practically better
    double p_rope = 0.0;   // probability the difference lies inside the rope
    double p_right = 0.0;  // probability the second argument is practically better
};

// Bayesian signed-rank test on paired AUC differences z = a - b with one zero
// pseudo-observation as prior. Each Monte Carlo draw weights the observations
// by a flat Dirichlet sample and is assigned to whichever region (above +rope,
// inside, below -rope) holds the largest weighted mass of pairwise midpoints
// (z_i + z_j)/2; left-right ties fall into the rope so that swapping the
// inputs swaps p_left and p_right exactly.
RopeResult rope_test(const std::vector<double>& a, const std::vector<double>& b, double rope,
                     int n_samples, std::uint64_t seed);

enum class SynthFamily { gauss_blob, two_clusters, correlated_gauss, ring, subspace_outliers,
                         scaled_blob };

std::string to_string(SynthFamily family);
SynthFamily synth_family_from_string(const std::string& name);
const std::vector<SynthFamily>& all_synth_families();

// round(contamination * n) outliers drawn from a uniform box spanning three
// times the inlier range per dimension, appended after the inliers; labels 1
// mark the outliers. Deterministic per seed.
Dataset generate_synthetic(SynthFamily family, int n, int d, double contamination,
                           std::uint64_t seed);

// Leave-one-out protocol: each stored dataset is scored by the pipeline the
// selector recommends with that dataset excluded ("LOTUS" column), next to
// each baseline config fitted directly. Per-cell failures become missing
// cells. Stored datasets must carry labels. The per-entry selection reports
// are exposed for protocol audits.
ScoreTable loo_evaluate(const MetaStore& store, const TransformConfig& tcfg,
                        const SolverConfig& scfg, const std::vector<PipelineConfig>& baselines,
                        std::vector<SelectionReport>* reports = nullptr);

}  // namespace lotus
