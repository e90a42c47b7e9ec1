#pragma once

#include "lotus/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lotus {

enum class DetectorKind { knn, hbos, iforest, loda, abod };

std::string to_string(DetectorKind kind);
DetectorKind detector_from_string(const std::string& name);
const std::vector<DetectorKind>& all_detectors();

// A fully specified scoring recipe: detector, hyperparameters, and whether the
// features are standardized before fitting. Serializes to
// {"detector": ..., "params": {...}, "standardize_input": ...}.
struct PipelineConfig {
    DetectorKind detector = DetectorKind::knn;
    nlohmann::json params = nlohmann::json::object();
    bool standardize_input = false;
};

nlohmann::json pipeline_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_from_json(const nlohmann::json& j);
// Sorted-key dump with defaults filled in; the deterministic tie-break key.
std::string canonical_config_string(const PipelineConfig& cfg);

struct ParamGrid {
    std::string name;
    std::vector<nlohmann::json> values;
};

// Declared hyperparameter domain per detector; searches and validation agree
// on exactly these values.
const std::vector<ParamGrid>& search_space(DetectorKind kind);
PipelineConfig default_config(DetectorKind kind);

// Rejects unknown params and off-grid values. Missing params are allowed and
// take defaults at fit time. iforest and loda additionally accept an integer
// "seed" (default 0).
void validate_config(const PipelineConfig& cfg);
PipelineConfig filled_with_defaults(const PipelineConfig& cfg);

// Higher score = more outlying, for every detector.
Vector knn_score(const RowMatrix& x, int k, const std::string& method);
Vector hbos_score(const RowMatrix& x, int n_bins);
Vector iforest_score(const RowMatrix& x, int n_estimators, int max_samples, std::uint64_t seed);
Vector loda_score(const RowMatrix& x, int n_projections, int n_bins, std::uint64_t seed);
Vector abod_score(const RowMatrix& x, int k);

Vector fit_score(const PipelineConfig& cfg, const RowMatrix& x);

}  // namespace lotus
