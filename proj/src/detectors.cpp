#include "lotus/detectors.hpp"

#include "lotus/detail/detector_kernels.hpp"
#include "lotus/transform.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lotus {

using nlohmann::json;

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::knn: return "knn";
        case DetectorKind::hbos: return "hbos";
        case DetectorKind::iforest: return "iforest";
        case DetectorKind::loda: return "loda";
        case DetectorKind::abod: return "abod";
    }
    throw std::invalid_argument("detector: invalid kind");
}

DetectorKind detector_from_string(const std::string& name) {
    for (const DetectorKind k : all_detectors())
        if (to_string(k) == name) return k;
    throw std::invalid_argument("detector: unknown name '" + name + "'");
}

const std::vector<DetectorKind>& all_detectors() {
    static const std::vector<DetectorKind> kinds{DetectorKind::knn, DetectorKind::hbos,
                                                 DetectorKind::iforest, DetectorKind::loda,
                                                 DetectorKind::abod};
    return kinds;
}

const std::vector<ParamGrid>& search_space(DetectorKind kind) {
    static const std::vector<ParamGrid> knn{
        {"k", {1, 3, 5, 10, 20, 50, 100}},
        {"method", {"largest", "mean", "median"}},
    };
    static const std::vector<ParamGrid> hbos{
        {"n_bins", {5, 10, 20, 30, 50, 75, 100}},
    };
    static const std::vector<ParamGrid> iforest{
        {"n_estimators", {10, 30, 50, 100, 150, 200}},
        {"max_samples", {64, 128, 256, 512}},
    };
    static const std::vector<ParamGrid> loda{
        {"n_projections", {10, 20, 50, 100}},
        {"n_bins", {5, 10, 20, 30}},
    };
    static const std::vector<ParamGrid> abod{
        {"k", {3, 5, 10, 15, 20, 60}},
    };
    switch (kind) {
        case DetectorKind::knn: return knn;
        case DetectorKind::hbos: return hbos;
        case DetectorKind::iforest: return iforest;
        case DetectorKind::loda: return loda;
        case DetectorKind::abod: return abod;
    }
    throw std::invalid_argument("detector: invalid kind");
}

PipelineConfig default_config(DetectorKind kind) {
    PipelineConfig cfg;
    cfg.detector = kind;
    switch (kind) {
        case DetectorKind::knn: cfg.params = {{"k", 5}, {"method", "largest"}}; break;
        case DetectorKind::hbos: cfg.params = {{"n_bins", 10}}; break;
        case DetectorKind::iforest:
            cfg.params = {{"n_estimators", 100}, {"max_samples", 256}};
            break;
        case DetectorKind::loda: cfg.params = {{"n_projections", 100}, {"n_bins", 10}}; break;
        case DetectorKind::abod: cfg.params = {{"k", 10}}; break;
    }
    return cfg;
}

namespace {

bool takes_seed(DetectorKind kind) {
    return kind == DetectorKind::iforest || kind == DetectorKind::loda;
}

const ParamGrid* find_grid(const std::vector<ParamGrid>& grids, const std::string& name) {
    for (const auto& g : grids)
        if (g.name == name) return &g;
    return nullptr;
}

}  // namespace

void validate_config(const PipelineConfig& cfg) {
    if (!cfg.params.is_object())
        throw std::invalid_argument("pipeline config: params must be an object");
    const auto& grids = search_space(cfg.detector);
    for (const auto& [key, value] : cfg.params.items()) {
        if (key == "seed" && takes_seed(cfg.detector)) {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
                throw std::invalid_argument("pipeline config: seed must be a nonnegative integer");
            continue;
        }
        const ParamGrid* grid = find_grid(grids, key);
        if (grid == nullptr)
            throw std::invalid_argument("pipeline config: unknown param '" + key + "' for " +
                                        to_string(cfg.detector));
        if (std::find(grid->values.begin(), grid->values.end(), value) == grid->values.end())
            throw std::invalid_argument("pipeline config: value " + value.dump() +
                                        " for param '" + key + "' is outside the declared grid");
    }
}

PipelineConfig filled_with_defaults(const PipelineConfig& cfg) {
    PipelineConfig out = cfg;
    const PipelineConfig defaults = default_config(cfg.detector);
    for (const auto& [key, value] : defaults.params.items())
        if (!out.params.contains(key)) out.params[key] = value;
    if (takes_seed(cfg.detector) && !out.params.contains("seed")) out.params["seed"] = 0;
    return out;
}

nlohmann::json pipeline_to_json(const PipelineConfig& cfg) {
    return json{{"detector", to_string(cfg.detector)},
                {"params", cfg.params},
                {"standardize_input", cfg.standardize_input}};
}

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("pipeline config: expected a JSON object");
    if (!j.contains("detector") || !j["detector"].is_string())
        throw std::invalid_argument("pipeline config: missing detector name");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "detector" && key != "params" && key != "standardize_input")
            throw std::invalid_argument("pipeline config: unknown field '" + key + "'");
    }
    PipelineConfig cfg;
    cfg.detector = detector_from_string(j["detector"].get<std::string>());
    if (j.contains("params")) cfg.params = j["params"];
    if (j.contains("standardize_input")) {
        if (!j["standardize_input"].is_boolean())
            throw std::invalid_argument("pipeline config: standardize_input must be a boolean");
        cfg.standardize_input = j["standardize_input"].get<bool>();
    }
    validate_config(cfg);
    return cfg;
}

std::string canonical_config_string(const PipelineConfig& cfg) {
    return pipeline_to_json(filled_with_defaults(cfg)).dump();
}

Vector knn_score(const RowMatrix& x, int k, const std::string& method) {
    const detail::KnnMethod m = detail::parse_knn_method(method);
    detail::check_knn_args(x, k);
    const int n = static_cast<int>(x.rows());
    Vector out(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) out(i) = detail::knn_point_score(x, i, k, m);
    return out;
}

Vector hbos_score(const RowMatrix& x, int n_bins) {
    detail::check_hist_args(x, n_bins);
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Matrix contrib(n, d);
#pragma omp parallel for schedule(static)
    for (int f = 0; f < d; ++f) detail::hbos_feature_contrib(x, f, n_bins, contrib);
    Vector out = Vector::Zero(n);
    for (int f = 0; f < d; ++f) out += contrib.col(f);
    return out;
}

Vector iforest_score(const RowMatrix& x, int n_estimators, int max_samples, std::uint64_t seed) {
    detail::check_iforest_args(x, n_estimators, max_samples);
    const int n = static_cast<int>(x.rows());
    // more samples than points would repeat the whole set; clamp instead of failing
    const int sample_size = std::min<int>(max_samples, n);
    Matrix depths(n, n_estimators);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n_estimators; ++t)
        detail::iforest_tree_depths(x, t, sample_size, seed, depths);
    Vector avg = Vector::Zero(n);
    for (int t = 0; t < n_estimators; ++t) avg += depths.col(t);
    avg /= static_cast<double>(n_estimators);
    const double norm = detail::average_path_length(sample_size);
    Vector out(n);
    for (int i = 0; i < n; ++i) out(i) = std::exp2(-avg(i) / norm);
    return out;
}

Vector loda_score(const RowMatrix& x, int n_projections, int n_bins, std::uint64_t seed) {
    detail::check_loda_args(x, n_projections, n_bins);
    const int n = static_cast<int>(x.rows());
    Matrix contrib(n, n_projections);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n_projections; ++p)
        detail::loda_projection_contrib(x, p, n_bins, seed, contrib);
    Vector out = Vector::Zero(n);
    for (int p = 0; p < n_projections; ++p) out += contrib.col(p);
    out /= static_cast<double>(n_projections);
    return out;
}

Vector abod_score(const RowMatrix& x, int k) {
    detail::check_knn_args(x, k);
    const int n = static_cast<int>(x.rows());
    Vector out(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) out(i) = detail::abod_point_score(x, i, k);
    return out;
}

Vector fit_score(const PipelineConfig& cfg0, const RowMatrix& x) {
    validate_config(cfg0);
    const PipelineConfig cfg = filled_with_defaults(cfg0);
    if (x.rows() < 1) throw std::invalid_argument("fit_score: empty feature matrix");
    if (!x.allFinite()) throw std::invalid_argument("fit_score: features must be finite");
    RowMatrix standardized;
    const RowMatrix* xs_ptr = &x;
    if (cfg.standardize_input) {
        standardized = standardize(x);
        xs_ptr = &standardized;
    }
    const RowMatrix& xs = *xs_ptr;
    const json& p = cfg.params;
    switch (cfg.detector) {
        case DetectorKind::knn:
            return knn_score(xs, p["k"].get<int>(), p["method"].get<std::string>());
        case DetectorKind::hbos:
            return hbos_score(xs, p["n_bins"].get<int>());
        case DetectorKind::iforest:
            return iforest_score(xs, p["n_estimators"].get<int>(), p["max_samples"].get<int>(),
                                 p["seed"].get<std::uint64_t>());
        case DetectorKind::loda:
            return loda_score(xs, p["n_projections"].get<int>(), p["n_bins"].get<int>(),
                              p["seed"].get<std::uint64_t>());
        case DetectorKind::abod:
            return abod_score(xs, p["k"].get<int>());
    }
    throw std::invalid_argument("fit_score: invalid detector");
}

}  // namespace lotus
