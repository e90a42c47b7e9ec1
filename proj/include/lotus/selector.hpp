#pragma once

#include "lotus/detectors.hpp"
#include "lotus/meta_store.hpp"
#include "lotus/types.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace lotus {

// Outcome of one zero-shot recommendation. Entries whose distance could not
// be computed (load, fingerprint, or solver failure) appear in failures with
// the reason instead of carrying a non-finite distance.
struct SelectionReport {
    std::string chosen_id;
    PipelineConfig pipeline;
    std::map<std::string, double> distances;    // finite costs, non-excluded entries only
    std::map<std::string, std::string> failures;
    std::vector<std::string> excluded;
    TransformConfig transform_config;
    SolverConfig solver_config;
};

// Transforms the query once, measures the low-rank GW distance to every
// non-excluded stored dataset, and recommends the pipeline of the nearest one
// (ties broken by lexicographically smallest id). Labels on the query are
// ignored. Per-entry failures are recorded and skipped; all entries failing
// is an error, as is an empty effective store.
SelectionReport lotus_select(const Dataset& d_new, const MetaStore& store,
                             const TransformConfig& tcfg, const SolverConfig& scfg,
                             const std::vector<std::string>& exclude = {});

nlohmann::json report_to_json(const SelectionReport& report);

}  // namespace lotus
