#pragma once

#include "lotus/detectors.hpp"
#include "lotus/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace lotus {

struct SearchBudget {
    int max_evaluations = 60;
    std::optional<double> wall_clock_cap_seconds;  // unset disables the cap
    std::uint64_t seed = 0;
    void validate() const;
};

struct SearchResult {
    PipelineConfig best;
    double best_auc = 0.0;
    std::vector<std::pair<PipelineConfig, double>> history;  // every evaluation, in order
};

// Fits the detector without labels, then scores the ranking against them.
// Detector failures propagate; the search layer turns them into AUC 0.
double evaluate_config(const PipelineConfig& cfg, const RowMatrix& x, const std::vector<int>& y);

// Evolutionary sweep of the declared search space: a population of 12, each
// generation keeping the top 4 by AUC, refilled with 6 single-param mutants of
// the survivors and 2 fresh random configs. Stops at max_evaluations or the
// wall-clock cap; with the cap disabled the result is a pure function of
// (x, y, budget). Best is taken over the whole history, ties broken by the
// lexicographically smallest canonical config string.
SearchResult search(const RowMatrix& x, const std::vector<int>& y, const SearchBudget& budget);

nlohmann::json search_result_to_json(const SearchResult& result);

}  // namespace lotus
