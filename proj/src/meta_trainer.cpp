#include "lotus/meta_trainer.hpp"

#include "lotus/eval.hpp"
#include "lotus/rng.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>
#include <string>

namespace lotus {

namespace {

constexpr int kPopulation = 12;
constexpr int kElites = 4;
constexpr int kFresh = 2;

PipelineConfig random_config(Rng& rng) {
    PipelineConfig cfg;
    const auto& kinds = all_detectors();
    cfg.detector = kinds[rng.uniform_int(static_cast<int>(kinds.size()))];
    for (const ParamGrid& grid : search_space(cfg.detector))
        cfg.params[grid.name] = grid.values[rng.uniform_int(static_cast<int>(grid.values.size()))];
    cfg.standardize_input = rng.uniform_int(2) == 1;
    return cfg;
}

// Re-draws one coordinate uniformly from its domain; standardize_input counts
// as a coordinate alongside the detector's grid params.
PipelineConfig mutate(const PipelineConfig& parent, Rng& rng) {
    PipelineConfig cfg = parent;
    const auto& grids = search_space(cfg.detector);
    const int pick = rng.uniform_int(static_cast<int>(grids.size()) + 1);
    if (pick == static_cast<int>(grids.size())) {
        cfg.standardize_input = rng.uniform_int(2) == 1;
    } else {
        const ParamGrid& grid = grids[pick];
        cfg.params[grid.name] =
            grid.values[rng.uniform_int(static_cast<int>(grid.values.size()))];
    }
    return cfg;
}

}  // namespace

void SearchBudget::validate() const {
    if (max_evaluations < 1)
        throw std::invalid_argument("search budget needs at least one evaluation");
    if (wall_clock_cap_seconds && *wall_clock_cap_seconds <= 0.0)
        throw std::invalid_argument("wall clock cap must be positive when set");
}

double evaluate_config(const PipelineConfig& cfg, const RowMatrix& x, const std::vector<int>& y) {
    validate_config(cfg);
    return roc_auc(fit_score(cfg, x), y);
}

SearchResult search(const RowMatrix& x, const std::vector<int>& y, const SearchBudget& budget) {
    budget.validate();
    {
        bool has0 = false, has1 = false;
        for (const int v : y) (v == 1 ? has1 : has0) = true;
        if (!has0 || !has1)
            throw std::invalid_argument("search: labels must contain both classes");
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto expired = [&budget, t0] {
        if (!budget.wall_clock_cap_seconds) return false;
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
        return el.count() >= *budget.wall_clock_cap_seconds;
    };

    Rng rng(budget.seed);
    SearchResult result;
    std::map<std::string, double> seen;  // canonical config -> AUC, spares re-evaluation
    int evals = 0;
    bool out_of_budget = false;

    std::vector<PipelineConfig> population;
    population.reserve(kPopulation);
    for (int i = 0; i < kPopulation; ++i) population.push_back(random_config(rng));

    while (!out_of_budget) {
        // (canonical key, auc) per member; keys double as the deterministic
        // tie-break for elite selection
        std::vector<std::pair<std::string, double>> scored;
        for (const PipelineConfig& cfg : population) {
            const std::string key = canonical_config_string(cfg);
            auto it = seen.find(key);
            if (it == seen.end()) {
                if (evals >= budget.max_evaluations || expired()) {
                    out_of_budget = true;
                    break;
                }
                double auc = 0.0;
                try {
                    auc = evaluate_config(cfg, x, y);
                } catch (const std::exception&) {
                    auc = 0.0;  // failed fit scores as the documented sentinel
                }
                ++evals;
                result.history.emplace_back(cfg, auc);
                it = seen.emplace(key, auc).first;
            }
            scored.emplace_back(key, it->second);
        }
        if (out_of_budget) break;

        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        std::vector<PipelineConfig> elites;
        for (const auto& [key, auc] : scored) {
            if (static_cast<int>(elites.size()) == kElites) break;
            for (const PipelineConfig& cfg : population)
                if (canonical_config_string(cfg) == key) {
                    elites.push_back(cfg);
                    break;
                }
        }
        population = elites;
        while (static_cast<int>(population.size()) < kPopulation - kFresh)
            population.push_back(mutate(elites[rng.uniform_int(static_cast<int>(elites.size()))],
                                        rng));
        while (static_cast<int>(population.size()) < kPopulation)
            population.push_back(random_config(rng));
    }

    if (result.history.empty())
        throw std::runtime_error("search budget exhausted before any evaluation completed");
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.history.size(); ++i) {
        const auto& [cfg, auc] = result.history[i];
        const auto& [bcfg, bauc] = result.history[best];
        if (auc > bauc ||
            (auc == bauc && canonical_config_string(cfg) < canonical_config_string(bcfg)))
            best = i;
    }
    result.best = filled_with_defaults(result.history[best].first);
    result.best_auc = result.history[best].second;
    return result;
}

nlohmann::json search_result_to_json(const SearchResult& result) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& [cfg, auc] : result.history)
        history.push_back({{"config", pipeline_to_json(cfg)}, {"auc", auc}});
    return nlohmann::json{{"best", pipeline_to_json(result.best)},
                          {"best_auc", result.best_auc},
                          {"evaluations", result.history.size()},
                          {"history", history}};
}

}  // namespace lotus
