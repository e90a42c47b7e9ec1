#include "lotus/selector.hpp"

#include "lotus/csv.hpp"
#include "lotus/ot.hpp"
#include "lotus/transform.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace lotus {

SelectionReport lotus_select(const Dataset& d_new, const MetaStore& store,
                             const TransformConfig& tcfg, const SolverConfig& scfg,
                             const std::vector<std::string>& exclude) {
    tcfg.validate();
    scfg.validate();
    SelectionReport report;
    report.excluded = exclude;
    std::sort(report.excluded.begin(), report.excluded.end());
    report.transform_config = tcfg;
    report.solver_config = scfg;

    const auto is_excluded = [&report](const std::string& id) {
        return std::binary_search(report.excluded.begin(), report.excluded.end(), id);
    };
    int candidates = 0;
    for (const MetaEntry& e : store.entries)
        if (!is_excluded(e.id)) ++candidates;
    if (candidates == 0) throw std::runtime_error("empty effective store");

    const std::string query_fp = transform_fingerprint(tcfg);
    const DiscreteMeasure query = phi(d_new, tcfg);

    for (const MetaEntry& e : store.entries) {
        if (is_excluded(e.id)) continue;
        if (e.transform_fingerprint != query_fp) {
            report.failures[e.id] = "transform fingerprint mismatch (entry " +
                                    e.transform_fingerprint + ", query " + query_fp + ")";
            continue;
        }
        try {
            const Dataset stored = read_dataset_csv(
                (std::filesystem::path(store.dir) / e.dataset_path).string());
            const GwResult res = gw_lowrank(query, phi(stored, tcfg), scfg);
            if (!std::isfinite(res.cost)) throw std::runtime_error("non-finite distance");
            report.distances[e.id] = res.cost;
        } catch (const std::exception& ex) {
            report.failures[e.id] = ex.what();
        }
    }
    if (report.distances.empty())
        throw std::runtime_error("distance computation failed for every store entry");

    // std::map iterates ids in ascending order, so the strict < is the
    // lexicographic tie-break
    const auto best = std::min_element(
        report.distances.begin(), report.distances.end(),
        [](const auto& x, const auto& y) { return x.second < y.second; });
    report.chosen_id = best->first;
    report.pipeline = get_pipeline(store, report.chosen_id);
    return report;
}

nlohmann::json report_to_json(const SelectionReport& report) {
    nlohmann::json distances = nlohmann::json::object();
    for (const auto& [id, d] : report.distances) distances[id] = d;
    nlohmann::json failures = nlohmann::json::object();
    for (const auto& [id, why] : report.failures) failures[id] = why;
    const TransformConfig& t = report.transform_config;
    const SolverConfig& s = report.solver_config;
    nlohmann::json solver{{"rank", s.rank},
                          {"max_outer_iter", s.max_outer_iter},
                          {"max_inner_iter", s.max_inner_iter},
                          {"tol", s.tol},
                          {"init_perturbation", s.init_perturbation}};
    if (s.epsilon) solver["epsilon"] = *s.epsilon;
    return nlohmann::json{
        {"chosen_id", report.chosen_id},
        {"pipeline", pipeline_to_json(report.pipeline)},
        {"distances", distances},
        {"failures", failures},
        {"excluded", report.excluded},
        {"transform_config",
         {{"max_rows", t.max_rows},
          {"ica_max_iter", t.ica_max_iter},
          {"ica_tol", t.ica_tol},
          {"seed", t.seed}}},
        {"solver_config", solver}};
}

}  // namespace lotus
