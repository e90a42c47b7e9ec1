// Command-line surface: ingestion, meta-training, selection, evaluation.
// Every command emits a RunManifest with its resolved configuration, so a
// run can be reproduced from its own output. Results go to stdout (JSON) or
// --out files (CSV); errors are one line on stderr.
#include "lotus/csv.hpp"
#include "lotus/detectors.hpp"
#include "lotus/eval.hpp"
#include "lotus/meta_store.hpp"
#include "lotus/meta_trainer.hpp"
#include "lotus/ot.hpp"
#include "lotus/selector.hpp"
#include "lotus/transform.hpp"
#include "lotus/types.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr const char* kToolVersion = "0.1.0";

using nlohmann::json;

json transform_config_json(const lotus::TransformConfig& t) {
    return json{{"max_rows", t.max_rows},
                {"ica_max_iter", t.ica_max_iter},
                {"ica_tol", t.ica_tol},
                {"seed", t.seed}};
}

json solver_config_json(const lotus::SolverConfig& s) {
    json out{{"rank", s.rank},
             {"max_outer_iter", s.max_outer_iter},
             {"max_inner_iter", s.max_inner_iter},
             {"tol", s.tol},
             {"init_perturbation", s.init_perturbation}};
    if (s.epsilon) out["epsilon"] = *s.epsilon;
    return out;
}

json make_manifest(const std::string& command, const json& inputs) {
    return json{{"command", command}, {"tool_version", kToolVersion}, {"inputs", inputs}};
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rows with a missing cell in any compared column are dropped and reported.
struct FilteredColumns {
    std::vector<std::string> kept_datasets;
    std::vector<std::vector<double>> columns;  // one vector per requested method
    std::vector<std::string> dropped;
};

FilteredColumns filter_complete(const lotus::ScoreTable& table,
                                const std::vector<int>& method_cols) {
    FilteredColumns out;
    out.columns.resize(method_cols.size());
    for (size_t r = 0; r < table.datasets.size(); ++r) {
        bool complete = true;
        for (const int c : method_cols)
            if (!table.cells[r][c]) complete = false;
        if (!complete) {
            out.dropped.push_back(table.datasets[r]);
            continue;
        }
        out.kept_datasets.push_back(table.datasets[r]);
        for (size_t m = 0; m < method_cols.size(); ++m)
            out.columns[m].push_back(*table.cells[r][method_cols[m]]);
    }
    return out;
}

int cmd_meta_train(const std::string& data, const std::string& label_col,
                   const std::string& store_dir, const std::string& id, int max_evals,
                   std::uint64_t seed) {
    const lotus::Dataset ds = lotus::read_dataset_csv(data, nullptr, label_col);
    if (!ds.labels) throw std::runtime_error("meta-train needs a labeled dataset");
    lotus::SearchBudget budget;
    budget.max_evaluations = max_evals;
    budget.seed = seed;
    budget.validate();
    const lotus::SearchResult result = lotus::search(ds.features, *ds.labels, budget);
    const lotus::TransformConfig tcfg;
    lotus::add_entry(store_dir, ds, result.best, result.best_auc, id, tcfg);

    json out = lotus::search_result_to_json(result);
    json manifest = make_manifest(
        "meta-train", json{{"data", data}, {"label_col", label_col}, {"store", store_dir}});
    manifest["id"] = id;
    manifest["seed"] = seed;
    manifest["search_budget"] = json{{"max_evaluations", budget.max_evaluations}, {"seed", seed}};
    manifest["transform_config"] = transform_config_json(tcfg);
    out["manifest"] = manifest;
    print_json(out);
    return 0;
}

int cmd_distance(const std::string& a_path, const std::string& b_path, int rank, int max_rows,
                 std::uint64_t seed) {
    lotus::TransformConfig tcfg;
    tcfg.max_rows = max_rows;
    tcfg.seed = seed;
    tcfg.validate();
    lotus::SolverConfig scfg;
    scfg.rank = rank;
    scfg.validate();
    const lotus::Dataset da = lotus::read_dataset_csv(a_path);
    const lotus::Dataset db = lotus::read_dataset_csv(b_path);
    const lotus::DiscreteMeasure ma = lotus::phi(da, tcfg);
    const lotus::DiscreteMeasure mb = lotus::phi(db, tcfg);
    const lotus::GwResult r = lotus::gw_lowrank(ma, mb, scfg);

    json out{{"distance", r.cost},
             {"iterations", r.iterations},
             {"converged", r.converged},
             {"epsilon_used", r.epsilon_used}};
    json manifest = make_manifest("distance", json{{"a", a_path}, {"b", b_path}});
    manifest["seed"] = seed;
    manifest["transform_config"] = transform_config_json(tcfg);
    manifest["solver_config"] = solver_config_json(scfg);
    out["manifest"] = manifest;
    print_json(out);
    return 0;
}

int cmd_select(const std::string& data, const std::string& store_dir,
               const std::vector<std::string>& exclude) {
    const lotus::Dataset ds = lotus::read_dataset_csv(data);
    const lotus::MetaStore store = lotus::load_store(store_dir);
    const lotus::TransformConfig tcfg;
    const lotus::SolverConfig scfg;
    const lotus::SelectionReport report = lotus::lotus_select(ds, store, tcfg, scfg, exclude);

    json out = lotus::report_to_json(report);
    out["manifest"] = make_manifest("select", json{{"data", data}, {"store", store_dir}});
    print_json(out);
    return 0;
}

int cmd_evaluate(const std::string& store_dir, const std::string& out_path,
                 const std::string& baselines) {
    if (baselines != "defaults")
        throw std::runtime_error("unknown --baselines value: " + baselines);
    const lotus::MetaStore store = lotus::load_store(store_dir);
    std::vector<lotus::PipelineConfig> base;
    for (const lotus::DetectorKind kind : lotus::all_detectors())
        base.push_back(lotus::default_config(kind));
    const lotus::TransformConfig tcfg;
    const lotus::SolverConfig scfg;
    const lotus::ScoreTable table = lotus::loo_evaluate(store, tcfg, scfg, base);
    write_text_file(out_path, table.to_csv());

    json manifest = make_manifest("evaluate", json{{"store", store_dir}, {"out", out_path}});
    manifest["baselines"] = baselines;
    manifest["transform_config"] = transform_config_json(tcfg);
    manifest["solver_config"] = solver_config_json(scfg);
    write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_rope(const std::string& scores, const std::string& col_a, const std::string& col_b,
             double rope, int samples, std::uint64_t seed) {
    const lotus::ScoreTable table = lotus::ScoreTable::from_csv(read_text_file(scores));
    const std::vector<int> cols{table.method_index(col_a), table.method_index(col_b)};
    const FilteredColumns f = filter_complete(table, cols);
    const lotus::RopeResult r =
        lotus::rope_test(f.columns[0], f.columns[1], rope, samples, seed);

    json out{{"p_left", r.p_left},
             {"p_rope", r.p_rope},
             {"p_right", r.p_right},
             {"n_pairs", f.kept_datasets.size()},
             {"dropped", f.dropped}};
    json manifest = make_manifest("rope", json{{"scores", scores}});
    manifest["a"] = col_a;
    manifest["b"] = col_b;
    manifest["rope"] = rope;
    manifest["samples"] = samples;
    manifest["seed"] = seed;
    out["manifest"] = manifest;
    print_json(out);
    return 0;
}

int cmd_rank(const std::string& scores) {
    const lotus::ScoreTable table = lotus::ScoreTable::from_csv(read_text_file(scores));
    std::vector<int> all_cols(table.methods.size());
    for (size_t c = 0; c < table.methods.size(); ++c) all_cols[c] = static_cast<int>(c);
    const FilteredColumns f = filter_complete(table, all_cols);
    if (f.kept_datasets.empty())
        throw std::runtime_error("no dataset row has every method cell present");
    lotus::ScoreTable complete;
    complete.methods = table.methods;
    complete.datasets = f.kept_datasets;
    complete.cells.resize(f.kept_datasets.size());
    for (size_t r = 0; r < f.kept_datasets.size(); ++r)
        for (size_t c = 0; c < table.methods.size(); ++c)
            complete.cells[r].emplace_back(f.columns[c][r]);
    const std::map<std::string, double> ranks = lotus::average_rank(complete);

    json out{{"ranks", ranks}, {"dropped", f.dropped}};
    out["manifest"] = make_manifest("rank", json{{"scores", scores}});
    print_json(out);
    return 0;
}

int cmd_synth(const std::string& family, int n, int d, double contamination,
              std::uint64_t seed, const std::string& out_path) {
    const lotus::SynthFamily fam = lotus::synth_family_from_string(family);
    lotus::Dataset ds = lotus::generate_synthetic(fam, n, d, contamination, seed);
    ds.name = family;
    lotus::write_dataset_csv(out_path, ds);

    json manifest = make_manifest("synth", json{{"out", out_path}});
    manifest["family"] = family;
    manifest["n"] = n;
    manifest["d"] = d;
    manifest["contamination"] = contamination;
    manifest["seed"] = seed;
    write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot outlier-detector selection over dataset similarity"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = library default)")
        ->check(CLI::NonNegativeNumber);

    std::string data, label_col = "label", store_dir, id, a_path, b_path, out_path;
    std::string scores, col_a, col_b, family, baselines = "defaults";
    std::vector<std::string> exclude;
    int max_evals = 60, rank = 6, max_rows = 2000, samples = 50000, n = 0, d = 0;
    double rope = 0.01, contamination = 0.0;
    std::uint64_t seed = 0;

    CLI::App* train = app.add_subcommand("meta-train", "tune a pipeline and store the result");
    train->add_option("--data", data)->required();
    train->add_option("--label-col", label_col);
    train->add_option("--store", store_dir)->required();
    train->add_option("--id", id)->required();
    train->add_option("--max-evals", max_evals)->check(CLI::PositiveNumber);
    train->add_option("--seed", seed);

    CLI::App* dist = app.add_subcommand("distance", "low-rank GW distance between two datasets");
    dist->add_option("--a", a_path)->required();
    dist->add_option("--b", b_path)->required();
    dist->add_option("--rank", rank)->check(CLI::PositiveNumber);
    dist->add_option("--max-rows", max_rows)->check(CLI::PositiveNumber);
    dist->add_option("--seed", seed);

    CLI::App* sel = app.add_subcommand("select", "recommend a pipeline for a new dataset");
    sel->add_option("--data", data)->required();
    sel->add_option("--store", store_dir)->required();
    sel->add_option("--exclude", exclude);

    CLI::App* eval = app.add_subcommand("evaluate", "leave-one-out score table over the store");
    eval->add_option("--store", store_dir)->required();
    eval->add_option("--out", out_path)->required();
    eval->add_option("--baselines", baselines);

    CLI::App* rope_cmd = app.add_subcommand("rope", "Bayesian signed-rank comparison");
    rope_cmd->add_option("--scores", scores)->required();
    rope_cmd->add_option("--a", col_a)->required();
    rope_cmd->add_option("--b", col_b)->required();
    rope_cmd->add_option("--rope", rope)->check(CLI::NonNegativeNumber);
    rope_cmd->add_option("--samples", samples)->check(CLI::PositiveNumber);
    rope_cmd->add_option("--seed", seed);

    CLI::App* rank_cmd = app.add_subcommand("rank", "average rank per method");
    rank_cmd->add_option("--scores", scores)->required();

    CLI::App* synth = app.add_subcommand("synth", "write a labeled synthetic dataset");
    synth->add_option("--family", family)->required();
    synth->add_option("--n", n)->required()->check(CLI::PositiveNumber);
    synth->add_option("--d", d)->required()->check(CLI::PositiveNumber);
    synth->add_option("--contamination", contamination)->required();
    synth->add_option("--seed", seed);
    synth->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (train->parsed())
            return cmd_meta_train(data, label_col, store_dir, id, max_evals, seed);
        if (dist->parsed()) return cmd_distance(a_path, b_path, rank, max_rows, seed);
        if (sel->parsed()) return cmd_select(data, store_dir, exclude);
        if (eval->parsed()) return cmd_evaluate(store_dir, out_path, baselines);
        if (rope_cmd->parsed()) return cmd_rope(scores, col_a, col_b, rope, samples, seed);
        if (rank_cmd->parsed()) return cmd_rank(scores);
        if (synth->parsed()) return cmd_synth(family, n, d, contamination, seed, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no command\n";
    return 1;
}
