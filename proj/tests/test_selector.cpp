#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lotus/csv.hpp"
#include "lotus/eval.hpp"
#include "lotus/meta_store.hpp"
#include "lotus/selector.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

using namespace lotus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("lotus_sel_" + tag + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

PipelineConfig tagged_config(int k) {
    PipelineConfig cfg;
    cfg.detector = DetectorKind::knn;
    cfg.params = {{"k", k}, {"method", "largest"}};
    return cfg;
}

// Small store: a tight blob and a much wider one, distinguishable through phi.
struct StoreFixture {
    TempDir tmp;
    TransformConfig tcfg;
    SolverConfig scfg;
    MetaStore store;

    explicit StoreFixture(const std::string& tag) : tmp(tag) {
        tcfg.max_rows = 100;
        scfg.rank = 4;
        scfg.max_outer_iter = 40;
        add_entry(tmp.path.string(),
                  generate_synthetic(SynthFamily::gauss_blob, 100, 3, 0.05, 11),
                  tagged_config(5), 0.9, "blob", tcfg);
        add_entry(tmp.path.string(),
                  generate_synthetic(SynthFamily::ring, 100, 3, 0.05, 12),
                  tagged_config(20), 0.8, "ring", tcfg);
        store = load_store(tmp.path.string());
    }
};

}  // namespace

TEST_CASE("selection recommends the stored twin of the query") {
    StoreFixture fx("twin");
    const Dataset query = read_dataset_csv(
        (fx.tmp.path / "datasets" / "blob.csv").string());

    const SelectionReport report = lotus_select(query, fx.store, fx.tcfg, fx.scfg);
    CHECK(report.chosen_id == "blob");
    CHECK(report.pipeline.params.at("k") == 5);
    REQUIRE(report.distances.size() == 2);
    CHECK(report.failures.empty());
    CHECK(report.distances.at("blob") <= report.distances.at("ring"));
    for (const auto& [id, dist] : report.distances) {
        CHECK(std::isfinite(dist));
        CHECK(dist >= 0.0);
        CHECK(dist >= report.distances.at(report.chosen_id));
    }
}

TEST_CASE("selection is deterministic and label-blind") {
    StoreFixture fx("det");
    Dataset query = generate_synthetic(SynthFamily::gauss_blob, 90, 3, 0.05, 33);

    const SelectionReport r1 = lotus_select(query, fx.store, fx.tcfg, fx.scfg);
    (*query.labels)[0] ^= 1;
    (*query.labels)[1] ^= 1;
    const SelectionReport r2 = lotus_select(query, fx.store, fx.tcfg, fx.scfg);
    CHECK(r1.chosen_id == r2.chosen_id);
    REQUIRE(r1.distances.size() == r2.distances.size());
    for (const auto& [id, dist] : r1.distances) CHECK(r2.distances.at(id) == dist);
}

TEST_CASE("exclusion removes entries from consideration") {
    StoreFixture fx("excl");
    const Dataset query = read_dataset_csv(
        (fx.tmp.path / "datasets" / "blob.csv").string());

    const SelectionReport report =
        lotus_select(query, fx.store, fx.tcfg, fx.scfg, {"blob"});
    CHECK(report.chosen_id == "ring");
    CHECK(report.distances.count("blob") == 0);
    CHECK(report.excluded == std::vector<std::string>{"blob"});

    CHECK_THROWS_WITH_AS(
        lotus_select(query, fx.store, fx.tcfg, fx.scfg, {"blob", "ring"}),
        "empty effective store", std::runtime_error);
}

TEST_CASE("fingerprint mismatches surface as failures, not distances") {
    StoreFixture fx("fp");
    const Dataset query = generate_synthetic(SynthFamily::gauss_blob, 80, 3, 0.05, 44);

    TransformConfig other = fx.tcfg;
    other.seed = 999;
    CHECK_THROWS(lotus_select(query, fx.store, other, fx.scfg));  // every entry mismatches

    // one entry stored under the other fingerprint still lets selection proceed
    add_entry(fx.tmp.path.string(),
              generate_synthetic(SynthFamily::two_clusters, 100, 3, 0.05, 13),
              tagged_config(10), 0.7, "stale", other);
    const MetaStore mixed = load_store(fx.tmp.path.string());
    const SelectionReport report = lotus_select(query, mixed, fx.tcfg, fx.scfg);
    CHECK(report.distances.count("stale") == 0);
    REQUIRE(report.failures.count("stale") == 1);
    CHECK(report.failures.at("stale").find("fingerprint") != std::string::npos);
    CHECK((report.chosen_id == "blob" || report.chosen_id == "ring"));
}

TEST_CASE("broken store entries are reported and skipped") {
    StoreFixture fx("broken");
    fs::remove(fx.tmp.path / "datasets" / "ring.csv");  // break after load
    const Dataset query = generate_synthetic(SynthFamily::gauss_blob, 80, 3, 0.05, 55);

    const SelectionReport report = lotus_select(query, fx.store, fx.tcfg, fx.scfg);
    CHECK(report.chosen_id == "blob");
    CHECK(report.failures.count("ring") == 1);
    CHECK(report.distances.count("ring") == 0);

    fs::remove(fx.tmp.path / "datasets" / "blob.csv");
    CHECK_THROWS(lotus_select(query, fx.store, fx.tcfg, fx.scfg));
}

TEST_CASE("selection reports serialize with every section") {
    StoreFixture fx("json");
    const Dataset query = generate_synthetic(SynthFamily::ring, 90, 3, 0.05, 66);
    const SelectionReport report = lotus_select(query, fx.store, fx.tcfg, fx.scfg);
    const nlohmann::json j = report_to_json(report);
    CHECK(j.at("chosen_id").get<std::string>() == report.chosen_id);
    CHECK(j.at("distances").size() == report.distances.size());
    CHECK(j.at("failures").size() == report.failures.size());
    CHECK(j.at("transform_config").at("max_rows").get<int>() == fx.tcfg.max_rows);
    CHECK(j.at("solver_config").at("rank").get<int>() == fx.scfg.rank);
    CHECK_NOTHROW(pipeline_from_json(j.at("pipeline")));
    // identical runs serialize identically
    const nlohmann::json j2 = report_to_json(lotus_select(query, fx.store, fx.tcfg, fx.scfg));
    CHECK(j.dump() == j2.dump());
}
