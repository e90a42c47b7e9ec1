#include "lotus/meta_store.hpp"

#include "lotus/csv.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lotus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a64_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_atomic(const fs::path& target, const std::string& text) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

json index_to_json(const MetaStore& store) {
    json entries = json::array();
    for (const MetaEntry& e : store.entries)
        entries.push_back({{"id", e.id},
                           {"dataset_path", e.dataset_path},
                           {"pipeline_path", e.pipeline_path},
                           {"meta_auc", e.meta_auc},
                           {"created_at", e.created_at},
                           {"transform_fingerprint", e.transform_fingerprint}});
    return json{{"version", 1}, {"entries", entries}};
}

}  // namespace

std::string transform_fingerprint(const TransformConfig& cfg) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max_rows=%d;ica_max_iter=%d;ica_tol=%.17g;seed=%llu",
                  cfg.max_rows, cfg.ica_max_iter, cfg.ica_tol,
                  static_cast<unsigned long long>(cfg.seed));
    return fnv1a64_hex(buf);
}

MetaEntry add_entry(const std::string& store_dir, const Dataset& dataset,
                    const PipelineConfig& pipeline, double meta_auc, const std::string& id,
                    const TransformConfig& tcfg) {
    if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos)
        throw std::invalid_argument("id must be a nonempty filesystem-safe name: '" + id + "'");
    if (meta_auc < 0.0 || meta_auc > 1.0)
        throw std::invalid_argument("meta_auc must lie in [0, 1]");
    validate_config(pipeline);

    MetaStore store;
    store.dir = store_dir;
    if (fs::exists(fs::path(store_dir) / "index.json")) store = load_store(store_dir);
    for (const MetaEntry& e : store.entries)
        if (e.id == id) throw std::runtime_error("duplicate store id: " + id);

    fs::create_directories(fs::path(store_dir) / "datasets");
    fs::create_directories(fs::path(store_dir) / "pipelines");

    MetaEntry entry;
    entry.id = id;
    entry.dataset_path = "datasets/" + id + ".csv";
    entry.pipeline_path = "pipelines/" + id + ".json";
    entry.pipeline = pipeline;
    entry.meta_auc = meta_auc;
    entry.created_at = iso_utc_now();
    entry.transform_fingerprint = transform_fingerprint(tcfg);

    // data files land before the index references them
    write_dataset_csv((fs::path(store_dir) / entry.dataset_path).string(), dataset);
    write_text_atomic(fs::path(store_dir) / entry.pipeline_path,
                      pipeline_to_json(pipeline).dump(2) + "\n");
    store.entries.push_back(entry);
    write_text_atomic(fs::path(store_dir) / "index.json", index_to_json(store).dump(2) + "\n");
    return entry;
}

MetaStore load_store(const std::string& store_dir) {
    const fs::path index_path = fs::path(store_dir) / "index.json";
    std::ifstream in(index_path);
    if (!in) throw std::runtime_error("no store index at " + index_path.string());
    json idx;
    try {
        in >> idx;
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt store index " + index_path.string() + ": " + e.what());
    }
    if (!idx.is_object() || idx.value("version", 0) != 1)
        throw std::runtime_error("unsupported store index version in " + index_path.string());

    MetaStore store;
    store.dir = store_dir;
    std::string problems;
    for (const json& j : idx.value("entries", json::array())) {
        MetaEntry e;
        try {
            e.id = j.at("id").get<std::string>();
            e.dataset_path = j.at("dataset_path").get<std::string>();
            e.pipeline_path = j.at("pipeline_path").get<std::string>();
            e.meta_auc = j.at("meta_auc").get<double>();
            e.created_at = j.at("created_at").get<std::string>();
            e.transform_fingerprint = j.at("transform_fingerprint").get<std::string>();
        } catch (const json::exception& ex) {
            problems += "\n  malformed entry: " + std::string(ex.what());
            continue;
        }
        for (const MetaEntry& seen : store.entries)
            if (seen.id == e.id) problems += "\n  " + e.id + ": duplicate id";
        if (e.meta_auc < 0.0 || e.meta_auc > 1.0)
            problems += "\n  " + e.id + ": meta_auc outside [0, 1]";
        if (!fs::exists(fs::path(store_dir) / e.dataset_path))
            problems += "\n  " + e.id + ": missing dataset file " + e.dataset_path;
        const fs::path pip = fs::path(store_dir) / e.pipeline_path;
        if (!fs::exists(pip)) {
            problems += "\n  " + e.id + ": missing pipeline file " + e.pipeline_path;
        } else {
            try {
                std::ifstream pin(pip);
                json pj;
                pin >> pj;
                e.pipeline = pipeline_from_json(pj);
            } catch (const std::exception& ex) {
                problems += "\n  " + e.id + ": bad pipeline: " + ex.what();
            }
        }
        store.entries.push_back(std::move(e));
    }
    if (!problems.empty())
        throw std::runtime_error("store " + store_dir + " failed validation:" + problems);
    return store;
}

const MetaEntry& get_entry(const MetaStore& store, const std::string& id) {
    for (const MetaEntry& e : store.entries)
        if (e.id == id) return e;
    throw std::runtime_error("unknown store id: " + id);
}

const PipelineConfig& get_pipeline(const MetaStore& store, const std::string& id) {
    return get_entry(store, id).pipeline;
}

}  // namespace lotus
