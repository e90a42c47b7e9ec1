#pragma once

#include "lotus/detectors.hpp"
#include "lotus/types.hpp"

#include <string>
#include <vector>

namespace lotus {

// One meta-trained dataset: where its data and tuned pipeline live on disk,
// and the transform fingerprint its distances are comparable under.
struct MetaEntry {
    std::string id;
    std::string dataset_path;   // relative to the store directory
    std::string pipeline_path;  // relative to the store directory
    PipelineConfig pipeline;
    double meta_auc = 0.0;
    std::string created_at;  // ISO-8601 UTC
    std::string transform_fingerprint;
};

struct MetaStore {
    std::string dir;
    std::vector<MetaEntry> entries;
};

// FNV-1a 64 over the canonical config serialization, as a hex string. Two
// stores are distance-comparable only when their fingerprints match.
std::string transform_fingerprint(const TransformConfig& cfg);

// Writes datasets/<id>.csv and pipelines/<id>.json, then replaces index.json
// via write-temp-then-rename, so a crash never leaves the index referencing
// missing files. The id must be new.
MetaEntry add_entry(const std::string& store_dir, const Dataset& dataset,
                    const PipelineConfig& pipeline, double meta_auc, const std::string& id,
                    const TransformConfig& tcfg);

// Parses index.json and every referenced pipeline; all per-entry problems are
// collected into one error.
MetaStore load_store(const std::string& store_dir);

const MetaEntry& get_entry(const MetaStore& store, const std::string& id);
const PipelineConfig& get_pipeline(const MetaStore& store, const std::string& id);

}  // namespace lotus
