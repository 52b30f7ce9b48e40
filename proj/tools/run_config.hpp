#pragma once

#include "fedego/federation.hpp"
#include "fedego/graph.hpp"
#include "fedego/partition.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace fedego::cli {

struct DatasetSource {
    std::filesystem::path nodes;
    std::filesystem::path edges;
    LoadOptions load;
    /// Used when no node/edge files are given.
    std::optional<SyntheticGraphConfig> synthetic;
};

/// Everything a command needs, parsed from one JSON document.
struct RunConfig {
    DatasetSource dataset;
    PartitionConfig partition;
    FedConfig federation;
};

/// Sections: "dataset" {nodes, edges, l1_normalize}, "synthetic" {preset,
/// num_nodes, ...}, "partition", "federation" (with nested "model" and
/// "ablation"). Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Effective configuration, echoed into every artifact.
nlohmann::json to_json(const RunConfig& config);

Graph build_graph(const DatasetSource& source);

}  // namespace fedego::cli
