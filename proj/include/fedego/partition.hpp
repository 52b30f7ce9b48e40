#pragma once

#include "fedego/distribution.hpp"
#include "fedego/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fedego {

struct PartitionConfig {
    std::size_t num_clients = 5;
    double alpha_global = 0.3;
    double alpha_local = 0.3;
    std::size_t major_labels_per_client = 3;
    double major_node_rate = 0.8;
    std::size_t local_test_nodes = 300;
    double local_val_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate(std::size_t num_classes) const;
};

struct ClientDataset {
    std::size_t client_id = 0;
    std::vector<int> major_labels;
    std::vector<NodeId> train_nodes;
    std::vector<NodeId> val_nodes;
    std::vector<NodeId> test_nodes;
    DistributionVector distribution;

    /// train, val and test concatenated (the client's local node set).
    std::vector<NodeId> all_nodes() const;
};

struct Partition {
    PartitionConfig config;
    std::vector<NodeId> global_test;
    std::vector<ClientDataset> clients;
};

/// Label-skew split: a uniform global test sample first, then per client a
/// quota drawn mostly from its randomly chosen major labels and topped up
/// uniformly. Client node sets may overlap; nodes within one client do not.
Partition partition_non_iid(const Graph& graph, const PartitionConfig& config);

nlohmann::json to_json(const PartitionConfig& config);
PartitionConfig partition_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Partition& partition);
/// Rebuilds a partition (recomputing distributions from `graph`).
Partition partition_from_json(const nlohmann::json& j, const Graph& graph);

void write_partition(const Partition& partition, const std::filesystem::path& path);
Partition read_partition(const std::filesystem::path& path, const Graph& graph);

}  // namespace fedego
