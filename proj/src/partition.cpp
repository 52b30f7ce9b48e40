#include "fedego/partition.hpp"

#include "fedego/errors.hpp"
#include "fedego/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fedego {

namespace {

std::size_t floor_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::string join_labels(const std::vector<int>& labels) {
    std::string s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(labels[i]);
    }
    return s;
}

}  // namespace

void PartitionConfig::validate(std::size_t num_classes) const {
    if (num_clients == 0) throw ConfigError("partition: num_clients must be >= 1");
    if (!(alpha_global > 0.0 && alpha_global < 1.0)) throw ConfigError("partition: alpha_global must lie in (0,1)");
    if (!(alpha_local > 0.0 && alpha_local <= 1.0)) throw ConfigError("partition: alpha_local must lie in (0,1]");
    if (!(major_node_rate >= 0.0 && major_node_rate <= 1.0)) throw ConfigError("partition: major_node_rate must lie in [0,1]");
    if (!(local_val_fraction >= 0.0 && local_val_fraction < 1.0)) {
        throw ConfigError("partition: local_val_fraction must lie in [0,1)");
    }
    if (major_labels_per_client > num_classes) {
        throw ConfigError("partition: major_labels_per_client (" + std::to_string(major_labels_per_client) +
                          ") exceeds class count (" + std::to_string(num_classes) + ")");
    }
}

std::vector<NodeId> ClientDataset::all_nodes() const {
    std::vector<NodeId> all;
    all.reserve(train_nodes.size() + val_nodes.size() + test_nodes.size());
    all.insert(all.end(), train_nodes.begin(), train_nodes.end());
    all.insert(all.end(), val_nodes.begin(), val_nodes.end());
    all.insert(all.end(), test_nodes.begin(), test_nodes.end());
    return all;
}

Partition partition_non_iid(const Graph& graph, const PartitionConfig& config) {
    config.validate(graph.num_classes());
    Rng rng = make_stream(config.seed, StreamKind::partition);
    const auto n = graph.num_nodes();

    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Partition out;
    out.config = config;
    const auto n_global = floor_count(config.alpha_global, n);
    out.global_test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_global));
    std::vector<NodeId> remaining(order.begin() + static_cast<std::ptrdiff_t>(n_global), order.end());
    std::sort(out.global_test.begin(), out.global_test.end());
    std::sort(remaining.begin(), remaining.end());

    const auto quota = floor_count(config.alpha_local, remaining.size());
    if (quota <= config.local_test_nodes) {
        throw ConfigError("partition: client quota " + std::to_string(quota) +
                          " leaves no training nodes after " + std::to_string(config.local_test_nodes) +
                          " local test nodes");
    }
    const auto major_quota = floor_count(config.major_node_rate, quota);

    std::vector<int> all_labels(graph.num_classes());
    std::iota(all_labels.begin(), all_labels.end(), 0);

    for (std::size_t cid = 0; cid < config.num_clients; ++cid) {
        ClientDataset client;
        client.client_id = cid;

        std::shuffle(all_labels.begin(), all_labels.end(), rng);
        client.major_labels.assign(all_labels.begin(),
                                   all_labels.begin() + static_cast<std::ptrdiff_t>(config.major_labels_per_client));
        std::sort(client.major_labels.begin(), client.major_labels.end());

        std::vector<NodeId> pool;
        for (NodeId v : remaining) {
            if (std::binary_search(client.major_labels.begin(), client.major_labels.end(), graph.label(v))) {
                pool.push_back(v);
            }
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        auto taken_major = std::min(major_quota, pool.size());
        if (taken_major < major_quota) {
            spdlog::warn("partition: client {} major pool (labels {}) has {} nodes, quota {}; filling uniformly",
                         cid, join_labels(client.major_labels), pool.size(), major_quota);
        }
        std::vector<NodeId> selected(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(taken_major));
        std::sort(selected.begin(), selected.end());

        std::vector<NodeId> rest;
        for (NodeId v : remaining) {
            if (!std::binary_search(selected.begin(), selected.end(), v)) rest.push_back(v);
        }
        const auto need = quota - taken_major;
        if (rest.size() < need) {
            throw ConfigError("partition: client " + std::to_string(cid) + " (major labels " +
                              join_labels(client.major_labels) + ") needs " + std::to_string(need) +
                              " more nodes but only " + std::to_string(rest.size()) + " remain");
        }
        std::shuffle(rest.begin(), rest.end(), rng);
        selected.insert(selected.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need));

        std::shuffle(selected.begin(), selected.end(), rng);
        auto it = selected.begin();
        client.test_nodes.assign(it, it + static_cast<std::ptrdiff_t>(config.local_test_nodes));
        it += static_cast<std::ptrdiff_t>(config.local_test_nodes);
        const auto n_val = floor_count(config.local_val_fraction, static_cast<std::size_t>(selected.end() - it));
        client.val_nodes.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
        it += static_cast<std::ptrdiff_t>(n_val);
        client.train_nodes.assign(it, selected.end());
        if (client.train_nodes.empty()) {
            throw ConfigError("partition: client " + std::to_string(cid) + " has no training nodes");
        }
        std::vector<int> train_labels;
        for (NodeId v : client.train_nodes) train_labels.push_back(graph.label(v));
        client.distribution = DistributionVector::from_labels(train_labels, graph.num_classes());
        out.clients.push_back(std::move(client));
    }
    return out;
}

nlohmann::json to_json(const PartitionConfig& c) {
    return {{"num_clients", c.num_clients},
            {"alpha_global", c.alpha_global},
            {"alpha_local", c.alpha_local},
            {"major_labels_per_client", c.major_labels_per_client},
            {"major_node_rate", c.major_node_rate},
            {"local_test_nodes", c.local_test_nodes},
            {"local_val_fraction", c.local_val_fraction},
            {"seed", c.seed}};
}

PartitionConfig partition_config_from_json(const nlohmann::json& j) {
    PartitionConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "num_clients") c.num_clients = value.get<std::size_t>();
        else if (key == "alpha_global") c.alpha_global = value.get<double>();
        else if (key == "alpha_local") c.alpha_local = value.get<double>();
        else if (key == "major_labels_per_client") c.major_labels_per_client = value.get<std::size_t>();
        else if (key == "major_node_rate") c.major_node_rate = value.get<double>();
        else if (key == "local_test_nodes") c.local_test_nodes = value.get<std::size_t>();
        else if (key == "local_val_fraction") c.local_val_fraction = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw ConfigError("unknown partition key '" + key + "'");
    }
    return c;
}

nlohmann::json to_json(const Partition& p) {
    nlohmann::json clients = nlohmann::json::array();
    for (const auto& c : p.clients) {
        clients.push_back({{"client_id", c.client_id},
                           {"major_labels", c.major_labels},
                           {"train", c.train_nodes},
                           {"val", c.val_nodes},
                           {"test", c.test_nodes},
                           {"distribution", c.distribution.probs()}});
    }
    return {{"seed", p.config.seed},
            {"config", to_json(p.config)},
            {"global_test", p.global_test},
            {"clients", std::move(clients)}};
}

Partition partition_from_json(const nlohmann::json& j, const Graph& graph) {
    try {
        Partition p;
        p.config = partition_config_from_json(j.at("config"));
        p.global_test = j.at("global_test").get<std::vector<NodeId>>();
        for (const auto& jc : j.at("clients")) {
            ClientDataset c;
            c.client_id = jc.at("client_id").get<std::size_t>();
            c.major_labels = jc.at("major_labels").get<std::vector<int>>();
            c.train_nodes = jc.at("train").get<std::vector<NodeId>>();
            c.val_nodes = jc.at("val").get<std::vector<NodeId>>();
            c.test_nodes = jc.at("test").get<std::vector<NodeId>>();
            std::vector<int> labels;
            for (NodeId v : c.all_nodes()) {
                if (!graph.valid(v)) throw ConfigError("partition references node " + std::to_string(v) + " outside the graph");
            }
            for (NodeId v : c.train_nodes) labels.push_back(graph.label(v));
            c.distribution = DistributionVector::from_labels(labels, graph.num_classes());
            p.clients.push_back(std::move(c));
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed partition document: ") + e.what());
    }
}

void write_partition(const Partition& partition, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write partition file " + path.string());
    out << to_json(partition).dump(1) << '\n';
    if (!out) throw IoError("failed writing partition file " + path.string());
}

Partition read_partition(const std::filesystem::path& path, const Graph& graph) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open partition file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse partition file " + path.string() + ": " + e.what());
    }
    return partition_from_json(j, graph);
}

}  // namespace fedego
