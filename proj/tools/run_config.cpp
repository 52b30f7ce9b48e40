#include "run_config.hpp"

#include "fedego/errors.hpp"

#include <fstream>

namespace fedego::cli {

namespace {

SyntheticGraphConfig synthetic_from_json(const nlohmann::json& j) {
    SyntheticGraphConfig c;
    if (j.contains("preset")) {
        const auto preset = j.at("preset").get<std::string>();
        if (preset == "cora-like") c = cora_like_config();
        else if (preset != "small") throw ConfigError("unknown synthetic preset '" + preset + "'");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "preset") continue;
        if (key == "num_nodes") c.num_nodes = value.get<std::size_t>();
        else if (key == "num_classes") c.num_classes = value.get<std::size_t>();
        else if (key == "feature_dim") c.feature_dim = value.get<std::size_t>();
        else if (key == "intra_edge_prob") c.intra_edge_prob = value.get<double>();
        else if (key == "inter_edge_prob") c.inter_edge_prob = value.get<double>();
        else if (key == "centroid_scale") c.centroid_scale = value.get<double>();
        else if (key == "noise_stddev") c.noise_stddev = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw ConfigError("unknown synthetic key '" + key + "'");
    }
    return c;
}

nlohmann::json to_json(const SyntheticGraphConfig& c) {
    return {{"num_nodes", c.num_nodes},
            {"num_classes", c.num_classes},
            {"feature_dim", c.feature_dim},
            {"intra_edge_prob", c.intra_edge_prob},
            {"inter_edge_prob", c.inter_edge_prob},
            {"centroid_scale", c.centroid_scale},
            {"noise_stddev", c.noise_stddev},
            {"seed", c.seed}};
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    RunConfig config;
    try {
        for (const auto& [section, value] : doc.items()) {
            if (section == "dataset") {
                for (const auto& [key, v] : value.items()) {
                    if (key == "nodes") config.dataset.nodes = v.get<std::string>();
                    else if (key == "edges") config.dataset.edges = v.get<std::string>();
                    else if (key == "l1_normalize") config.dataset.load.l1_normalize = v.get<bool>();
                    else throw ConfigError("unknown dataset key '" + key + "'");
                }
            } else if (section == "synthetic") {
                config.dataset.synthetic = synthetic_from_json(value);
            } else if (section == "partition") {
                config.partition = partition_config_from_json(value);
            } else if (section == "federation") {
                config.federation = fed_config_from_json(value);
            } else {
                throw ConfigError("unknown config section '" + section + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const bool files = !config.dataset.nodes.empty() || !config.dataset.edges.empty();
    if (files && config.dataset.synthetic) throw ConfigError("give either dataset files or a synthetic section");
    if (files && (config.dataset.nodes.empty() || config.dataset.edges.empty())) {
        throw ConfigError("dataset needs both 'nodes' and 'edges'");
    }
    if (!files && !config.dataset.synthetic) throw ConfigError("config needs a dataset or synthetic section");
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open config");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    RunConfig config = parse_run_config(doc);
    // Relative dataset paths are taken relative to the config file.
    const auto base = path.parent_path();
    if (!config.dataset.nodes.empty() && config.dataset.nodes.is_relative()) {
        config.dataset.nodes = base / config.dataset.nodes;
    }
    if (!config.dataset.edges.empty() && config.dataset.edges.is_relative()) {
        config.dataset.edges = base / config.dataset.edges;
    }
    return config;
}

nlohmann::json to_json(const RunConfig& config) {
    nlohmann::json j;
    if (config.dataset.synthetic) {
        j["synthetic"] = to_json(*config.dataset.synthetic);
    } else {
        j["dataset"] = {{"nodes", config.dataset.nodes.string()},
                        {"edges", config.dataset.edges.string()},
                        {"l1_normalize", config.dataset.load.l1_normalize}};
    }
    j["partition"] = fedego::to_json(config.partition);
    j["federation"] = fedego::to_json(config.federation);
    return j;
}

Graph build_graph(const DatasetSource& source) {
    if (source.synthetic) return generate_synthetic_graph(*source.synthetic);
    return load_graph(source.nodes, source.edges, source.load);
}

}  // namespace fedego::cli
