#include "fedego/graph.hpp"

#include "fedego/errors.hpp"
#include "fedego/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>

namespace fedego {

Graph::Graph(Matrix features, std::vector<int> labels, std::size_t num_classes,
             std::span<const Edge> edges)
    : features_(std::move(features)), labels_(std::move(labels)), num_classes_(num_classes) {
    const auto n = labels_.size();
    if (static_cast<std::size_t>(features_.rows()) != n) {
        throw ShapeError("feature rows (" + std::to_string(features_.rows()) +
                         ") != label count (" + std::to_string(n) + ")");
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (labels_[v] < 0 || static_cast<std::size_t>(labels_[v]) >= num_classes_) {
            throw ConfigError("label " + std::to_string(labels_[v]) + " of node " +
                              std::to_string(v) + " outside [0, " + std::to_string(num_classes_) + ")");
        }
    }

    std::vector<std::vector<NodeId>> lists(n);
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
            throw ConfigError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") references an unknown node");
        }
        if (u == v) continue;
        lists[static_cast<std::size_t>(u)].push_back(v);
        lists[static_cast<std::size_t>(v)].push_back(u);
    }
    offsets_.assign(n + 1, 0);
    adjacency_.clear();
    for (std::size_t v = 0; v < n; ++v) {
        auto& l = lists[v];
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        adjacency_.insert(adjacency_.end(), l.begin(), l.end());
        offsets_[v + 1] = adjacency_.size();
    }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

Graph Graph::induced_subgraph(std::span<const NodeId> nodes) const {
    std::unordered_map<NodeId, NodeId> local;
    local.reserve(nodes.size());
    Matrix feats(static_cast<Eigen::Index>(nodes.size()), features_.cols());
    std::vector<int> labels(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!valid(nodes[i])) throw ConfigError("induced_subgraph: invalid node " + std::to_string(nodes[i]));
        if (!local.emplace(nodes[i], static_cast<NodeId>(i)).second) {
            throw ConfigError("induced_subgraph: duplicate node " + std::to_string(nodes[i]));
        }
        feats.row(static_cast<Eigen::Index>(i)) = features_.row(nodes[i]);
        labels[i] = labels_[static_cast<std::size_t>(nodes[i])];
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (NodeId w : neighbors(nodes[i])) {
            auto it = local.find(w);
            if (it != local.end() && static_cast<NodeId>(i) < it->second) {
                edges.emplace_back(static_cast<NodeId>(i), it->second);
            }
        }
    }
    return Graph(std::move(feats), std::move(labels), num_classes_, edges);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view token, T& out) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

Graph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                 const LoadOptions& options) {
    std::ifstream nodes_in(nodes_path);
    if (!nodes_in) throw IoError("cannot open node file " + nodes_path.string());

    std::unordered_map<std::int64_t, NodeId> index;
    std::vector<int> labels;
    std::vector<std::vector<double>> rows;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    const auto npath = nodes_path.string();
    while (std::getline(nodes_in, line)) {
        ++line_no;
        auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        auto tab1 = text.find('\t');
        auto tab2 = tab1 == std::string_view::npos ? tab1 : text.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos) throw ParseError(npath, line_no, "expected id<TAB>label<TAB>features");
        std::int64_t id = 0;
        int label = 0;
        if (!parse_number(trim(text.substr(0, tab1)), id) || id < 0) {
            throw ParseError(npath, line_no, "invalid node id");
        }
        if (!parse_number(trim(text.substr(tab1 + 1, tab2 - tab1 - 1)), label) || label < 0) {
            throw ParseError(npath, line_no, "invalid label");
        }
        std::vector<double> feats;
        for (auto tok : split_ws(text.substr(tab2 + 1))) {
            double x = 0.0;
            if (!parse_number(tok, x)) throw ParseError(npath, line_no, "invalid feature value '" + std::string(tok) + "'");
            feats.push_back(x);
        }
        if (rows.empty()) {
            dim = feats.size();
        } else if (feats.size() != dim) {
            throw ParseError(npath, line_no, "feature dimension " + std::to_string(feats.size()) +
                                                 " differs from " + std::to_string(dim));
        }
        if (!index.emplace(id, static_cast<NodeId>(labels.size())).second) {
            throw ParseError(npath, line_no, "duplicate node id " + std::to_string(id));
        }
        labels.push_back(label);
        rows.push_back(std::move(feats));
    }
    if (labels.empty()) throw IoError("node file " + npath + " contains no nodes");

    std::ifstream edges_in(edges_path);
    if (!edges_in) throw IoError("cannot open edge file " + edges_path.string());
    const auto epath = edges_path.string();
    std::vector<Edge> edges;
    line_no = 0;
    while (std::getline(edges_in, line)) {
        ++line_no;
        auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        auto toks = split_ws(text);
        std::int64_t a = 0;
        std::int64_t b = 0;
        if (toks.size() != 2 || !parse_number(toks[0], a) || !parse_number(toks[1], b)) {
            throw ParseError(epath, line_no, "expected 'src dst'");
        }
        auto ia = index.find(a);
        auto ib = index.find(b);
        if (ia == index.end() || ib == index.end()) {
            throw ParseError(epath, line_no, "edge references unknown node id " +
                                                 std::to_string(ia == index.end() ? a : b));
        }
        edges.emplace_back(ia->second, ib->second);
    }

    Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    if (options.l1_normalize) {
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
            double s = features.row(i).cwiseAbs().sum();
            if (s > 0.0) features.row(i) /= s;
        }
    }
    int max_label = *std::max_element(labels.begin(), labels.end());
    return Graph(std::move(features), std::move(labels), static_cast<std::size_t>(max_label) + 1, edges);
}

Graph generate_synthetic_graph(const SyntheticGraphConfig& config) {
    const auto n = config.num_nodes;
    const auto c = config.num_classes;
    if (c == 0 || c > n) throw ConfigError("synthetic graph needs 1 <= num_classes <= num_nodes");
    if (!(0.0 <= config.inter_edge_prob && config.inter_edge_prob <= config.intra_edge_prob &&
          config.intra_edge_prob <= 1.0)) {
        throw ConfigError("synthetic graph needs 0 <= inter_edge_prob <= intra_edge_prob <= 1");
    }
    Rng rng = make_stream(config.seed, StreamKind::synthetic_graph);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(config.feature_dim);

    Matrix centroids(static_cast<Eigen::Index>(c), d);
    for (Eigen::Index i = 0; i < centroids.size(); ++i) centroids.data()[i] = config.centroid_scale * gauss(rng);

    std::vector<int> labels(n);
    Matrix features(static_cast<Eigen::Index>(n), d);
    for (std::size_t v = 0; v < n; ++v) {
        labels[v] = static_cast<int>(v % c);
        for (Eigen::Index j = 0; j < d; ++j) {
            features(static_cast<Eigen::Index>(v), j) = centroids(labels[v], j) + config.noise_stddev * gauss(rng);
        }
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            double p = labels[u] == labels[v] ? config.intra_edge_prob : config.inter_edge_prob;
            if (unit(rng) < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    return Graph(std::move(features), std::move(labels), c, edges);
}

SyntheticGraphConfig cora_like_config(std::uint64_t seed) {
    SyntheticGraphConfig c;
    c.num_nodes = 2708;
    c.num_classes = 7;
    c.feature_dim = 64;
    c.intra_edge_prob = 0.0083;
    c.inter_edge_prob = 0.00034;
    c.centroid_scale = 0.42;
    c.noise_stddev = 1.0;
    c.seed = seed;
    return c;
}

}  // namespace fedego
