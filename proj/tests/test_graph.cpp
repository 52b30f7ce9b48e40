#include "fixtures.hpp"

#include "fedego/distribution.hpp"
#include "fedego/errors.hpp"
#include "fedego/partition.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace fedego;
using fedego::testing::TempDir;
using fedego::testing::write_file;

TEST_CASE("load_graph builds a symmetric deduplicated adjacency") {
    TempDir dir("load");
    write_file(dir / "nodes.tsv", "10\t0\t1 0\n20\t0\t0 1\n30\t1\t1 1\n");
    write_file(dir / "edges.txt", "# comment\n10 20\n20 10\n\n");
    const Graph g = load_graph(dir / "nodes.tsv", dir / "edges.txt");
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_classes() == 2);
    CHECK(g.feature_dim() == 2);
    CHECK(g.num_edges() == 1);
    REQUIRE(g.neighbors(0).size() == 1);
    CHECK(g.neighbors(0)[0] == 1);
    CHECK(g.neighbors(1)[0] == 0);
    CHECK(g.neighbors(2).empty());
    CHECK(g.features()(2, 0) == 1.0);
}

TEST_CASE("load_graph optional L1 row normalization") {
    TempDir dir("l1");
    write_file(dir / "nodes.tsv", "0\t0\t1 3\n1\t1\t0 0\n");
    write_file(dir / "edges.txt", "");
    const Graph g = load_graph(dir / "nodes.tsv", dir / "edges.txt", {.l1_normalize = true});
    CHECK(g.features()(0, 0) == doctest::Approx(0.25));
    CHECK(g.features()(0, 1) == doctest::Approx(0.75));
    CHECK(g.features()(1, 0) == 0.0);
}

TEST_CASE("load_graph reports malformed input with line numbers") {
    TempDir dir("bad");
    write_file(dir / "edges.txt", "0 1\n");

    write_file(dir / "nodes.tsv", "0\t0\t1 2\n1\tx\t1 2\n");
    try {
        (void)load_graph(dir / "nodes.tsv", dir / "edges.txt");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }

    write_file(dir / "nodes.tsv", "0\t0\t1 2\n1\t0\t1\n");
    CHECK_THROWS_AS((void)load_graph(dir / "nodes.tsv", dir / "edges.txt"), ParseError);

    write_file(dir / "nodes.tsv", "0\t0\t1 2\n1\t0\t1 2\n");
    write_file(dir / "edges.txt", "0 1\n0 7\n");
    try {
        (void)load_graph(dir / "nodes.tsv", dir / "edges.txt");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }

    CHECK_THROWS_AS((void)load_graph(dir / "missing.tsv", dir / "edges.txt"), IoError);
}

TEST_CASE("graph tolerates self-loops and duplicate edges") {
    Matrix f = Matrix::Zero(3, 1);
    std::vector<Edge> edges = {{0, 0}, {0, 1}, {1, 0}, {0, 1}, {2, 1}};
    const Graph g(f, {0, 1, 1}, 2, edges);
    CHECK(g.num_edges() == 2);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 2);
    CHECK(g.has_edge(1, 2));
    CHECK_FALSE(g.has_edge(0, 0));
    CHECK_THROWS_AS(Graph(f, {0, 2, 1}, 2, {}), Error);
}

TEST_CASE("synthetic graph degenerate probabilities") {
    SyntheticGraphConfig c;
    c.num_nodes = 10;
    c.num_classes = 2;
    c.intra_edge_prob = 1.0;
    c.inter_edge_prob = 0.0;
    const Graph full = generate_synthetic_graph(c);
    for (NodeId u = 0; u < 10; ++u) {
        for (NodeId v = 0; v < 10; ++v) {
            if (u == v) continue;
            CHECK(full.has_edge(u, v) == (full.label(u) == full.label(v)));
        }
    }
    c.intra_edge_prob = 0.0;
    CHECK(generate_synthetic_graph(c).num_edges() == 0);

    c.num_classes = 11;
    CHECK_THROWS_AS(generate_synthetic_graph(c), ConfigError);
}

TEST_CASE("synthetic graph is deterministic per seed") {
    SyntheticGraphConfig c;
    c.num_nodes = 200;
    c.num_classes = 4;
    c.intra_edge_prob = 0.1;
    c.inter_edge_prob = 0.01;
    c.seed = 7;
    const Graph a = generate_synthetic_graph(c);
    const Graph b = generate_synthetic_graph(c);
    REQUIRE(a.num_edges() == b.num_edges());
    for (NodeId v = 0; v < 200; ++v) {
        const auto na = a.neighbors(v);
        const auto nb = b.neighbors(v);
        CHECK(std::equal(na.begin(), na.end(), nb.begin(), nb.end()));
        CHECK(std::is_sorted(na.begin(), na.end()));
    }
    CHECK(a.features() == b.features());
}

TEST_CASE("cora-like preset matches the citation graph's scale") {
    const Graph g = generate_synthetic_graph(cora_like_config());
    CHECK(g.num_nodes() == 2708);
    CHECK(g.num_classes() == 7);
    const double mean_degree = 2.0 * static_cast<double>(g.num_edges()) / 2708.0;
    CHECK(mean_degree > 3.0);
    CHECK(mean_degree < 5.0);
}

TEST_CASE("distribution_vector examples") {
    const auto p = DistributionVector::from_labels(std::vector<int>{0, 0, 1}, 2);
    CHECK(p[0] == doctest::Approx(2.0 / 3.0));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0));

    Matrix soft(2, 2);
    soft << 0.5, 0.5, 0.5, 0.5;
    const auto q = distribution_vector(soft);
    CHECK(q[0] == 0.5);
    CHECK(q[1] == 0.5);

    CHECK_THROWS(distribution_vector(Matrix(0, 3)));
    CHECK_THROWS(DistributionVector({0.5, 0.6}));
    CHECK_THROWS(DistributionVector({1.5, -0.5}));
}

TEST_CASE("distribution_vector is permutation invariant and sums to one") {
    std::mt19937_64 rng(11);
    Matrix rows = Matrix::Zero(50, 4);
    for (Eigen::Index i = 0; i < 50; ++i) rows(i, static_cast<Eigen::Index>(rng() % 4)) = 1.0;
    const auto a = distribution_vector(rows);
    Matrix shuffled = rows.colwise().reverse();
    const auto b = distribution_vector(shuffled);
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
        CHECK(a[c] >= 0.0);
        sum += a[c];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("earth mover's distance is the L1 gap") {
    const DistributionVector a({1.0, 0.0, 0.0});
    const DistributionVector b({0.0, 1.0, 0.0});
    CHECK(earth_movers_distance(a, a) == 0.0);
    CHECK(earth_movers_distance(a, b) == doctest::Approx(2.0));
    CHECK(earth_movers_distance(a, DistributionVector({0.5, 0.25, 0.25})) == doctest::Approx(1.0));
}

namespace {

Graph partition_graph() {
    SyntheticGraphConfig c = cora_like_config(5);
    return generate_synthetic_graph(c);
}

}  // namespace

TEST_CASE("partition sizes, disjointness and determinism") {
    const Graph g = partition_graph();
    PartitionConfig cfg;
    cfg.seed = 9;
    const Partition p = partition_non_iid(g, cfg);
    CHECK(p.global_test.size() == 812);
    REQUIRE(p.clients.size() == 5);

    const std::set<NodeId> global(p.global_test.begin(), p.global_test.end());
    CHECK(global.size() == p.global_test.size());
    for (const auto& c : p.clients) {
        std::set<NodeId> seen;
        for (const auto* part : {&c.train_nodes, &c.val_nodes, &c.test_nodes}) {
            for (NodeId v : *part) {
                CHECK(g.valid(v));
                CHECK(global.count(v) == 0);
                CHECK(seen.insert(v).second);
            }
        }
        CHECK(c.test_nodes.size() == 300);
        const std::size_t quota = (2708 - 812) * 3 / 10;
        CHECK(seen.size() == quota);
        CHECK(c.val_nodes.size() == (quota - 300) / 5);
        CHECK(c.major_labels.size() == 3);
    }

    const Partition again = partition_non_iid(g, cfg);
    CHECK(to_json(p) == to_json(again));
}

TEST_CASE("major node rate is honored by label counts") {
    const Graph g = partition_graph();
    PartitionConfig cfg;
    cfg.seed = 4;
    const Partition p = partition_non_iid(g, cfg);
    for (const auto& c : p.clients) {
        const auto nodes = c.all_nodes();
        std::size_t major = 0;
        for (NodeId v : nodes) {
            major += std::find(c.major_labels.begin(), c.major_labels.end(), g.label(v)) != c.major_labels.end();
        }
        CHECK(static_cast<double>(major) / static_cast<double>(nodes.size()) >= 0.8 - 1e-9);
    }
}

TEST_CASE("major node rate zero gives near-global histograms") {
    const Graph g = partition_graph();
    PartitionConfig cfg;
    cfg.major_node_rate = 0.0;
    cfg.seed = 13;
    const Partition p = partition_non_iid(g, cfg);
    const std::size_t classes = g.num_classes();
    std::vector<double> global(classes, 0.0);
    for (int label : g.labels()) global[static_cast<std::size_t>(label)] += 1.0 / static_cast<double>(g.num_nodes());
    for (const auto& c : p.clients) {
        const auto nodes = c.all_nodes();
        std::vector<double> observed(classes, 0.0);
        for (NodeId v : nodes) observed[static_cast<std::size_t>(g.label(v))] += 1.0;
        double chi2 = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            const double expected = global[k] * static_cast<double>(nodes.size());
            chi2 += (observed[k] - expected) * (observed[k] - expected) / expected;
        }
        // 6 degrees of freedom; 22.46 is the 0.999 quantile.
        CHECK(chi2 < 22.46);
    }
}

TEST_CASE("partition rejects infeasible quotas and bad configs") {
    const Graph g = fedego::testing::small_graph();
    PartitionConfig cfg;
    CHECK_THROWS_AS(partition_non_iid(g, cfg), ConfigError);
    cfg.local_test_nodes = 2;
    cfg.major_labels_per_client = 4;
    CHECK_THROWS_AS(partition_non_iid(g, cfg), ConfigError);
    cfg.major_labels_per_client = 2;
    cfg.alpha_global = 1.5;
    CHECK_THROWS_AS(partition_non_iid(g, cfg), ConfigError);
}

TEST_CASE("partition JSON round-trips through disk") {
    const Graph g = partition_graph();
    PartitionConfig cfg;
    cfg.seed = 21;
    const Partition p = partition_non_iid(g, cfg);
    TempDir dir("partition");
    write_partition(p, dir / "partition.json");
    const Partition q = read_partition(dir / "partition.json", g);
    CHECK(to_json(p) == to_json(q));
    CHECK(q.global_test == p.global_test);
    CHECK(q.clients[2].train_nodes == p.clients[2].train_nodes);

    nlohmann::json j = to_json(cfg);
    j["bogus"] = 1;
    CHECK_THROWS_AS(partition_config_from_json(j), ConfigError);
}
