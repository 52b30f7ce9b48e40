#include "fixtures.hpp"

#include "fedego/errors.hpp"
#include "fedego/federation.hpp"
#include "fedego/param_ops.hpp"

#include <doctest.h>

#include <cmath>

using namespace fedego;
using fedego::testing::bit_identical;

namespace {

struct Setup {
    Graph graph;
    Partition partition;
    FedConfig config;
};

Setup small_setup(Strategy strategy = Strategy::fedego, std::size_t clients = 3) {
    SyntheticGraphConfig g;
    g.num_nodes = 400;
    g.num_classes = 4;
    g.feature_dim = 6;
    g.intra_edge_prob = 0.03;
    g.inter_edge_prob = 0.004;
    g.seed = 12;
    Setup s{generate_synthetic_graph(g), {}, {}};
    PartitionConfig p;
    p.num_clients = clients;
    p.major_labels_per_client = 2;
    p.local_test_nodes = 20;
    p.seed = 3;
    s.partition = partition_non_iid(s.graph, p);
    s.config.strategy = strategy;
    s.config.rounds = 2;
    s.config.local_epochs = 2;
    s.config.server_epochs = 2;
    s.config.batches_per_epoch = 3;
    s.config.batch_size = 8;
    s.config.hops = 2;
    s.config.fanout = 3;
    s.config.model.reduction_dim = 5;
    s.config.model.hidden_dim = 6;
    s.config.seed = 1;
    return s;
}

ModelParams initial_model(const Setup& s) {
    Rng rng = make_stream(s.config.seed, StreamKind::model_init);
    return init_model(s.graph.feature_dim(), s.config.hops, s.graph.num_classes(), s.config.model, rng);
}

std::vector<ClientState> make_clients(const Setup& s, const ModelParams& init) {
    std::vector<ClientState> clients;
    for (const auto& d : s.partition.clients) clients.push_back(make_client(s.graph, d, init, s.config));
    return clients;
}

}  // namespace

TEST_CASE("adaptive lambda examples") {
    const DistributionVector a({0.5, 0.5, 0.0});
    CHECK(adaptive_lambda(a, a, 0.25) == 0.0);
    const DistributionVector x({1.0, 0.0, 0.0});
    const DistributionVector y({0.0, 1.0, 0.0});
    for (double gamma : {0.1, 0.5, 1.0, 3.0}) CHECK(adaptive_lambda(x, y, gamma) == doctest::Approx(1.0));
    // EMD = 0.5.
    const DistributionVector p({0.75, 0.25, 0.0});
    const DistributionVector q({0.5, 0.5, 0.0});
    CHECK(adaptive_lambda(p, q, 0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(adaptive_lambda(p, q, 0.0), ConfigError);
}

TEST_CASE("adaptive lambda monotonicity on a grid") {
    const DistributionVector g({0.5, 0.5});
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double shift = 0.5 * i / 100.0;
        const DistributionVector l({0.5 + shift, 0.5 - shift});
        const double lambda = adaptive_lambda(l, g, 0.5);
        CHECK(lambda >= 0.0);
        CHECK(lambda <= 1.0);
        CHECK(lambda >= prev);
        prev = lambda;
    }
    const DistributionVector l({0.8, 0.2});
    double last = 2.0;
    for (int i = 1; i <= 100; ++i) {
        const double lambda = adaptive_lambda(l, g, 0.05 * i);
        CHECK(lambda <= last);
        last = lambda;
    }
}

TEST_CASE("fed config validation and JSON") {
    FedConfig c;
    c.validate();
    FedConfig bad = c;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.ablation.fixed_lambda = 1.2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    c.strategy = Strategy::fedavg;
    c.ablation.fixed_lambda = 0.3;
    c.server_learning_rate = 0.002;
    c.model.activation = Activation::identity;
    const FedConfig back = fed_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.ablation.fixed_lambda == 0.3);
    CHECK(back.model.activation == Activation::identity);

    CHECK_THROWS_AS(fed_config_from_json({{"roundz", 3}}), ConfigError);
    CHECK_THROWS_AS(fed_config_from_json({{"model", {{"width", 3}}}}), ConfigError);
    CHECK_THROWS_AS(fed_config_from_json({{"rounds", "many"}}), ConfigError);
    CHECK(parse_strategy("local") == Strategy::local_only);
    CHECK_THROWS_AS(parse_strategy("fedprox"), ConfigError);
}

TEST_CASE("client stage uploads one mashed graph per batch") {
    Setup s = small_setup();
    s.config.local_epochs = 5;
    s.config.batches_per_epoch = 5;
    auto clients = make_clients(s, initial_model(s));
    const RoundUpload up = client_local_stage(clients[0], s.config);
    CHECK(up.mashed.size() == 25);
    CHECK(up.client_id == 0);
    CHECK(std::isfinite(up.train_loss));
    for (const auto& m : up.mashed) {
        CHECK(m.embeddings.rows() == 13);
        CHECK(m.embeddings.cols() == 5);
        for (Eigen::Index p = 0; p < m.soft_labels.rows(); ++p) {
            CHECK(m.soft_labels.row(p).sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(bit_identical(up.reduction, clients[0].model.reduction));
    CHECK_FALSE(up.personalization.has_value());
}

TEST_CASE("zero learning rate leaves the client model unchanged") {
    Setup s = small_setup();
    s.config.learning_rate = 0.0;
    const ModelParams init = initial_model(s);
    auto clients = make_clients(s, init);
    const RoundUpload up = client_local_stage(clients[1], s.config);
    CHECK(bit_identical(clients[1].model, init));
    CHECK(up.mashed.size() == s.config.local_epochs * s.config.batches_per_epoch);
}

TEST_CASE("without mixup each upload is a single ego-graph") {
    Setup s = small_setup();
    s.config.ablation.disable_mixup = true;
    auto clients = make_clients(s, initial_model(s));
    const RoundUpload up = client_local_stage(clients[0], s.config);
    CHECK(up.mashed.size() == s.config.local_epochs * s.config.batches_per_epoch);
    for (const auto& m : up.mashed) {
        for (Eigen::Index p = 0; p < m.soft_labels.rows(); ++p) {
            CHECK(m.soft_labels.row(p).maxCoeff() == 1.0);
        }
    }
}

TEST_CASE("client stage requires training nodes") {
    Setup s = small_setup();
    auto clients = make_clients(s, initial_model(s));
    clients[0].train.clear();
    CHECK_THROWS_AS(client_local_stage(clients[0], s.config), ConfigError);
}

TEST_CASE("server stage with one client and zero server rate") {
    Setup s = small_setup();
    s.config.server_learning_rate = 0.0;
    const ModelParams init = initial_model(s);
    auto clients = make_clients(s, init);
    ServerState server = make_server(init, s.config);
    const std::vector<RoundUpload> uploads = {client_local_stage(clients[0], s.config)};
    server_global_stage(server, uploads, s.config);
    CHECK(bit_identical(server.reduction, uploads[0].reduction));
    CHECK(bit_identical(server.personalization, init.personalization));
    CHECK(server.pool.size() == uploads[0].mashed.size());
    CHECK(server.global_distribution.size() == s.graph.num_classes());

    CHECK_THROWS_AS(server_global_stage(server, std::vector<RoundUpload>{}, s.config), ConfigError);
}

TEST_CASE("server distribution is the mixture of disjoint uploads") {
    Setup s = small_setup();
    std::vector<RoundUpload> uploads(2);
    const EgoShape shape = s.config.shape();
    const auto rows = static_cast<Eigen::Index>(shape.positions());
    for (int client = 0; client < 2; ++client) {
        for (int i = 0; i < 4; ++i) {
            Matrix labels = Matrix::Zero(rows, 4);
            labels.col(client == 0 ? (i % 2) : 2 + (i % 2)).setOnes();
            uploads[static_cast<std::size_t>(client)].mashed.push_back({shape, Matrix::Zero(rows, 5), labels});
        }
        uploads[static_cast<std::size_t>(client)].reduction = initial_model(s).reduction;
    }
    ServerState server = make_server(initial_model(s), s.config);
    server_global_stage(server, uploads, s.config);
    for (std::size_t c = 0; c < 4; ++c) CHECK(server.global_distribution[c] == doctest::Approx(0.25));
}

TEST_CASE("pool is replaced every round") {
    Setup s = small_setup();
    const ModelParams init = initial_model(s);
    auto clients = make_clients(s, init);
    ServerState server = make_server(init, s.config);
    run_round(clients, server, s.config);
    run_round(clients, server, s.config);
    CHECK(server.pool.size() == clients.size() * s.config.local_epochs * s.config.batches_per_epoch);
}

TEST_CASE("global update: fixed lambda, disabled mixing and contraction") {
    Setup s = small_setup();
    const ModelParams init = initial_model(s);
    auto clients = make_clients(s, init);
    ServerState server = make_server(init, s.config);
    std::vector<RoundUpload> uploads;
    for (auto& c : clients) uploads.push_back(client_local_stage(c, s.config));
    server_global_stage(server, uploads, s.config);

    FedConfig one = s.config;
    one.ablation.fixed_lambda = 1.0;
    ClientState a = clients[0];
    auto u = apply_global_update(a, server, one);
    CHECK(u.lambda == 1.0);
    CHECK(bit_identical(a.model.personalization, server.personalization));
    CHECK(bit_identical(a.model.reduction, server.reduction));

    FedConfig zero = s.config;
    zero.ablation.fixed_lambda = 0.0;
    ClientState b = clients[0];
    apply_global_update(b, server, zero);
    CHECK(bit_identical(b.model.personalization, clients[0].model.personalization));

    FedConfig nomix = s.config;
    nomix.ablation.disable_personalization_mix = true;
    nomix.ablation.disable_reduction_avg = true;
    ClientState c = clients[0];
    u = apply_global_update(c, server, nomix);
    CHECK(u.lambda == 0.0);
    CHECK(bit_identical(c.model, clients[0].model));

    for (std::size_t i = 0; i < clients.size(); ++i) {
        ClientState d = clients[i];
        u = apply_global_update(d, server, s.config);
        CHECK(u.lambda == doctest::Approx(adaptive_lambda(d.distribution, server.global_distribution, s.config.gamma)));
        CHECK(u.emd == doctest::Approx(earth_movers_distance(d.distribution, server.global_distribution)));
        CHECK(std::abs(u.wd_absolute - (1.0 - u.lambda) * u.wd_absolute_before) < 1e-9);
    }
}

TEST_CASE("single client whose training labels match its pool gets lambda zero") {
    Setup s = small_setup(Strategy::fedego, 1);
    // Keep only class-0 training nodes so local and pool distributions coincide.
    auto& dataset = s.partition.clients[0];
    std::vector<NodeId> train;
    for (NodeId v : dataset.train_nodes) {
        if (s.graph.label(v) == 0) train.push_back(v);
    }
    REQUIRE(!train.empty());
    dataset.train_nodes = train;
    std::vector<int> labels(train.size(), 0);
    dataset.distribution = DistributionVector::from_labels(labels, s.graph.num_classes());

    Simulation sim(s.graph, s.partition, s.config);
    const auto before = sim.clients()[0].model.personalization;
    const RoundReport r = sim.step();
    CHECK(r.clients[0].lambda == 0.0);
    CHECK(bit_identical(sim.clients()[0].model.reduction, sim.server().reduction));
}

TEST_CASE("fedavg rounds leave all clients bit-identical") {
    Setup s = small_setup(Strategy::fedavg);
    s.config.check_consensus = true;
    const ExperimentReport report = run_experiment(s.graph, s.partition, s.config);
    for (const auto& r : report.rounds) CHECK(r.max_client_distance == 0.0);
    CHECK(report.rounds.back().bytes.ego_up == 0);
    CHECK(report.rounds.back().bytes.params_up > 0);
}

TEST_CASE("communication accounting per strategy") {
    for (Strategy strategy : {Strategy::fedego, Strategy::fedavg, Strategy::local_only}) {
        Setup s = small_setup(strategy);
        s.config.rounds = 1;
        const ExperimentReport report = run_experiment(s.graph, s.partition, s.config);
        const ByteCounts& b = report.rounds.at(0).bytes;
        const ModelParams m = initial_model(s);
        const std::size_t n = s.partition.clients.size();
        const std::size_t model_bytes = parameter_bytes(m);
        switch (strategy) {
            case Strategy::fedego:
                CHECK(b.ego_up == n * s.config.local_epochs * s.config.batches_per_epoch *
                                      s.config.shape().positions() * (5 + 4) * 4);
                CHECK(b.params_up == n * parameter_bytes(m.reduction));
                CHECK(b.params_down == n * model_bytes);
                break;
            case Strategy::fedavg:
                CHECK(b.ego_up == 0);
                CHECK(b.params_up == n * model_bytes);
                CHECK(b.params_down == n * model_bytes);
                break;
            case Strategy::local_only:
                CHECK(b.total() == 0);
                CHECK(report.total_bytes().total() == 0);
                break;
        }
    }
    CHECK(mashed_graph_bytes(EgoShape(2, 6), 64, 7) == 12212);
}

TEST_CASE("frozen server with lambda one pins every client to the initial layers") {
    Setup s = small_setup();
    s.config.server_learning_rate = 0.0;
    s.config.ablation.fixed_lambda = 1.0;
    Simulation sim(s.graph, s.partition, s.config);
    const auto init = sim.server().personalization;
    sim.step();
    sim.step();
    for (const auto& c : sim.clients()) CHECK(bit_identical(c.model.personalization, init));
}

TEST_CASE("experiments are deterministic and thread-count independent") {
    Setup s = small_setup();
    s.config.rounds = 0;
    const ExperimentReport empty = run_experiment(s.graph, s.partition, s.config);
    CHECK(empty.rounds.empty());
    CHECK(empty.initial.clients.size() == 3);

    s.config.rounds = 2;
    const auto a = to_json(run_experiment(s.graph, s.partition, s.config)).dump();
    const auto b = to_json(run_experiment(s.graph, s.partition, s.config)).dump();
    CHECK(a == b);
    s.config.threads = 4;
    const auto c = to_json(run_experiment(s.graph, s.partition, s.config)).dump();
    CHECK(a == c);
    s.config.seed = 2;
    CHECK(to_json(run_experiment(s.graph, s.partition, s.config)).dump() != a);
}

TEST_CASE("numeric blow-ups carry the round number") {
    Setup s = small_setup();
    s.config.learning_rate = 1e300;
    Simulation sim(s.graph, s.partition, s.config);
    try {
        for (int i = 0; i < 5; ++i) sim.step();
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).rfind("round ", 0) == 0);
    }
}

TEST_CASE("gamma probe needs two gammas and orders runs") {
    Setup s = small_setup();
    s.config.rounds = 1;
    const std::vector<std::uint64_t> seeds = {1};
    CHECK_THROWS_AS(gamma_divergence_probe(s.graph, s.partition, s.config, std::vector{0.5}, seeds), ConfigError);
    const auto result = gamma_divergence_probe(s.graph, s.partition, s.config, std::vector{0.25, 0.75}, seeds);
    REQUIRE(result.summary.size() == 2);
    CHECK(result.summary[0].first == 0.25);
    CHECK(result.rows.size() == 2);
    CHECK(result.rows[0].client_wd_relative.size() == 3);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
    std::vector<int> hits(10, 0);
    parallel_for(10, 3, [&](std::size_t i) { hits[i] = 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 10);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) throw ConfigError("boom");
                                 }),
                    ConfigError);
}
