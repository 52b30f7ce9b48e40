#include "run_config.hpp"

#include "fedego/errors.hpp"
#include "fedego/federation.hpp"
#include "fedego/gradcheck.hpp"
#include "fedego/report.hpp"
#include "fedego/theorem.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace fedego::cli {
namespace {

struct CommonOptions {
    fs::path config;
    fs::path out;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> rounds;
    std::vector<std::uint64_t> seeds;
    fs::path partition_file;
};

std::size_t resolve_threads(const std::optional<std::size_t>& flag, std::size_t configured) {
    if (flag) return *flag;
    if (const char* env = std::getenv("FEDEGO_THREADS"); env && *env) {
        try {
            return static_cast<std::size_t>(std::stoul(env));
        } catch (const std::exception&) {
            throw ConfigError(std::string("FEDEGO_THREADS is not a number: ") + env);
        }
    }
    return configured;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << text;
    if (!out.flush()) throw IoError(path.string() + ": write failed");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

Partition obtain_partition(const Graph& graph, const RunConfig& config, const fs::path& file) {
    if (!file.empty()) return read_partition(file, graph);
    return partition_non_iid(graph, config.partition);
}

// Seed-level aggregation shared by `train` and `report`.
json summarize(const std::vector<json>& reports) {
    json runs = json::array();
    double global_sum = 0.0, local_sum = 0.0;
    std::string strategy;
    for (const auto& r : reports) {
        const auto& fin = r.at("final");
        const double g = fin.at("global_f1").get<double>();
        global_sum += g;
        local_sum += fin.at("local_f1").get<double>();
        strategy = r.at("config").at("federation").at("strategy").get<std::string>();
        runs.push_back({{"seed", r.at("seed")},
                        {"global_f1", g},
                        {"local_f1", fin.at("local_f1")},
                        {"best_val_round", r.at("best_val_round")},
                        {"total_bytes", r.at("total_bytes")}});
    }
    const auto n = static_cast<double>(reports.size());
    const double mean = reports.empty() ? 0.0 : global_sum / n;
    double var = 0.0;
    for (const auto& run : runs) {
        const double d = run.at("global_f1").get<double>() - mean;
        var += d * d;
    }
    if (!reports.empty()) var /= n;
    return {{"strategy", strategy},
            {"runs", std::move(runs)},
            {"mean_global_f1", mean},
            {"std_global_f1", std::sqrt(var)},
            {"mean_local_f1", reports.empty() ? 0.0 : local_sum / n}};
}

int cmd_partition(const CommonOptions& opt) {
    RunConfig config = load_run_config(opt.config);
    if (!opt.seeds.empty()) config.partition.seed = opt.seeds.front();
    const Graph graph = build_graph(config.dataset);
    const Partition partition = partition_non_iid(graph, config.partition);
    const fs::path out = opt.out.empty() ? fs::path("partition.json") : opt.out / "partition.json";
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_partition(partition, out);

    const std::size_t c = graph.num_classes();
    const DistributionVector uniform(std::vector<double>(c, 1.0 / static_cast<double>(c)));
    std::cout << "global test: " << partition.global_test.size() << " nodes\n";
    for (const auto& client : partition.clients) {
        std::vector<std::size_t> counts(c, 0);
        for (NodeId v : client.all_nodes()) ++counts[static_cast<std::size_t>(graph.label(v))];
        std::cout << "client " << client.client_id << " major [";
        for (std::size_t i = 0; i < client.major_labels.size(); ++i) {
            std::cout << (i ? "," : "") << client.major_labels[i];
        }
        std::cout << "] train " << client.train_nodes.size() << " val " << client.val_nodes.size() << " test "
                  << client.test_nodes.size() << " histogram [";
        for (std::size_t i = 0; i < c; ++i) std::cout << (i ? "," : "") << counts[i];
        std::cout << "] emd_to_uniform " << format_double(earth_movers_distance(client.distribution, uniform))
                  << '\n';
    }
    spdlog::info("wrote {}", out.string());
    return 0;
}

int cmd_train(const CommonOptions& opt, const std::string& strategy) {
    RunConfig config = load_run_config(opt.config);
    if (!strategy.empty()) config.federation.strategy = parse_strategy(strategy);
    if (opt.rounds) config.federation.rounds = *opt.rounds;
    config.federation.threads = resolve_threads(opt.threads, config.federation.threads);
    config.federation.validate();
    const std::vector<std::uint64_t> seeds = opt.seeds.empty() ? std::vector{config.federation.seed} : opt.seeds;
    const fs::path out = opt.out.empty() ? fs::path("runs") : opt.out;

    const Graph graph = build_graph(config.dataset);
    const Partition partition = obtain_partition(graph, config, opt.partition_file);
    std::vector<json> reports;
    for (std::uint64_t seed : seeds) {
        RunConfig run = config;
        run.federation.seed = seed;
        spdlog::info("{} seed {}: {} rounds", to_string(run.federation.strategy), seed, run.federation.rounds);
        ExperimentReport report = run_experiment(graph, partition, run.federation);
        report.config = to_json(run);
        const fs::path dir = out / ("seed_" + std::to_string(seed));
        export_report(report, dir);
        reports.push_back(fedego::to_json(report));
        spdlog::info("seed {}: global F1 {:.4f}, local F1 {:.4f}", seed, report.final_round().mean_global_f1(),
                     report.final_round().mean_local_f1());
    }
    const json summary = summarize(reports);
    write_text(out / "summary.json", summary.dump(1) + "\n");
    std::cout << summary.dump(1) << '\n';
    return 0;
}

int cmd_report(const std::vector<fs::path>& inputs, const fs::path& out) {
    std::vector<json> reports;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            if (fs::exists(in / "report.json")) {
                reports.push_back(read_json(in / "report.json"));
                continue;
            }
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(in)) {
                if (entry.is_directory() && fs::exists(entry.path() / "report.json")) found.push_back(entry.path());
            }
            std::sort(found.begin(), found.end());
            for (const auto& dir : found) reports.push_back(read_json(dir / "report.json"));
        } else {
            reports.push_back(read_json(in));
        }
    }
    if (reports.empty()) throw ConfigError("no report.json found under the given inputs");
    const json summary = summarize(reports);
    if (!out.empty()) write_text(out / "summary.json", summary.dump(1) + "\n");
    std::cout << summary.dump(1) << '\n';
    return 0;
}

int cmd_verify_theorem1(std::size_t trials, std::uint64_t seed) {
    const auto linear = check_alignment_invariance(trials, seed, Activation::identity);
    const auto control = check_alignment_invariance(trials, seed, Activation::relu);
    double worst_output = 0.0, worst_sum = 0.0;
    for (const auto& t : linear.trials) {
        worst_output = std::max(worst_output, t.output_gap);
        worst_sum = std::max(worst_sum, t.layer_sum_gap);
        if (!t.outputs_agree || !t.sums_agree) {
            std::cout << "FAIL linear trial seed " << t.seed << " (k=" << t.hops << ", n=" << t.fanout
                      << ", batch=" << t.batch << "): output gap " << format_double(t.output_gap)
                      << ", layer-sum gap " << format_double(t.layer_sum_gap) << '\n';
        }
    }
    std::cout << "linear: " << trials - linear.output_violations << "/" << trials
              << " trials agree (max relative output gap " << format_double(worst_output)
              << ", max layer-sum gap " << format_double(worst_sum) << ")\n";
    std::cout << "relu control: " << control.output_violations << "/" << trials
              << " trials differ (expected-fail)";
    for (const auto& t : control.trials) {
        if (!t.outputs_agree) {
            std::cout << ", first at seed " << t.seed;
            break;
        }
    }
    std::cout << '\n';
    const bool ok = linear.output_violations == 0 && linear.sum_violations == 0 && control.output_violations > 0;
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t hops, std::size_t fanout, std::size_t dim, double step,
                  double tolerance) {
    SyntheticGraphConfig graph_config;
    graph_config.num_nodes = 40;
    graph_config.num_classes = 3;
    graph_config.feature_dim = dim;
    graph_config.intra_edge_prob = 0.2;
    graph_config.inter_edge_prob = 0.05;
    graph_config.seed = seed;
    const Graph graph = generate_synthetic_graph(graph_config);
    ModelConfig model_config;
    model_config.reduction_dim = dim;
    model_config.hidden_dim = dim;
    Rng rng = make_stream(seed, StreamKind::model_init);
    const ModelParams model = init_model(dim, hops, graph.num_classes(), model_config, rng);
    const EgoShape shape(hops, fanout);
    std::vector<EgoGraph> egos;
    for (NodeId v = 0; v < 4; ++v) egos.push_back(sample_ego_graph(graph, v, shape, rng));
    const EgoBatch batch = make_ego_batch(graph, egos);
    const auto report = finite_difference_gradcheck(model, batch, step, tolerance);
    for (const auto& t : report.tensors) {
        std::cout << t.name << ": " << t.coordinates << " coords, max rel error "
                  << format_double(t.max_relative_error) << '\n';
    }
    std::cout << "max relative error " << format_double(report.max_relative_error) << " (tolerance "
              << format_double(tolerance) << "): " << (report.passed ? "PASS" : "FAIL") << '\n';
    return report.passed ? 0 : 1;
}

int cmd_gamma_probe(const CommonOptions& opt, const std::vector<double>& gammas) {
    if (gammas.size() < 2) throw ConfigError("gamma-probe needs at least two --gammas values");
    RunConfig config = load_run_config(opt.config);
    if (opt.rounds) config.federation.rounds = *opt.rounds;
    config.federation.threads = resolve_threads(opt.threads, config.federation.threads);
    config.federation.strategy = Strategy::fedego;
    config.federation.validate();
    const std::vector<std::uint64_t> seeds = opt.seeds.empty() ? std::vector{config.federation.seed} : opt.seeds;
    const Graph graph = build_graph(config.dataset);
    const Partition partition = obtain_partition(graph, config, opt.partition_file);
    const auto result = gamma_divergence_probe(graph, partition, config.federation, gammas, seeds);

    std::string rows = "gamma,seed,client_id,wd_relative\n";
    for (const auto& row : result.rows) {
        for (std::size_t i = 0; i < row.client_wd_relative.size(); ++i) {
            rows += format_double(row.gamma) + "," + std::to_string(row.seed) + "," + std::to_string(i) + "," +
                    format_double(row.client_wd_relative[i]) + "\n";
        }
    }
    std::string summary = "gamma,mean_wd_relative\n";
    bool increasing = true;
    for (std::size_t i = 0; i < result.summary.size(); ++i) {
        summary += format_double(result.summary[i].first) + "," + format_double(result.summary[i].second) + "\n";
        if (i > 0 && !(result.summary[i].second > result.summary[i - 1].second)) increasing = false;
    }
    const fs::path out = opt.out.empty() ? fs::path("gamma_probe") : opt.out;
    write_text(out / "divergence.csv", rows);
    write_text(out / "gamma_summary.csv", summary);
    write_text(out / "config.json", to_json(config).dump(1) + "\n");
    std::cout << summary << "strictly increasing in gamma: " << (increasing ? "yes" : "no") << '\n';
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Federated graph learning simulator with mashed ego-graphs"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

    CommonOptions opt;
    auto add_common = [&opt](CLI::App* cmd, bool seeds) {
        cmd->add_option("--config", opt.config, "JSON configuration file")->required();
        cmd->add_option("--out", opt.out, "Output directory");
        cmd->add_option("--partition", opt.partition_file, "Existing partition.json to reuse");
        if (seeds) cmd->add_option("--seeds", opt.seeds, "Comma-separated seeds")->delimiter(',');
    };

    auto* partition = app.add_subcommand("partition", "Split a graph into non-IID clients");
    partition->add_option("--config", opt.config, "JSON configuration file")->required();
    partition->add_option("--out", opt.out, "Output directory");
    partition->add_option("--seed", opt.seeds, "Override the partition seed")->expected(1);

    std::string strategy;
    auto* train = app.add_subcommand("train", "Run one experiment per seed");
    add_common(train, true);
    train->add_option("--strategy", strategy, "fedego, fedavg or local");
    train->add_option("--threads", opt.threads, "Client worker threads");
    train->add_option("--rounds", opt.rounds, "Override the round count");

    std::size_t trials = 100;
    std::uint64_t seed = 0;
    auto* theorem = app.add_subcommand("verify-theorem1", "Check alignment invariance of the linear stack");
    theorem->add_option("--trials", trials, "Number of random trials");
    theorem->add_option("--seed", seed, "Base seed");

    std::size_t hops = 2, fanout = 2, dim = 8;
    double step = 1e-4, tolerance = 1e-4;
    auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    gradcheck->add_option("--seed", seed, "Seed");
    gradcheck->add_option("--hops", hops, "Ego-graph depth");
    gradcheck->add_option("--fanout", fanout, "Ego-graph fanout");
    gradcheck->add_option("--dim", dim, "Feature, reduction and hidden width");
    gradcheck->add_option("--step", step, "Finite-difference step");
    gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

    std::vector<double> gammas;
    auto* probe = app.add_subcommand("gamma-probe", "Weight divergence as a function of gamma");
    add_common(probe, true);
    probe->add_option("--gammas", gammas, "Comma-separated gamma values")->delimiter(',')->required();
    probe->add_option("--threads", opt.threads, "Client worker threads");
    probe->add_option("--rounds", opt.rounds, "Override the round count");

    std::vector<fs::path> inputs;
    fs::path report_out;
    auto* report = app.add_subcommand("report", "Re-aggregate report.json files into a summary");
    report->add_option("inputs", inputs, "Run directories or report.json files")->required();
    report->add_option("--out", report_out, "Directory for summary.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_default_logger(spdlog::stderr_color_st("fedego"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    if (*partition) return cmd_partition(opt);
    if (*train) return cmd_train(opt, strategy);
    if (*theorem) return cmd_verify_theorem1(trials, seed);
    if (*gradcheck) return cmd_gradcheck(seed, hops, fanout, dim, step, tolerance);
    if (*probe) return cmd_gamma_probe(opt, gammas);
    return cmd_report(inputs, report_out);
}

}  // namespace
}  // namespace fedego::cli

int main(int argc, char** argv) {
    try {
        return fedego::cli::run(argc, argv);
    } catch (const fedego::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const fedego::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const fedego::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
