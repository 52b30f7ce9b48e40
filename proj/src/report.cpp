#include "fedego/report.hpp"

#include "fedego/errors.hpp"

#include <array>
#include <charconv>
#include <fstream>

namespace fedego {

namespace {

template <class Field>
double client_mean(const RoundReport& r, Field field) {
    if (r.clients.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& c : r.clients) sum += field(c);
    return sum / static_cast<double>(r.clients.size());
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError(path.string() + ": write failed");
}

nlohmann::json to_json(const ClientRoundReport& c) {
    return {{"client_id", c.client_id},     {"train_loss", c.train_loss},
            {"local_test", to_json(c.local_test)}, {"local_val", to_json(c.local_val)},
            {"global_test", to_json(c.global_test)}, {"local_f1", c.local_test.micro_f1},
            {"global_f1", c.global_test.micro_f1}, {"lambda", c.lambda},
            {"emd", c.emd},                   {"wd_relative", c.wd_relative},
            {"wd_absolute", c.wd_absolute}};
}

nlohmann::json to_json(const ByteCounts& b) {
    return {{"params_up", b.params_up}, {"params_down", b.params_down}, {"ego_up", b.ego_up}, {"total", b.total()}};
}

constexpr std::array<const char*, 3> kSplits = {"local_test", "local_val", "global_test"};

const Metrics& split_of(const ClientRoundReport& c, std::size_t split) {
    switch (split) {
        case 0: return c.local_test;
        case 1: return c.local_val;
        default: return c.global_test;
    }
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return {buf.data(), end};
}

double RoundReport::mean_global_f1() const {
    return client_mean(*this, [](const ClientRoundReport& c) { return c.global_test.micro_f1; });
}
double RoundReport::mean_local_f1() const {
    return client_mean(*this, [](const ClientRoundReport& c) { return c.local_test.micro_f1; });
}
double RoundReport::mean_val_f1() const {
    return client_mean(*this, [](const ClientRoundReport& c) { return c.local_val.micro_f1; });
}
double RoundReport::mean_wd_relative() const {
    return client_mean(*this, [](const ClientRoundReport& c) { return c.wd_relative; });
}

std::size_t ExperimentReport::best_val_round() const {
    std::size_t best = 0;
    double best_f1 = initial.mean_val_f1();
    for (const auto& r : rounds) {
        if (r.mean_val_f1() > best_f1) {
            best_f1 = r.mean_val_f1();
            best = r.round;
        }
    }
    return best;
}

ByteCounts ExperimentReport::total_bytes() const {
    ByteCounts total;
    for (const auto& r : rounds) total += r.bytes;
    return total;
}

nlohmann::json to_json(const Metrics& m) {
    return {{"micro_f1", m.micro_f1}, {"macro_f1", m.macro_f1}, {"loss", m.loss}, {"samples", m.samples}};
}

nlohmann::json to_json(const RoundReport& r) {
    nlohmann::json clients = nlohmann::json::array();
    for (const auto& c : r.clients) clients.push_back(to_json(c));
    return {{"round", r.round},
            {"clients", std::move(clients)},
            {"global_f1", r.mean_global_f1()},
            {"local_f1", r.mean_local_f1()},
            {"server_loss", r.server_loss},
            {"bytes", to_json(r.bytes)},
            {"max_client_distance", r.max_client_distance}};
}

nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& round : r.rounds) rounds.push_back(to_json(round));
    const RoundReport& last = r.final_round();
    return {{"config", r.config},
            {"seed", r.seed},
            {"initial", to_json(r.initial)},
            {"rounds", std::move(rounds)},
            {"final", {{"round", last.round},
                       {"global_f1", last.mean_global_f1()},
                       {"local_f1", last.mean_local_f1()},
                       {"val_f1", last.mean_val_f1()},
                       {"clients", to_json(last)["clients"]}}},
            {"best_val_round", r.best_val_round()},
            {"total_bytes", to_json(r.total_bytes())}};
}

std::size_t metrics_csv_rows(std::size_t rounds, std::size_t clients) {
    return (rounds + 1) * (clients * kSplits.size() * 3 + 3);
}

void export_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());

    const auto json_path = dir / "report.json";
    auto json_out = open_output(json_path);
    json_out << to_json(report).dump(1) << '\n';
    finish(json_out, json_path);

    const auto jsonl_path = dir / "rounds.jsonl";
    auto jsonl_out = open_output(jsonl_path);
    for (const auto& r : report.rounds) jsonl_out << to_json(r).dump() << '\n';
    finish(jsonl_out, jsonl_path);

    const auto csv_path = dir / "metrics.csv";
    auto csv = open_output(csv_path);
    csv << "round,client_id,split,metric,value\n";
    auto write_round = [&csv](const RoundReport& r) {
        auto row = [&](long long client, const char* split, const char* metric, double value) {
            csv << r.round << ',' << client << ',' << split << ',' << metric << ',' << format_double(value) << '\n';
        };
        for (const auto& c : r.clients) {
            for (std::size_t s = 0; s < kSplits.size(); ++s) {
                const Metrics& m = split_of(c, s);
                const auto id = static_cast<long long>(c.client_id);
                row(id, kSplits[s], "micro_f1", m.micro_f1);
                row(id, kSplits[s], "macro_f1", m.macro_f1);
                row(id, kSplits[s], "loss", m.loss);
            }
        }
        row(-1, "global_test", "micro_f1", r.mean_global_f1());
        row(-1, "global_test", "macro_f1",
            client_mean(r, [](const ClientRoundReport& c) { return c.global_test.macro_f1; }));
        row(-1, "global_test", "loss", client_mean(r, [](const ClientRoundReport& c) { return c.global_test.loss; }));
    };
    write_round(report.initial);
    for (const auto& r : report.rounds) write_round(r);
    finish(csv, csv_path);

    const auto div_path = dir / "divergence.csv";
    auto div = open_output(div_path);
    div << "round,client_id,lambda,emd,wd_relative,wd_absolute\n";
    for (const auto& r : report.rounds) {
        for (const auto& c : r.clients) {
            div << r.round << ',' << c.client_id << ',' << format_double(c.lambda) << ',' << format_double(c.emd)
                << ',' << format_double(c.wd_relative) << ',' << format_double(c.wd_absolute) << '\n';
        }
    }
    finish(div, div_path);
}

}  // namespace fedego
