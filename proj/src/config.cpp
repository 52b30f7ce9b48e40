#include "fedego/errors.hpp"
#include "fedego/federation.hpp"

namespace fedego {

namespace {

nlohmann::json to_json(const ModelConfig& m) {
    return {{"reduction_dim", m.reduction_dim},
            {"hidden_dim", m.hidden_dim},
            {"reduction_layers", m.reduction_layers},
            {"reduction_activation", std::string(to_string(m.reduction_activation))},
            {"activation", std::string(to_string(m.activation))}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig m) {
    for (const auto& [key, value] : j.items()) {
        if (key == "reduction_dim") m.reduction_dim = value.get<std::size_t>();
        else if (key == "hidden_dim") m.hidden_dim = value.get<std::size_t>();
        else if (key == "reduction_layers") m.reduction_layers = value.get<std::size_t>();
        else if (key == "reduction_activation") m.reduction_activation = parse_activation(value.get<std::string>());
        else if (key == "activation") m.activation = parse_activation(value.get<std::string>());
        else throw ConfigError("unknown model key '" + key + "'");
    }
    return m;
}

nlohmann::json to_json(const Ablation& a) {
    nlohmann::json j = {{"disable_mixup", a.disable_mixup},
                        {"disable_reduction_avg", a.disable_reduction_avg},
                        {"disable_personalization_mix", a.disable_personalization_mix},
                        {"fixed_lambda", nullptr}};
    if (a.fixed_lambda) j["fixed_lambda"] = *a.fixed_lambda;
    return j;
}

Ablation ablation_from_json(const nlohmann::json& j, Ablation a) {
    for (const auto& [key, value] : j.items()) {
        if (key == "disable_mixup") a.disable_mixup = value.get<bool>();
        else if (key == "disable_reduction_avg") a.disable_reduction_avg = value.get<bool>();
        else if (key == "disable_personalization_mix") a.disable_personalization_mix = value.get<bool>();
        else if (key == "fixed_lambda") {
            if (value.is_null()) a.fixed_lambda.reset();
            else a.fixed_lambda = value.get<double>();
        } else throw ConfigError("unknown ablation key '" + key + "'");
    }
    return a;
}

}  // namespace

nlohmann::json to_json(const FedConfig& c) {
    // threads is left out on purpose: it must not change any artifact.
    nlohmann::json j = {{"strategy", std::string(to_string(c.strategy))},
                        {"rounds", c.rounds},
                        {"local_epochs", c.local_epochs},
                        {"server_epochs", c.server_epochs},
                        {"batches_per_epoch", c.batches_per_epoch},
                        {"batch_size", c.batch_size},
                        {"gamma", c.gamma},
                        {"hops", c.hops},
                        {"fanout", c.fanout},
                        {"learning_rate", c.learning_rate},
                        {"server_learning_rate", nullptr},
                        {"seed", c.seed},
                        {"check_consensus", c.check_consensus},
                        {"model", to_json(c.model)},
                        {"ablation", to_json(c.ablation)}};
    if (c.server_learning_rate) j["server_learning_rate"] = *c.server_learning_rate;
    return j;
}

FedConfig fed_config_from_json(const nlohmann::json& j, FedConfig c) {
    if (!j.is_object()) throw ConfigError("federation config must be an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "strategy") c.strategy = parse_strategy(value.get<std::string>());
            else if (key == "rounds") c.rounds = value.get<std::size_t>();
            else if (key == "local_epochs") c.local_epochs = value.get<std::size_t>();
            else if (key == "server_epochs") c.server_epochs = value.get<std::size_t>();
            else if (key == "batches_per_epoch") c.batches_per_epoch = value.get<std::size_t>();
            else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
            else if (key == "gamma") c.gamma = value.get<double>();
            else if (key == "hops") c.hops = value.get<std::size_t>();
            else if (key == "fanout") c.fanout = value.get<std::size_t>();
            else if (key == "learning_rate") c.learning_rate = value.get<double>();
            else if (key == "server_learning_rate") {
                if (value.is_null()) c.server_learning_rate.reset();
                else c.server_learning_rate = value.get<double>();
            } else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "threads") c.threads = value.get<std::size_t>();
            else if (key == "check_consensus") c.check_consensus = value.get<bool>();
            else if (key == "model") c.model = model_config_from_json(value, c.model);
            else if (key == "ablation") c.ablation = ablation_from_json(value, c.ablation);
            else throw ConfigError("unknown federation key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("federation config: ") + e.what());
    }
    return c;
}

}  // namespace fedego
