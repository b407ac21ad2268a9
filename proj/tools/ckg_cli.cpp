#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckg/pipeline.hpp"

namespace {

const std::vector<std::string> kPathKeys{"graph",      "diagnoses", "exposures", "baseline", "reference",
                                         "hypotheses", "mediation", "spec",      "out_dir"};

const std::vector<std::string> kKeys{"graph",  "diagnoses", "exposures", "baseline",       "reference", "hypotheses",
                                     "mediation", "spec",   "out_dir",   "source",         "criterion", "lasso",
                                     "alpha",  "nsim",      "backdoor_limit", "folds",     "seed",      "threads",
                                     "n",      "oracle_draws", "precision", "recall"};

std::string flag_name(std::string key) {
    for (auto& c : key)
        if (c == '_') c = '-';
    return "--" + key;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drug side-effect discovery by causal mediation over a knowledge graph"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value file; flags override it");
    std::map<std::string, std::string> flags;
    for (const auto& key : kKeys) app.add_option(flag_name(key), flags[key], key);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"gen-hypotheses", "generate candidate hypotheses from the graph (and cohort)"},
        {"adjust", "compute adjustment sets for each hypothesis"},
        {"mediate", "estimate mediated effects for each hypothesis"},
        {"evaluate", "precision, recall and F1 against a reference set"},
        {"similarity", "side-effect similarity and shared-indication AUC"},
        {"simulate", "write a synthetic cohort from a structural causal model"},
        {"check-graph", "validate a graph file and print a summary"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    ckg::RunConfig cfg;
    const std::string command = app.get_subcommands().front()->get_name();
    int rc = ckg::pipeline::run_command(
        [&] {
            if (!config_path.empty()) {
                const auto base = std::filesystem::path(config_path).parent_path();
                for (auto [key, value] : ckg::read_key_values(config_path)) {
                    bool is_path = std::find(kPathKeys.begin(), kPathKeys.end(), key) != kPathKeys.end();
                    if (is_path && !value.empty() && std::filesystem::path(value).is_relative())
                        value = (base / value).lexically_normal().string();
                    cfg.set(key, value);
                }
            }
            for (const auto& key : kKeys)
                if (app.count(flag_name(key))) cfg.set(key, flags[key]);

            namespace p = ckg::pipeline;
            if (command == "gen-hypotheses") p::cmd_gen_hypotheses(cfg, std::cout);
            else if (command == "adjust") p::cmd_adjust(cfg, std::cout);
            else if (command == "mediate") p::cmd_mediate(cfg, std::cout);
            else if (command == "evaluate") p::cmd_evaluate(cfg, std::cout);
            else if (command == "similarity") p::cmd_similarity(cfg, std::cout);
            else if (command == "simulate") p::cmd_simulate(cfg, std::cout);
            else if (command == "check-graph") p::cmd_check_graph(cfg, std::cout);
        },
        std::cerr);
    return rc;
}
