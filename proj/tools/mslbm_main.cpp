// Command-line front end: simulate | fit | benchmark | select-k | sppmi | eval.
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mslbm/commands.hpp"
#include "mslbm/errors.hpp"

namespace {

int dispatch(const std::string& command, const std::string& config_path,
             const mslbm::CliOverrides& overrides) {
    const nlohmann::json cfg = mslbm::load_config(config_path);
    if (command == "simulate") {
        mslbm::cmd_simulate(cfg, overrides);
    } else if (command == "fit") {
        mslbm::cmd_fit(cfg, overrides);
    } else if (command == "benchmark") {
        mslbm::cmd_benchmark(cfg, overrides);
    } else if (command == "select-k") {
        mslbm::cmd_select_k(cfg, overrides);
    } else if (command == "sppmi") {
        mslbm::cmd_sppmi(cfg, overrides);
    } else if (command == "eval") {
        mslbm::cmd_eval(cfg, overrides);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"msLBM: multi-view sparse low-rank block model toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_given = false;

    std::vector<CLI::App*> subs;
    for (const char* name : {"simulate", "fit", "benchmark", "select-k", "sppmi", "eval"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config out_dir)");
        sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        if (std::string(name) == "fit" || std::string(name) == "benchmark") {
            sub->add_option("--mode", mode, "fit mode")->check(CLI::IsMember({"exact", "inexact"}));
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    mslbm::CliOverrides overrides;
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    if (seed_given) overrides.seed = seed;
    if (!mode.empty()) overrides.mode = mode;

    try {
        return dispatch(app.get_subcommands().front()->get_name(), config_path, overrides);
    } catch (const mslbm::invalid_parameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mslbm::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    } catch (const mslbm::parse_error& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 4;
    } catch (const mslbm::error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
