#ifndef MSLBM_COMMANDS_HPP
#define MSLBM_COMMANDS_HPP

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace mslbm {

/// Overrides taken from the command line; they win over the config file.
struct CliOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;  // "exact" | "inexact"
};

/// Strict-schema config loader: unknown keys anywhere are rejected.
nlohmann::json load_config(const std::filesystem::path& path);

void cmd_simulate(const nlohmann::json& cfg, const CliOverrides& cli);
void cmd_fit(const nlohmann::json& cfg, const CliOverrides& cli);
void cmd_benchmark(const nlohmann::json& cfg, const CliOverrides& cli);
void cmd_select_k(const nlohmann::json& cfg, const CliOverrides& cli);
void cmd_sppmi(const nlohmann::json& cfg, const CliOverrides& cli);
void cmd_eval(const nlohmann::json& cfg, const CliOverrides& cli);

}  // namespace mslbm

#endif
