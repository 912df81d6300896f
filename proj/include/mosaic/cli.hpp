#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mosaic {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// Exit codes of every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct GlobalOptions {
    unsigned threads = 1;
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
    std::filesystem::path root;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
};

struct EvaluateOptions {
    std::filesystem::path manifest;
    std::filesystem::path predictions;
    std::optional<std::filesystem::path> unseen;  // defaults to unseen.jsonl next to the manifest
    std::vector<std::string> heads;               // defaults to the task's heads
    std::filesystem::path out = "report";
};

struct MemorizationOptions {
    std::filesystem::path generated;
    std::filesystem::path train_manifest;
    double k = 1.0 / 3.0;
    bool downsample = false;
    int bins = 20;
    std::filesystem::path out = "report";
};

struct MineCommandOptions {
    std::filesystem::path input;
    std::string mode = "count";
    double sample_rate = 0.05;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> relation_phrases;
    std::optional<std::string> llm_endpoint;
    std::optional<std::string> llm_model;
    std::optional<std::string> llm_key_env;
    std::filesystem::path out = "freq.csv";
};

int cmd_generate(const GlobalOptions& global, const std::filesystem::path& config_path);
int cmd_evaluate(const GlobalOptions& global, const EvaluateOptions& options);
int cmd_memorization(const GlobalOptions& global, const MemorizationOptions& options);
int cmd_mine(const GlobalOptions& global, const MineCommandOptions& options);
int cmd_report(const GlobalOptions& global, const std::vector<std::filesystem::path>& dirs,
               const std::filesystem::path& out);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Merges `entry` under `command` into `<dir>/run.json`, keeping other commands' entries.
void write_run_metadata(const std::filesystem::path& dir, const std::string& command,
                        const nlohmann::ordered_json& entry);
nlohmann::ordered_json read_run_metadata(const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace mosaic
