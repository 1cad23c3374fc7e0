#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cxrgan::pipeline {

/// What one subcommand invocation consumed and produced.
struct CommandRecord {
    std::string command;      // e.g. "train-gan:COVID-19"
    std::string fingerprint;  // config fingerprint
    nlohmann::json seeds = nlohmann::json::object();
    std::map<std::string, std::string> inputs;  // path -> sha256
    std::vector<std::filesystem::path> artifacts;
    std::string started_at;
};

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

/// Merges `record` into `<output>/manifest.json` (atomic write). Every listed artifact must
/// exist; paths are stored relative to the output root.
void update_manifest(const std::filesystem::path& output_root, const CommandRecord& record);

nlohmann::json read_manifest(const std::filesystem::path& output_root);

}  // namespace cxrgan::pipeline
