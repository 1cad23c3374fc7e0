#include "cxrgan/pipeline/manifest.hpp"

#include <chrono>
#include <ctime>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"

namespace cxrgan::pipeline {

namespace fs = std::filesystem;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json read_manifest(const fs::path& output_root) {
    const auto path = output_root / "manifest.json";
    if (!fs::exists(path)) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt manifest " + path.string() + ": " + e.what());
    }
}

void update_manifest(const fs::path& output_root, const CommandRecord& record) {
    auto manifest = read_manifest(output_root);
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : record.artifacts) {
        if (!fs::exists(a)) throw IoError("artifact listed for " + record.command + " is missing: " + a.string());
        artifacts.push_back(fs::relative(a, output_root).generic_string());
    }
    manifest["tool_version"] = CXRGAN_VERSION;
    manifest["config_fingerprint"] = record.fingerprint;
    if (!manifest.contains("created_at")) manifest["created_at"] = record.started_at;
    manifest["updated_at"] = utc_timestamp();
    manifest["commands"][record.command] = {
        {"config_fingerprint", record.fingerprint},
        {"seeds", record.seeds},
        {"inputs", record.inputs},
        {"artifacts", artifacts},
        {"started_at", record.started_at},
        {"finished_at", utc_timestamp()},
    };
    util::atomic_write(output_root / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace cxrgan::pipeline
