#pragma once

#include <nlohmann/json.hpp>
#include <torch/types.h>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cxrgan::clf {

/// Named tensors plus a JSON metadata block in one little-endian binary file:
///
///   "CXRGTB01" | u64 metadata length | metadata (UTF-8 JSON) | u64 tensor count |
///   per tensor: u32 name length | name | u8 dtype (0 = float32, 1 = int64) |
///               u32 rank | i64 dims[rank] | raw element data
///
/// Simple enough to write from Python with numpy (see python/cxrgan/weights.py).
struct TensorBundle {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<std::pair<std::string, torch::Tensor>> tensors;

    const torch::Tensor* find(const std::string& name) const;
};

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle);
/// Throws MissingArtifactError if absent, IoError if malformed.
TensorBundle read_bundle(const std::filesystem::path& path);

std::string encode_bundle(const TensorBundle& bundle);
TensorBundle decode_bundle(const std::string& bytes);

}  // namespace cxrgan::clf
