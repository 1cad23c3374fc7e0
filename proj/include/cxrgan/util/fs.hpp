#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace cxrgan::util {

std::string read_file(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

/// Same as atomic_write, for writers that need a file name (torch archives, cv::imwrite).
/// `writer` receives the temp path; it keeps the target's extension so encoders can sniff it.
void atomic_write_with(const std::filesystem::path& path,
                       const std::function<void(const std::filesystem::path&)>& writer);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// FNV-1a, 64 bit. Stable across platforms; used for config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace cxrgan::util
