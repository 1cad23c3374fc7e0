#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cxrgan::util {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, embedded commas and newlines.
/// A leading UTF-8 BOM is dropped.
std::vector<CsvRow> parse_csv(std::string_view text);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string csv_join(const CsvRow& row);

}  // namespace cxrgan::util
