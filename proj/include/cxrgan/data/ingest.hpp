#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cxrgan/data/dataset.hpp"
#include "cxrgan/data/image_ops.hpp"

namespace cxrgan::data {

/// Decodes a PNG or JPEG file. Returns nullopt when the file cannot be decoded.
std::optional<RawImage> decode_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale or RGB PNG atomically.
void write_png(const std::filesystem::path& path, const RawImage& image);

/// Denormalizes and writes C x H x W pixels.
void write_png(const std::filesystem::path& path, const torch::Tensor& pixels);

bool is_image_file(const std::filesystem::path& path);

struct IngestOptions {
    Shape3 target = kGanShape;
    DatasetRole role = DatasetRole::Train;
    SampleSource source = SampleSource::Real;
    /// When set, only files whose name appears in the list are ingested.
    std::optional<std::vector<std::string>> allow_list;
};

struct IngestResult {
    LabeledDataset dataset;
    std::vector<std::filesystem::path> skipped;  // undecodable files
};

/// Reads `<root>/<ClassName>/*.{png,jpg,jpeg}` for every label, files in name order.
/// A missing class directory is a ConfigError; undecodable files are skipped with a warning.
IngestResult ingest_directory(const std::filesystem::path& root, const LabelSet& labels,
                              const IngestOptions& options = {});

/// File names from rows of a metadata CSV whose `view_column` equals `view_value`, row order.
std::vector<std::string> filter_metadata(const std::filesystem::path& csv, const std::string& view_column,
                                         const std::string& view_value,
                                         const std::string& filename_column = "filename");

}  // namespace cxrgan::data
