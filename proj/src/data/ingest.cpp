#include "cxrgan/data/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <set>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/csv.hpp"
#include "cxrgan/util/fs.hpp"

namespace cxrgan::data {

namespace fs = std::filesystem;

bool is_image_file(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::optional<RawImage> decode_image(const fs::path& path) {
    cv::Mat mat;
    try {
        mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception&) {
        return std::nullopt;
    }
    if (mat.empty()) return std::nullopt;

    if (mat.depth() == CV_16U) {
        mat.convertTo(mat, CV_8U, 1.0 / 257.0);
    } else if (mat.depth() != CV_8U) {
        return std::nullopt;
    }
    switch (mat.channels()) {
        case 1: break;
        case 2: cv::extractChannel(mat, mat, 0); break;
        case 3: cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(mat, mat, cv::COLOR_BGRA2RGB); break;
        default: return std::nullopt;
    }
    if (!mat.isContinuous()) mat = mat.clone();

    RawImage out;
    out.height = mat.rows;
    out.width = mat.cols;
    out.channels = mat.channels();
    out.data.assign(mat.data, mat.data + mat.total() * mat.elemSize());
    return out;
}

void write_png(const fs::path& path, const RawImage& image) {
    if (image.channels != 1 && image.channels != 3) throw ShapeError("PNG output needs 1 or 3 channels");
    cv::Mat mat(image.height, image.width, image.channels == 1 ? CV_8UC1 : CV_8UC3,
                const_cast<std::uint8_t*>(image.data.data()));
    cv::Mat bgr;
    if (image.channels == 3) {
        cv::cvtColor(mat, bgr, cv::COLOR_RGB2BGR);
    } else {
        bgr = mat;
    }
    util::atomic_write_with(path, [&](const fs::path& tmp) {
        if (!cv::imwrite(tmp.string(), bgr)) throw IoError("cannot write " + path.string());
    });
}

void write_png(const fs::path& path, const torch::Tensor& pixels) { write_png(path, denormalize(pixels)); }

IngestResult ingest_directory(const fs::path& root, const LabelSet& labels, const IngestOptions& options) {
    if (!fs::is_directory(root)) throw ConfigError("data root is not a directory: " + root.string());
    for (const auto& label : labels.labels()) {
        if (!fs::is_directory(root / label.name)) {
            throw ConfigError("missing class directory: " + (root / label.name).string());
        }
    }

    std::optional<std::set<std::string>> allowed;
    if (options.allow_list) allowed.emplace(options.allow_list->begin(), options.allow_list->end());

    IngestResult result;
    std::vector<ImageSample> samples;
    for (const auto& label : labels.labels()) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(root / label.name)) {
            if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
            if (allowed && !allowed->contains(entry.path().filename().string())) continue;
            files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        std::size_t kept = 0;
        for (const auto& file : files) {
            auto raw = decode_image(file);
            if (!raw) {
                spdlog::warn("skipping undecodable image {}", file.string());
                result.skipped.push_back(file);
                continue;
            }
            samples.push_back({normalize(*raw, options.target), label.id, options.source, file.string()});
            ++kept;
        }
        if (kept == 0) spdlog::warn("class {} has no images under {}", label.name, (root / label.name).string());
    }
    if (!result.skipped.empty()) spdlog::warn("{} undecodable file(s) skipped", result.skipped.size());
    result.dataset = LabeledDataset(labels, options.role, std::move(samples));
    return result;
}

std::vector<std::string> filter_metadata(const fs::path& csv, const std::string& view_column,
                                         const std::string& view_value, const std::string& filename_column) {
    if (!fs::is_regular_file(csv)) throw IoError("cannot read metadata CSV " + csv.string());
    const auto rows = util::read_csv(csv);
    if (rows.empty()) throw ConfigError("metadata CSV has no header row: " + csv.string());

    const auto& header = rows.front();
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError("metadata CSV lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto view_idx = column(view_column);
    const auto file_idx = column(filename_column);

    std::vector<std::string> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() <= std::max(view_idx, file_idx)) continue;
        if (row[view_idx] == view_value) out.push_back(row[file_idx]);
    }
    return out;
}

}  // namespace cxrgan::data
