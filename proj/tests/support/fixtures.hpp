#pragma once

#include <torch/torch.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "cxrgan/data/dataset.hpp"
#include "cxrgan/data/image_ops.hpp"
#include "cxrgan/data/ingest.hpp"
#include "cxrgan/data/labels.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        auto pattern = (std::filesystem::temp_directory_path() / "cxrgan-test-XXXXXX").string();
        if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

/// Gray image with every pixel `value`.
inline data::RawImage flat_image(int height, int width, std::uint8_t value, int channels = 1) {
    data::RawImage img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(height * width * channels), value);
    return img;
}

/// 1 x size x size: dark background with one bright square of random side and position.
inline torch::Tensor bright_square(std::int64_t size, util::Rng& rng) {
    auto img = torch::full({1, size, size}, -1.0f);
    const auto side = static_cast<std::int64_t>(size / 4 + util::uniform_below(rng, static_cast<std::uint64_t>(size / 4 + 1)));
    const auto top = static_cast<std::int64_t>(util::uniform_below(rng, static_cast<std::uint64_t>(size - side + 1)));
    const auto left = static_cast<std::int64_t>(util::uniform_below(rng, static_cast<std::uint64_t>(size - side + 1)));
    img.narrow(1, top, side).narrow(2, left, side).fill_(1.0f);
    return img;
}

inline data::LabeledDataset bright_squares(std::size_t n, std::int64_t size, std::uint64_t seed) {
    util::Rng rng(seed);
    std::vector<data::ImageSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        samples.push_back({bright_square(size, rng), 0, data::SampleSource::Real, "square:" + std::to_string(i)});
    }
    return {data::LabelSet({"square"}), data::DatasetRole::Train, std::move(samples)};
}

/// Three classes whose images differ in mean intensity (-0.6, 0, 0.6) plus pixel noise.
inline data::LabeledDataset intensity_classes(std::size_t per_class, std::int64_t size, std::uint64_t seed,
                                              data::DatasetRole role = data::DatasetRole::Train) {
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    std::vector<data::ImageSample> samples;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int c = 0; c < 3; ++c) {
            auto pixels = (torch::randn({1, size, size}, gen) * 0.15f + (c - 1) * 0.6f).clamp(-1.0, 1.0);
            samples.push_back({pixels, c, data::SampleSource::Real, "toy:" + std::to_string(c) + ":" + std::to_string(i)});
        }
    }
    return {data::LabelSet::chest_xray_default(), role, std::move(samples)};
}

/// Writes `<root>/<class>/<prefix>_<i>.png` toy images whose brightness depends on the class.
inline void write_toy_tree(const std::filesystem::path& root, const data::LabelSet& labels, int per_class, int size,
                           std::uint64_t seed, const std::string& prefix = "img") {
    util::Rng rng(seed);
    for (const auto& label : labels.labels()) {
        std::filesystem::create_directories(root / label.name);
        for (int i = 0; i < per_class; ++i) {
            auto img = flat_image(size, size, 0);
            const int base = 40 + 80 * label.id;
            for (auto& v : img.data) v = static_cast<std::uint8_t>(base + util::uniform_below(rng, 40));
            data::write_png(root / label.name / (prefix + "_" + std::to_string(i) + ".png"), img);
        }
    }
}

}  // namespace cxrgan::testing
