#pragma once

#include <torch/types.h>

#include <cstdint>
#include <vector>

#include "cxrgan/data/dataset.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::data {

/// Decoded 8-bit image, interleaved height x width x channels, RGB order when channels == 3.
struct RawImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

struct Shape3 {
    std::int64_t channels = 1;
    std::int64_t height = 128;
    std::int64_t width = 128;

    bool operator==(const Shape3&) const = default;
};

inline constexpr Shape3 kGanShape{1, 128, 128};
inline constexpr Shape3 kClassifierShape{3, 224, 224};

/// v -> v / 127.5 - 1
inline float normalize_value(std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }
/// v -> round((v + 1) * 127.5), clamped to [0, 255]
std::uint8_t denormalize_value(float v);

/// Maps raw 8-bit pixels into [-1, 1] at `target`. Bilinear resize; grayscale is replicated
/// to 3 channels, RGB is reduced to 1 channel with BT.601 luma weights. Throws on empty input.
torch::Tensor normalize(const RawImage& raw, Shape3 target);

/// Same channel bridge and bilinear resize for already-normalized C x H x W pixels.
torch::Tensor conform(const torch::Tensor& pixels, Shape3 target);

/// Inverse of normalize for 1- or 3-channel C x H x W pixels (no resize).
RawImage denormalize(const torch::Tensor& pixels);

struct AugmentationPolicy {
    double horizontal_flip_probability = 0.5;
    int pad_pixels = 0;
    int crop_height = 224;
    int crop_width = 224;
};

/// One random draw of the augmentation parameters. Offsets index the padded image.
struct AugmentationDraw {
    bool flip = false;
    int top = 0;
    int left = 0;
};

/// Throws ConfigError when the crop does not fit in the padded image.
void validate_policy(const AugmentationPolicy& policy, std::int64_t height, std::int64_t width);

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, std::int64_t height,
                                   std::int64_t width, util::Rng& rng);

/// Flip, then pad with -1 (black), then crop at the drawn offset.
torch::Tensor apply_augmentation(const torch::Tensor& pixels, const AugmentationPolicy& policy,
                                 const AugmentationDraw& draw);

torch::Tensor augment(const torch::Tensor& pixels, const AugmentationPolicy& policy, util::Rng& rng);
ImageSample augment(const ImageSample& sample, const AugmentationPolicy& policy, util::Rng& rng);

/// Reverses the column order of a C x H x W (or B x C x H x W) tensor.
torch::Tensor hflip(const torch::Tensor& pixels);

}  // namespace cxrgan::data
