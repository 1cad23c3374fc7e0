#include "cxrgan/data/image_ops.hpp"

#include <torch/torch.h>

#include <cmath>

#include "cxrgan/errors.hpp"

namespace cxrgan::data {

namespace F = torch::nn::functional;

std::uint8_t denormalize_value(float v) {
    const double scaled = std::round((static_cast<double>(v) + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

namespace {

// BT.601 luma; weights sum to one so the bridge commutes with the affine normalization.
torch::Tensor to_single_channel(const torch::Tensor& chw) {
    const auto weights = torch::tensor({0.299f, 0.587f, 0.114f}).view({3, 1, 1});
    return (chw * weights).sum(0, /*keepdim=*/true);
}

torch::Tensor bridge_channels(const torch::Tensor& chw, std::int64_t channels) {
    const auto have = chw.size(0);
    if (have == channels) return chw;
    if (have == 1 && channels == 3) return chw.expand({3, chw.size(1), chw.size(2)}).contiguous();
    if (have == 3 && channels == 1) return to_single_channel(chw);
    throw ShapeError("cannot convert " + std::to_string(have) + " channels to " + std::to_string(channels));
}

torch::Tensor resize_bilinear(const torch::Tensor& chw, std::int64_t height, std::int64_t width) {
    if (chw.size(1) == height && chw.size(2) == width) return chw;
    const bool shrinking = chw.size(1) > height || chw.size(2) > width;
    auto out = F::interpolate(chw.unsqueeze(0), F::InterpolateFuncOptions()
                                                    .size(std::vector<std::int64_t>{height, width})
                                                    .mode(torch::kBilinear)
                                                    .align_corners(false)
                                                    .antialias(shrinking));
    return out.squeeze(0);
}

void check_target(Shape3 target) {
    if (target.channels != 1 && target.channels != 3) throw ShapeError("target must have 1 or 3 channels");
    if (target.height <= 0 || target.width <= 0) throw ShapeError("target size must be positive");
}

}  // namespace

torch::Tensor normalize(const RawImage& raw, Shape3 target) {
    check_target(target);
    if (raw.height <= 0 || raw.width <= 0 || raw.data.empty()) throw ShapeError("cannot normalize a zero-sized image");
    if (raw.channels != 1 && raw.channels != 3) throw ShapeError("raw image must have 1 or 3 channels");
    if (raw.data.size() != static_cast<std::size_t>(raw.height) * raw.width * raw.channels) {
        throw ShapeError("raw image buffer does not match its dimensions");
    }
    auto hwc = torch::from_blob(const_cast<std::uint8_t*>(raw.data.data()), {raw.height, raw.width, raw.channels},
                                torch::kUInt8);
    auto chw = hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0);
    return conform(chw, target);
}

torch::Tensor conform(const torch::Tensor& pixels, Shape3 target) {
    check_target(target);
    if (pixels.dim() != 3 || pixels.numel() == 0) throw ShapeError("expected non-empty C x H x W pixels");
    auto out = bridge_channels(pixels.to(torch::kFloat32), target.channels);
    out = resize_bilinear(out, target.height, target.width);
    // Antialiased bilinear can overshoot by a rounding error; keep the documented range.
    return out.clamp(-1.0, 1.0).contiguous();
}

RawImage denormalize(const torch::Tensor& pixels) {
    if (pixels.dim() != 3) throw ShapeError("expected C x H x W pixels");
    const auto c = pixels.size(0);
    if (c != 1 && c != 3) throw ShapeError("expected 1 or 3 channels");
    auto bytes = pixels.detach()
                     .to(torch::kFloat64)
                     .add(1.0)
                     .mul(127.5)
                     .round()
                     .clamp(0.0, 255.0)
                     .to(torch::kUInt8)
                     .permute({1, 2, 0})
                     .contiguous();
    RawImage out;
    out.channels = static_cast<int>(c);
    out.height = static_cast<int>(pixels.size(1));
    out.width = static_cast<int>(pixels.size(2));
    out.data.assign(bytes.data_ptr<std::uint8_t>(), bytes.data_ptr<std::uint8_t>() + bytes.numel());
    return out;
}

void validate_policy(const AugmentationPolicy& policy, std::int64_t height, std::int64_t width) {
    if (!(policy.horizontal_flip_probability >= 0.0 && policy.horizontal_flip_probability <= 1.0)) {
        throw ConfigError("flip probability must lie in [0, 1]");
    }
    if (policy.pad_pixels < 0) throw ConfigError("padding must be non-negative");
    if (policy.crop_height <= 0 || policy.crop_width <= 0) throw ConfigError("crop size must be positive");
    if (policy.crop_height > height + 2 * policy.pad_pixels || policy.crop_width > width + 2 * policy.pad_pixels) {
        throw ConfigError("crop " + std::to_string(policy.crop_height) + "x" + std::to_string(policy.crop_width) +
                          " does not fit the padded image");
    }
}

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, std::int64_t height, std::int64_t width,
                                   util::Rng& rng) {
    validate_policy(policy, height, width);
    AugmentationDraw draw;
    draw.flip = util::uniform01(rng) < policy.horizontal_flip_probability;
    const auto slack_y = static_cast<std::uint64_t>(height + 2 * policy.pad_pixels - policy.crop_height);
    const auto slack_x = static_cast<std::uint64_t>(width + 2 * policy.pad_pixels - policy.crop_width);
    draw.top = static_cast<int>(util::uniform_below(rng, slack_y + 1));
    draw.left = static_cast<int>(util::uniform_below(rng, slack_x + 1));
    return draw;
}

torch::Tensor hflip(const torch::Tensor& pixels) { return pixels.flip({-1}); }

torch::Tensor apply_augmentation(const torch::Tensor& pixels, const AugmentationPolicy& policy,
                                 const AugmentationDraw& draw) {
    if (pixels.dim() != 3) throw ShapeError("expected C x H x W pixels");
    validate_policy(policy, pixels.size(1), pixels.size(2));
    auto out = draw.flip ? hflip(pixels) : pixels;
    if (policy.pad_pixels > 0) {
        const auto p = policy.pad_pixels;
        out = F::pad(out, F::PadFuncOptions({p, p, p, p}).mode(torch::kConstant).value(-1.0));
    }
    const auto max_top = out.size(1) - policy.crop_height;
    const auto max_left = out.size(2) - policy.crop_width;
    if (draw.top < 0 || draw.left < 0 || draw.top > max_top || draw.left > max_left) {
        throw ConfigError("crop offset outside the padded image");
    }
    return out.narrow(1, draw.top, policy.crop_height).narrow(2, draw.left, policy.crop_width).contiguous();
}

torch::Tensor augment(const torch::Tensor& pixels, const AugmentationPolicy& policy, util::Rng& rng) {
    if (pixels.dim() != 3) throw ShapeError("expected C x H x W pixels");
    const auto draw = draw_augmentation(policy, pixels.size(1), pixels.size(2), rng);
    return apply_augmentation(pixels, policy, draw);
}

ImageSample augment(const ImageSample& sample, const AugmentationPolicy& policy, util::Rng& rng) {
    ImageSample out = sample;
    out.pixels = augment(sample.pixels, policy, rng);
    return out;
}

}  // namespace cxrgan::data
