#pragma once

#include <torch/types.h>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cxrgan/data/labels.hpp"

namespace cxrgan::data {

enum class SampleSource { Real, Synthetic };
enum class DatasetRole { Train, Validation, Test };

std::string to_string(SampleSource source);
std::string to_string(DatasetRole role);

struct ImageSample {
    torch::Tensor pixels;  // float32, channels x height x width, values in [-1, 1]
    int label = 0;
    SampleSource source = SampleSource::Real;
    std::string origin;  // file path or generation id
};

/// Immutable ordered collection of labeled samples.
class LabeledDataset {
public:
    LabeledDataset() = default;
    /// Throws ConfigError if any sample carries a label outside `labels`.
    LabeledDataset(LabelSet labels, DatasetRole role, std::vector<ImageSample> samples);

    const LabelSet& labels() const noexcept { return labels_; }
    DatasetRole role() const noexcept { return role_; }
    std::span<const ImageSample> samples() const noexcept { return samples_; }
    const ImageSample& operator[](std::size_t i) const { return samples_.at(i); }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    /// Per-class sample counts indexed by label id; sums to size().
    std::vector<std::size_t> class_counts() const;
    std::size_t count(int label) const;

    LabeledDataset subset(std::span<const std::size_t> indices, DatasetRole role) const;
    LabeledDataset with_role(DatasetRole role) const;
    /// Samples of a single class, order preserved.
    LabeledDataset only_class(int label) const;

    /// Stacks samples [begin, end) of `order` into a B x C x H x W tensor. All shapes must agree.
    torch::Tensor stack_pixels(std::span<const std::size_t> order) const;

private:
    LabelSet labels_;
    DatasetRole role_ = DatasetRole::Train;
    std::vector<ImageSample> samples_;
};

/// Concatenation of datasets sharing one label set.
LabeledDataset concat(const std::vector<LabeledDataset>& parts, DatasetRole role);

}  // namespace cxrgan::data
