#include "cxrgan/data/dataset.hpp"

#include <torch/torch.h>

#include "cxrgan/errors.hpp"

namespace cxrgan::data {

std::string to_string(SampleSource source) { return source == SampleSource::Real ? "REAL" : "SYNTHETIC"; }

std::string to_string(DatasetRole role) {
    switch (role) {
        case DatasetRole::Train: return "TRAIN";
        case DatasetRole::Validation: return "VALIDATION";
        case DatasetRole::Test: return "TEST";
    }
    return "UNKNOWN";
}

LabeledDataset::LabeledDataset(LabelSet labels, DatasetRole role, std::vector<ImageSample> samples)
    : labels_(std::move(labels)), role_(role), samples_(std::move(samples)) {
    for (const auto& s : samples_) {
        if (!labels_.contains(s.label)) {
            throw ConfigError("sample '" + s.origin + "' has unregistered label " + std::to_string(s.label));
        }
    }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(labels_.size()), 0);
    for (const auto& s : samples_) ++counts[static_cast<std::size_t>(s.label)];
    return counts;
}

std::size_t LabeledDataset::count(int label) const {
    std::size_t n = 0;
    for (const auto& s : samples_) n += s.label == label ? 1 : 0;
    return n;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices, DatasetRole role) const {
    std::vector<ImageSample> picked;
    picked.reserve(indices.size());
    for (auto i : indices) picked.push_back(samples_.at(i));
    return {labels_, role, std::move(picked)};
}

LabeledDataset LabeledDataset::with_role(DatasetRole role) const { return {labels_, role, samples_}; }

LabeledDataset LabeledDataset::only_class(int label) const {
    std::vector<ImageSample> picked;
    for (const auto& s : samples_) {
        if (s.label == label) picked.push_back(s);
    }
    return {labels_, role_, std::move(picked)};
}

torch::Tensor LabeledDataset::stack_pixels(std::span<const std::size_t> order) const {
    std::vector<torch::Tensor> parts;
    parts.reserve(order.size());
    for (auto i : order) parts.push_back(samples_.at(i).pixels);
    if (parts.empty()) return torch::empty({0});
    const auto shape = parts.front().sizes();
    for (const auto& p : parts) {
        if (p.sizes() != shape) throw ShapeError("cannot batch samples of different shapes");
    }
    return torch::stack(parts);
}

LabeledDataset concat(const std::vector<LabeledDataset>& parts, DatasetRole role) {
    if (parts.empty()) return {};
    std::vector<ImageSample> all;
    for (const auto& p : parts) {
        if (!(p.labels() == parts.front().labels())) throw ConfigError("cannot merge datasets with different label sets");
        all.insert(all.end(), p.samples().begin(), p.samples().end());
    }
    return {parts.front().labels(), role, std::move(all)};
}

}  // namespace cxrgan::data
