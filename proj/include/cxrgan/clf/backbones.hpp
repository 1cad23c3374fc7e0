#pragma once

#include <torch/nn/module.h>
#include <torch/nn/modules/linear.h>

#include <cstdint>
#include <memory>
#include <string>

namespace cxrgan::clf {

enum class BackboneId { Vgg16, Resnet50, Googlenet, Mnasnet };

/// Accepts vgg16, resnet50, googlenet, mnasnet (case-insensitive). Throws ConfigError otherwise.
BackboneId parse_backbone(const std::string& name);
std::string to_string(BackboneId id);

/// A convolutional network split into a feature extractor and its final linear layer.
/// Parameter names follow the torchvision layouts (e.g. `features.0.weight`, `layer1.0.conv1.weight`)
/// so externally exported weights map one-to-one.
class BackboneImpl : public torch::nn::Module {
public:
    /// B x 3 x 224 x 224 -> B x feature_dim, everything before the final layer.
    virtual torch::Tensor features(const torch::Tensor& x) = 0;
    torch::Tensor forward(const torch::Tensor& x) { return head()->forward(features(x)); }

    virtual torch::nn::Linear head() const = 0;
    /// Registered name of the final layer, e.g. "classifier.6" or "fc".
    virtual std::string head_name() const = 0;
    virtual BackboneId id() const = 0;

    /// Redraws all weights the way the reference implementation initializes a fresh network.
    virtual void reset_parameters(std::uint64_t seed) = 0;
};

using Backbone = std::shared_ptr<BackboneImpl>;

/// VGG-16 with batch normalization after every convolution.
Backbone make_vgg16_bn(std::int64_t num_classes);
/// ResNet-50 (bottleneck blocks, stride on the 3x3 convolution).
Backbone make_resnet50(std::int64_t num_classes);
/// GoogLeNet (Inception v1). Auxiliary towers are built only when `aux_logits` is set; they
/// contribute nothing under feature extraction and are absent from the default inventory.
Backbone make_googlenet(std::int64_t num_classes, bool aux_logits = false);
/// MNASNet 1.0.
Backbone make_mnasnet1_0(std::int64_t num_classes);

Backbone make_backbone(BackboneId id, std::int64_t num_classes);

}  // namespace cxrgan::clf
