#include "cxrgan/gan/models.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include "cxrgan/errors.hpp"

namespace cxrgan::gan {

namespace nn = torch::nn;

std::int64_t stage_count(std::int64_t size) {
    if (size < 4 || size > 1024 || (size & (size - 1)) != 0) {
        throw ConfigError("image size " + std::to_string(size) +
                          " is not reachable by the doubling ladder (power of two in [4, 1024])");
    }
    std::int64_t stages = 1;
    for (std::int64_t s = 4; s < size; s *= 2) ++stages;
    return stages;
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& config) : config_(config) {
    if (config.z_dim < 1 || config.hidden_dim < 1 || config.out_channels < 1) {
        throw ConfigError("generator dimensions must be positive");
    }
    const auto stages = stage_count(config.out_size);

    nn::Sequential body;
    std::int64_t in = config.z_dim;
    std::int64_t width = config.hidden_dim << (stages - 2 < 0 ? 0 : stages - 2);
    for (std::int64_t i = 0; i < stages; ++i) {
        const bool first = i == 0;
        const bool last = i == stages - 1;
        const auto out = last ? config.out_channels : width;
        auto opts = nn::ConvTranspose2dOptions(in, out, 4).stride(first ? 1 : 2).padding(first ? 0 : 1);
        body->push_back(nn::ConvTranspose2d(opts));
        if (last) {
            body->push_back(nn::Tanh());
        } else {
            body->push_back(nn::BatchNorm2d(out));
            body->push_back(nn::ReLU(true));
        }
        in = out;
        width = std::max<std::int64_t>(width / 2, 1);
    }
    body_ = register_module("body", body);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& noise) {
    torch::Tensor x = noise;
    if (x.dim() == 2) x = x.view({x.size(0), x.size(1), 1, 1});
    if (x.dim() != 4 || x.size(1) != config_.z_dim || x.size(2) != 1 || x.size(3) != 1) {
        throw ShapeError("generator expects B x " + std::to_string(config_.z_dim) + " noise");
    }
    return body_->forward(x);
}

CriticImpl::CriticImpl(const CriticConfig& config) : config_(config) {
    if (config.in_channels < 1 || config.hidden_dim < 1) throw ConfigError("critic dimensions must be positive");
    const auto stages = stage_count(config.in_size);

    nn::Sequential body;
    std::int64_t in = config.in_channels;
    std::int64_t width = config.hidden_dim;
    for (std::int64_t i = 0; i + 1 < stages; ++i) {
        body->push_back(nn::Conv2d(nn::Conv2dOptions(in, width, 4).stride(2).padding(1)));
        body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
        in = width;
        width *= 2;
    }
    body->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 4).stride(1).padding(0)));
    body_ = register_module("body", body);
}

torch::Tensor CriticImpl::forward(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != config_.in_channels || images.size(2) != config_.in_size ||
        images.size(3) != config_.in_size) {
        throw ShapeError("critic expects B x " + std::to_string(config_.in_channels) + " x " +
                         std::to_string(config_.in_size) + " x " + std::to_string(config_.in_size) + " images");
    }
    return body_->forward(images).view({images.size(0)});
}

Generator build_generator(const GeneratorConfig& config) { return Generator(config); }
Critic build_critic(const CriticConfig& config) { return Critic(config); }

void init_weights(torch::nn::Module& model, std::uint64_t seed) {
    torch::NoGradGuard no_grad;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    for (auto& module : model.modules(/*include_self=*/true)) {
        const bool conv = module->as<nn::Conv2d>() || module->as<nn::ConvTranspose2d>();
        const bool norm = module->as<nn::BatchNorm2d>() != nullptr;
        if (!conv && !norm) continue;
        for (auto& p : module->named_parameters(/*recurse=*/false)) {
            if (p.key() == "weight") {
                p.value().normal_(0.0, 0.02, gen);
            } else {
                p.value().zero_();
            }
        }
    }
}

std::int64_t parameter_count(const torch::nn::Module& model) {
    std::int64_t n = 0;
    for (const auto& p : model.parameters()) n += p.numel();
    return n;
}

}  // namespace cxrgan::gan
