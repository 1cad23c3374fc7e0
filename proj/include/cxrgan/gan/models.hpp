#pragma once

#include <torch/nn/module.h>
#include <torch/nn/modules/container/sequential.h>
#include <torch/nn/pimpl.h>

#include <cstdint>

namespace cxrgan::gan {

struct GeneratorConfig {
    std::int64_t z_dim = 128;
    std::int64_t hidden_dim = 64;
    std::int64_t out_channels = 1;
    std::int64_t out_size = 128;
};

struct CriticConfig {
    std::int64_t in_channels = 1;
    std::int64_t hidden_dim = 64;
    std::int64_t in_size = 128;
};

/// Number of resolution stages between 4x4 and `size` plus the 1x1 <-> 4x4 projection.
/// 128 -> 6. Throws ConfigError unless `size` is a power of two in [4, 1024].
std::int64_t stage_count(std::int64_t size);

/// DCGAN-style generator. A 4x4 transpose-convolution projection of the z_dim x 1 x 1 input
/// is followed by stride-2 transpose convolutions that double the resolution up to out_size.
/// Widths halve per stage, starting from hidden_dim * 2^(stages - 2); tanh output.
class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(const GeneratorConfig& config);

    /// noise: B x z_dim or B x z_dim x 1 x 1. Returns B x out_channels x out_size x out_size.
    torch::Tensor forward(const torch::Tensor& noise);

    const GeneratorConfig& config() const noexcept { return config_; }

private:
    GeneratorConfig config_;
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Generator);

/// Mirror of the generator: stride-2 convolutions halve the resolution down to 4x4, then a
/// 4x4 convolution produces one unbounded score per image. LeakyReLU(0.2), no batch norm.
class CriticImpl : public torch::nn::Module {
public:
    explicit CriticImpl(const CriticConfig& config);

    /// images: B x in_channels x in_size x in_size. Returns B scores.
    torch::Tensor forward(const torch::Tensor& images);

    const CriticConfig& config() const noexcept { return config_; }

private:
    CriticConfig config_;
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Critic);

Generator build_generator(const GeneratorConfig& config);
Critic build_critic(const CriticConfig& config);

/// Redraws every convolution / transpose-convolution weight and every batch-norm scale from
/// N(0, 0.02^2) using a generator seeded with `seed`; biases and batch-norm shifts are zeroed.
void init_weights(torch::nn::Module& model, std::uint64_t seed);

std::int64_t parameter_count(const torch::nn::Module& model);

}  // namespace cxrgan::gan
