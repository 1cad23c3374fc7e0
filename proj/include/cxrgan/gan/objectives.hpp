#pragma once

#include <torch/types.h>

#include <cstdint>
#include <functional>

namespace cxrgan::gan {

/// Any differentiable map from a B x ... batch to B scores.
using ScoreFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// mixed_i = eps_i * real_i + (1 - eps_i) * fake_i, one eps per sample broadcast over pixels.
torch::Tensor interpolate(const torch::Tensor& real, const torch::Tensor& fake, const torch::Tensor& epsilon);

/// Gradient of sum(critic(x)) with respect to x, evaluated at `points`.
/// With create_graph the result stays differentiable w.r.t. the critic's parameters.
torch::Tensor input_gradient(const ScoreFn& critic, const torch::Tensor& points, bool create_graph);

/// mean_i (||grad_x critic(x_i)||_2 - 1)^2 with the norm over each sample's flattened pixels.
/// Unweighted; the caller applies lambda. Throws TrainingInstabilityError on a non-finite
/// gradient, tagged with `step`.
torch::Tensor gradient_penalty(const ScoreFn& critic, const torch::Tensor& mixed, std::int64_t step = -1);

/// mean(fake) - mean(real) + lambda * gp. Minimized by the critic.
torch::Tensor critic_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                          const torch::Tensor& gp, double lambda);

/// -mean(fake). Minimized by the generator.
torch::Tensor generator_loss(const torch::Tensor& fake_scores);

/// mean(real) - mean(fake).
double wasserstein_estimate(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);

}  // namespace cxrgan::gan
