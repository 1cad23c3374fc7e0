#include "cxrgan/gan/objectives.hpp"

#include <torch/torch.h>

#include "cxrgan/errors.hpp"

namespace cxrgan::gan {

torch::Tensor interpolate(const torch::Tensor& real, const torch::Tensor& fake, const torch::Tensor& epsilon) {
    if (real.sizes() != fake.sizes()) throw ShapeError("real and fake batches differ in shape");
    if (real.dim() < 1 || epsilon.dim() != 1 || epsilon.size(0) != real.size(0)) {
        throw ShapeError("epsilon must hold one value per sample");
    }
    std::vector<std::int64_t> shape(static_cast<std::size_t>(real.dim()), 1);
    shape[0] = real.size(0);
    const auto eps = epsilon.to(real.dtype()).view(shape);
    return eps * real + (1 - eps) * fake;
}

torch::Tensor input_gradient(const ScoreFn& critic, const torch::Tensor& points, bool create_graph) {
    auto x = points.detach().requires_grad_(true);
    auto scores = critic(x);
    if (!scores.requires_grad()) return torch::zeros_like(x);
    auto grads = torch::autograd::grad({scores.sum()}, {x}, /*grad_outputs=*/{}, /*retain_graph=*/create_graph,
                                       create_graph, /*allow_unused=*/true);
    if (!grads[0].defined()) return torch::zeros_like(x);
    return grads[0];
}

torch::Tensor gradient_penalty(const ScoreFn& critic, const torch::Tensor& mixed, std::int64_t step) {
    if (mixed.dim() < 2 || mixed.size(0) == 0) throw ShapeError("gradient penalty needs a non-empty batch");
    auto grad = input_gradient(critic, mixed, /*create_graph=*/true);
    if (!torch::isfinite(grad).all().item<bool>()) {
        throw TrainingInstabilityError("non-finite critic input gradient", step);
    }
    auto norms = grad.flatten(1).norm(2, /*dim=*/1);
    return (norms - 1).pow(2).mean();
}

torch::Tensor critic_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores,
                          const torch::Tensor& gp, double lambda) {
    if (real_scores.numel() != fake_scores.numel()) throw ShapeError("score vectors differ in length");
    return fake_scores.mean() - real_scores.mean() + lambda * gp;
}

torch::Tensor generator_loss(const torch::Tensor& fake_scores) {
    if (fake_scores.numel() == 0) throw ShapeError("generator loss needs at least one score");
    return -fake_scores.mean();
}

double wasserstein_estimate(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
    return (real_scores.mean() - fake_scores.mean()).item<double>();
}

}  // namespace cxrgan::gan
