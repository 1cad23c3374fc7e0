#include "cxrgan/gan/sampling.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include <algorithm>
#include <numeric>

#include "cxrgan/errors.hpp"

namespace cxrgan::gan {

namespace {
constexpr std::int64_t kChunk = 50;
}

std::vector<GeneratedImage> generate_tagged(Generator generator, std::int64_t n, std::uint64_t seed, int label,
                                            std::int64_t epoch) {
    if (n < 0) throw ConfigError("cannot generate a negative number of images");
    std::vector<GeneratedImage> out;
    if (n == 0) return out;
    out.reserve(static_cast<std::size_t>(n));

    torch::NoGradGuard no_grad;
    const bool was_training = generator->is_training();
    generator->eval();
    auto rng = at::make_generator<at::CPUGeneratorImpl>(seed);
    const auto noise = torch::randn({n, generator->config().z_dim}, rng);
    for (std::int64_t begin = 0; begin < n; begin += kChunk) {
        const auto len = std::min(kChunk, n - begin);
        const auto images = generator->forward(noise.narrow(0, begin, len));
        for (std::int64_t i = 0; i < len; ++i) {
            const auto index = begin + i;
            GeneratedImage g;
            g.sample.pixels = images[i].clone();
            g.sample.label = label;
            g.sample.source = data::SampleSource::Synthetic;
            g.sample.origin = "gen:" + std::to_string(label) + ":" + std::to_string(epoch) + ":" + std::to_string(index);
            g.epoch = epoch;
            g.index = index;
            out.push_back(std::move(g));
        }
    }
    generator->train(was_training);
    return out;
}

std::vector<data::ImageSample> generate(Generator generator, std::int64_t n, std::uint64_t seed, int label) {
    auto tagged = generate_tagged(generator, n, seed, label, 0);
    std::vector<data::ImageSample> out;
    out.reserve(tagged.size());
    for (auto& g : tagged) out.push_back(std::move(g.sample));
    return out;
}

void score_images(std::vector<GeneratedImage>& pool, Critic critic) {
    torch::NoGradGuard no_grad;
    critic->eval();
    for (std::size_t begin = 0; begin < pool.size(); begin += kChunk) {
        const auto end = std::min(pool.size(), begin + static_cast<std::size_t>(kChunk));
        std::vector<torch::Tensor> batch;
        for (auto i = begin; i < end; ++i) batch.push_back(pool[i].sample.pixels);
        const auto scores = critic->forward(torch::stack(batch)).to(torch::kFloat64).contiguous();
        for (auto i = begin; i < end; ++i) pool[i].critic_score = scores[static_cast<std::int64_t>(i - begin)].item<double>();
    }
}

SelectionStrategy parse_selection_strategy(const std::string& name) {
    if (name == "latest_epoch" || name == "LATEST_EPOCH") return SelectionStrategy::LatestEpoch;
    if (name == "critic_score" || name == "CRITIC_SCORE") return SelectionStrategy::CriticScore;
    throw ConfigError("unknown selection strategy '" + name + "' (latest_epoch | critic_score)");
}

std::string to_string(SelectionStrategy strategy) {
    return strategy == SelectionStrategy::LatestEpoch ? "latest_epoch" : "critic_score";
}

std::vector<GeneratedImage> select_images(const std::vector<GeneratedImage>& pool, std::int64_t n,
                                          SelectionStrategy strategy) {
    if (n < 0 || static_cast<std::size_t>(n) > pool.size()) {
        throw ConfigError("cannot select " + std::to_string(n) + " images from a pool of " +
                          std::to_string(pool.size()));
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    auto generation_order = [&](std::size_t a, std::size_t b) {
        return std::tie(pool[a].epoch, pool[a].index) < std::tie(pool[b].epoch, pool[b].index);
    };
    std::stable_sort(order.begin(), order.end(), generation_order);

    std::vector<std::size_t> kept;
    if (strategy == SelectionStrategy::LatestEpoch) {
        kept.assign(order.end() - n, order.end());
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pool[a].critic_score > pool[b].critic_score; });
        kept.assign(order.begin(), order.begin() + n);
    }
    std::vector<GeneratedImage> out;
    out.reserve(kept.size());
    for (auto i : kept) out.push_back(pool[i]);
    return out;
}

}  // namespace cxrgan::gan
