#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxrgan/data/dataset.hpp"
#include "cxrgan/gan/models.hpp"

namespace cxrgan::gan {

/// A synthetic sample plus the bookkeeping used to select among generated images.
struct GeneratedImage {
    data::ImageSample sample;
    std::int64_t epoch = 0;  // epoch of the generator weights that produced it
    std::int64_t index = 0;  // position within that epoch's batch of generations
    double critic_score = 0.0;
};

/// n synthetic samples from `generator` in inference mode, labelled `label`, deterministic in `seed`.
std::vector<data::ImageSample> generate(Generator generator, std::int64_t n, std::uint64_t seed, int label);

/// Same as generate(), tagged with the generator's epoch for later selection.
std::vector<GeneratedImage> generate_tagged(Generator generator, std::int64_t n, std::uint64_t seed, int label,
                                            std::int64_t epoch);

/// Fills critic_score for every image.
void score_images(std::vector<GeneratedImage>& pool, Critic critic);

enum class SelectionStrategy { LatestEpoch, CriticScore };

SelectionStrategy parse_selection_strategy(const std::string& name);
std::string to_string(SelectionStrategy strategy);

/// LatestEpoch keeps the n latest images by (epoch, index), returned in generation order.
/// CriticScore keeps the n highest-scoring images, returned by descending score with ties in
/// generation order. Throws ConfigError when the pool holds fewer than n images.
std::vector<GeneratedImage> select_images(const std::vector<GeneratedImage>& pool, std::int64_t n,
                                          SelectionStrategy strategy);

}  // namespace cxrgan::gan
