#pragma once

#include <cstdint>
#include <utility>

#include "cxrgan/data/dataset.hpp"

namespace cxrgan::data {

struct SplitSpec {
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

/// Number of validation samples for a pool of `pool_size`: round(fraction * size).
std::size_t validation_size(std::size_t pool_size, const SplitSpec& spec);

/// Seeded uniform random partition into (train, validation).
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& pool, const SplitSpec& spec);

}  // namespace cxrgan::data
