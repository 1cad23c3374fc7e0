#include "cxrgan/data/split.hpp"

#include <cmath>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::data {

std::size_t validation_size(std::size_t pool_size, const SplitSpec& spec) {
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0, 1), got " + std::to_string(spec.validation_fraction));
    }
    return static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(pool_size)));
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& pool, const SplitSpec& spec) {
    const auto n_val = validation_size(pool.size(), spec);
    if (pool.empty()) throw ConfigError("cannot split an empty dataset");
    if (spec.validation_fraction * static_cast<double>(pool.size()) < 1.0 || n_val >= pool.size()) {
        throw ConfigError("pool of " + std::to_string(pool.size()) + " is too small for fraction " +
                          std::to_string(spec.validation_fraction));
    }

    util::Rng rng(spec.seed);
    const auto order = util::permutation(pool.size(), rng);
    const std::span<const std::size_t> all(order);
    return {pool.subset(all.subspan(n_val), DatasetRole::Train),
            pool.subset(all.first(n_val), DatasetRole::Validation)};
}

}  // namespace cxrgan::data
