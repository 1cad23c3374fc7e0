#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cxrgan/clf/classifier.hpp"
#include "cxrgan/clf/training.hpp"
#include "cxrgan/data/labels.hpp"
#include "cxrgan/data/split.hpp"
#include "cxrgan/gan/sampling.hpp"
#include "cxrgan/gan/trainer.hpp"

namespace cxrgan::pipeline {

/// Environment variable that replaces `paths.output`.
inline constexpr const char* kOutputRootEnv = "CXRGAN_OUTPUT_ROOT";

/// Directory name under synthetic/ that holds generated test images.
inline constexpr const char* kHoldoutDir = "holdout";

struct MetadataFilter {
    std::filesystem::path csv;
    std::string view_column = "view";
    std::string view_value = "AP";
    std::string filename_column = "filename";
};

struct DataPaths {
    std::filesystem::path real_train;
    std::optional<std::filesystem::path> real_test;
    std::optional<MetadataFilter> metadata;
    std::filesystem::path output;
};

struct PrepareSettings {
    std::int64_t image_size = 224;
    std::int64_t channels = 1;
};

struct GenerationSettings {
    std::map<std::string, std::int64_t> counts;  // per class
    std::int64_t pool_per_epoch = 0;             // 0: same as the class count
    std::int64_t from_last_epochs = 0;           // 0: every saved epoch
    gan::SelectionStrategy strategy = gan::SelectionStrategy::LatestEpoch;
    std::int64_t holdout_count = 0;              // synthetic test images per class
};

enum class DataSource { Real, Synthetic };
DataSource parse_data_source(const std::string& name);
std::string to_string(DataSource source);

struct BackboneSettings {
    clf::BackboneId id = clf::BackboneId::Vgg16;
    clf::ClassifierTrainConfig train;
    bool feature_extract = true;
    std::optional<clf::PretrainedWeights> pretrained;
};

struct ClassifierSettings {
    std::vector<BackboneSettings> backbones;
    std::vector<DataSource> train_sources{DataSource::Synthetic};
    clf::InputNormalization input_normalization = clf::InputNormalization::MinusOneToOne;

    const BackboneSettings& find(clf::BackboneId id) const;
};

struct EvaluationSettings {
    DataSource test_source = DataSource::Real;
    bool use_best_weights = true;
};

struct PipelineConfig {
    std::filesystem::path source;  // the file this was loaded from
    std::uint64_t seed = 0;
    data::LabelSet labels = data::LabelSet::chest_xray_default();
    DataPaths paths;
    PrepareSettings prepare;
    gan::GanTrainConfig gan;                                   // shared defaults
    std::map<std::string, gan::GanTrainConfig> gan_per_class;  // resolved for every class
    bool parallel_classes = false;
    GenerationSettings generation;
    data::SplitSpec split;
    ClassifierSettings classifier;
    EvaluationSettings evaluation;

    const gan::GanTrainConfig& gan_for(const std::string& class_name) const;
    std::int64_t count_for(const std::string& class_name) const;

    /// Generation seeds, derived from `seed`. Training seeds are resolved into the per-stage
    /// configs at load time.
    std::uint64_t generation_seed(int class_id) const;
    std::uint64_t holdout_seed(int class_id) const;

    /// Stable hash of every resolved setting.
    std::string fingerprint() const;

    std::filesystem::path prepared_dir() const { return paths.output / "prepared"; }
    std::filesystem::path gan_dir(const std::string& c) const { return paths.output / "gan" / c; }
    std::filesystem::path synthetic_dir() const { return paths.output / "synthetic"; }
    std::filesystem::path model_dir(clf::BackboneId id) const { return paths.output / "models" / clf::to_string(id); }
    std::filesystem::path eval_dir(const std::string& name) const { return paths.output / "eval" / name; }
};

/// Command-line values that take precedence over the file. `seed` also replaces any
/// stage-specific seed in the file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> snapshot_every;
    std::optional<std::int64_t> n;
};

/// Parses and validates a YAML config. Relative paths resolve against the file's directory;
/// `CXRGAN_OUTPUT_ROOT` replaces the output root. Every problem is a ConfigError.
PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Same, from YAML text; `base_dir` anchors relative paths.
PipelineConfig parse_config(const std::string& yaml, const std::filesystem::path& base_dir,
                            const Overrides& overrides = {});

}  // namespace cxrgan::pipeline
