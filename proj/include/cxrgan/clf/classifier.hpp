#pragma once

#include <nlohmann/json.hpp>
#include <torch/types.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cxrgan/clf/backbones.hpp"
#include "cxrgan/data/dataset.hpp"
#include "cxrgan/metrics/predictions.hpp"

namespace cxrgan::clf {

struct ParameterCounts {
    std::int64_t trainable = 0;
    std::int64_t total = 0;
};

/// How [-1, 1] pixels are presented to the network.
enum class InputNormalization {
    MinusOneToOne,  // as produced by the data pipeline
    ImageNet,       // rescaled to [0, 1], then per-channel ImageNet mean/std
};

InputNormalization parse_input_normalization(const std::string& name);
std::string to_string(InputNormalization mode);

struct PretrainedWeights {
    std::filesystem::path path;
    std::string sha256;  // empty skips the check
};

struct BuildOptions {
    std::uint64_t seed = 0;
    std::optional<PretrainedWeights> pretrained;
    InputNormalization input_normalization = InputNormalization::MinusOneToOne;
    std::vector<std::string> class_names;  // defaults to "0".."K-1"
};

/// A backbone with a fresh num_classes head. Under feature extraction every parameter outside
/// the head is frozen and the backbone always runs in inference mode.
struct ClassifierModel {
    BackboneId backbone = BackboneId::Vgg16;
    int num_classes = 3;
    bool feature_extract = true;
    std::string provenance = "random";  // or "pretrained:<sha256>"
    InputNormalization input_normalization = InputNormalization::MinusOneToOne;
    std::vector<std::string> class_names;
    Backbone net;
    /// Trainable parameters at the best validation accuracy seen so far.
    std::map<std::string, torch::Tensor> best_state;

    ParameterCounts counts() const;
    std::vector<torch::Tensor> trainable_parameters() const;
    std::vector<std::pair<std::string, torch::Tensor>> frozen_parameters() const;
    /// Training mode for the trainable part only; frozen backbones stay in inference mode.
    void set_training(bool training);
    /// Copies best_state over the current trainable parameters (no-op when empty).
    void load_best_state();
    /// Snapshot of trainable parameters, keyed by name.
    std::map<std::string, torch::Tensor> trainable_state() const;
};

/// Replaces the final layer with a fresh num_classes layer and, when `feature_extract`, freezes
/// everything else. With `options.pretrained` the backbone weights come from a tensor bundle;
/// a missing file raises MissingArtifactError, a checksum mismatch ChecksumError.
ClassifierModel build_classifier(BackboneId backbone, int num_classes, bool feature_extract, bool pretrained,
                                 const BuildOptions& options = {});

/// Copies matching backbone tensors (everything except the head) from a bundle.
void load_pretrained(ClassifierModel& model, const PretrainedWeights& weights);

/// B x 3 x 224 x 224 in [-1, 1] -> B x num_classes logits.
torch::Tensor forward(ClassifierModel& model, const torch::Tensor& batch);

/// Mean over the batch of -log softmax(logits)[label]. Throws std::out_of_range for a label
/// outside [0, K).
torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels);

/// Row-wise softmax in double precision.
torch::Tensor softmax_probabilities(const torch::Tensor& logits);

/// One prediction per sample, in dataset order. Inputs are conformed to 3 x 224 x 224.
metrics::PredictionSet predict(ClassifierModel& model, const data::LabeledDataset& dataset,
                               std::int64_t batch_size = 50);

/// Stacks the given samples, conformed to the classifier input shape.
torch::Tensor classifier_batch(const data::LabeledDataset& dataset, std::span<const std::size_t> indices);

/// Re-estimates every batch-norm layer's running statistics from `data` (cumulative average,
/// no augmentation). Only buffers change; parameters are untouched. Used for backbones without
/// pretrained weights, whose default statistics leave inference-mode features near zero.
void calibrate_batch_norm(ClassifierModel& model, const data::LabeledDataset& data, std::int64_t batch_size);

/// Versioned tensor bundle with backbone id, class names, final and best parameters.
void save_model(const std::filesystem::path& path, const ClassifierModel& model, const nlohmann::json& extra);
struct LoadedModel {
    ClassifierModel model;
    nlohmann::json metadata;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace cxrgan::clf
