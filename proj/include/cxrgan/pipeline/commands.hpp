#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cxrgan/pipeline/config.hpp"

namespace cxrgan::pipeline {

/// Per-invocation selections that are not part of the config file.
struct CommandOptions {
    std::optional<std::string> class_name;          // train-gan, generate: one class instead of all
    std::optional<std::string> backbone;            // train-clf, evaluate: one backbone instead of all
    std::optional<std::filesystem::path> resume;    // train-gan
    bool parallel_classes = false;                  // train-gan: one thread per class
    std::optional<std::filesystem::path> predictions;  // evaluate: score a prediction dump instead of a model
};

/// Decodes, normalizes and resizes the real train/test trees into `<output>/prepared` and writes
/// counts.csv. Reruns replace the previous output.
void cmd_prepare(const PipelineConfig& cfg);

/// Trains one WGAN-GP per class into `<output>/gan/<class>/`.
void cmd_train_gan(const PipelineConfig& cfg, const CommandOptions& options = {});

/// Samples each class's saved generators and keeps the configured number of images in
/// `<output>/synthetic/<class>/`.
void cmd_generate(const PipelineConfig& cfg, const CommandOptions& options = {});

/// Trains each configured backbone into `<output>/models/<backbone>/`.
void cmd_train_clf(const PipelineConfig& cfg, const CommandOptions& options = {});

/// Writes metrics, report, confusion matrix and ROC artifacts into `<output>/eval/<backbone>/`.
void cmd_evaluate(const PipelineConfig& cfg, const CommandOptions& options = {});

}  // namespace cxrgan::pipeline
