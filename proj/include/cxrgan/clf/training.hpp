#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxrgan/clf/classifier.hpp"
#include "cxrgan/data/image_ops.hpp"

namespace cxrgan::clf {

struct ClassifierTrainConfig {
    std::int64_t epochs = 10;
    std::int64_t batch_size = 50;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
    bool augment = true;
    /// Calibrate batch-norm statistics on the training set first when the backbone is frozen
    /// and randomly initialized.
    bool calibrate_batch_norm = true;
    data::AugmentationPolicy augmentation{0.5, 4, 224, 224};

    /// Tabulated defaults: 30 epochs for ResNet-50, 10 for the others.
    static ClassifierTrainConfig defaults_for(BackboneId backbone);
    void validate() const;
    std::string fingerprint() const;
};

struct EpochStats {
    std::int64_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
};

struct LearningCurve {
    std::vector<EpochStats> epochs;

    /// epoch,train_loss,validation_loss,train_accuracy,validation_accuracy
    std::string to_csv() const;
};

struct TrainOutcome {
    LearningCurve curve;
    std::int64_t best_epoch = 0;
    double best_validation_accuracy = 0.0;
};

/// Loss and accuracy of `model` on `dataset` without augmentation.
std::pair<double, double> evaluate_loss_accuracy(ClassifierModel& model, const data::LabeledDataset& dataset,
                                                 std::int64_t batch_size);

/// Adam on the trainable parameters, cross-entropy loss, exactly cfg.epochs epochs. Keeps the
/// best-validation-accuracy trainable state in model.best_state. Aborts with
/// TrainingInstabilityError on a non-finite loss.
TrainOutcome train_classifier(ClassifierModel& model, const data::LabeledDataset& train,
                              const data::LabeledDataset& validation, const ClassifierTrainConfig& cfg);

}  // namespace cxrgan::clf
