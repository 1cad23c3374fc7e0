#include "cxrgan/clf/training.hpp"

#include <torch/torch.h>

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::clf {

ClassifierTrainConfig ClassifierTrainConfig::defaults_for(BackboneId backbone) {
    ClassifierTrainConfig cfg;
    if (backbone == BackboneId::Resnet50) cfg.epochs = 30;
    return cfg;
}

void ClassifierTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("classifier epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("classifier batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("classifier learning_rate must be positive");
    }
    if (augment) {
        data::validate_policy(augmentation, data::kClassifierShape.height, data::kClassifierShape.width);
    }
}

std::string ClassifierTrainConfig::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << "clf|" << batch_size << '|' << learning_rate << '|' << seed << '|' << augment << '|'
       << augmentation.horizontal_flip_probability << '|' << augmentation.pad_pixels << '|' << augmentation.crop_height << '|'
       << augmentation.crop_width << '|' << calibrate_batch_norm;
    return util::hex64(util::fnv1a64(os.str()));
}

std::string LearningCurve::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "epoch,train_loss,validation_loss,train_accuracy,validation_accuracy\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.train_accuracy << ','
           << e.validation_accuracy << '\n';
    }
    return os.str();
}

namespace {

torch::Tensor label_tensor(const data::LabeledDataset& dataset, std::span<const std::size_t> indices) {
    std::vector<std::int64_t> labels;
    labels.reserve(indices.size());
    for (auto i : indices) labels.push_back(dataset[i].label);
    return torch::tensor(labels, torch::kInt64);
}

}  // namespace

std::pair<double, double> evaluate_loss_accuracy(ClassifierModel& model, const data::LabeledDataset& dataset,
                                                 std::int64_t batch_size) {
    if (dataset.empty()) throw ConfigError("cannot evaluate on an empty dataset");
    model.set_training(false);
    torch::NoGradGuard no_grad;
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::vector<std::size_t> indices;
    const auto step = static_cast<std::size_t>(batch_size);
    for (std::size_t begin = 0; begin < dataset.size(); begin += step) {
        indices.clear();
        for (auto i = begin; i < std::min(dataset.size(), begin + step); ++i) indices.push_back(i);
        const auto labels = label_tensor(dataset, indices);
        const auto logits = forward(model, classifier_batch(dataset, indices));
        loss_sum += cross_entropy(logits, labels).item<double>() * static_cast<double>(indices.size());
        correct += logits.argmax(1).eq(labels).sum().item<std::int64_t>();
    }
    const auto n = static_cast<double>(dataset.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainOutcome train_classifier(ClassifierModel& model, const data::LabeledDataset& train,
                              const data::LabeledDataset& validation, const ClassifierTrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw ConfigError("classifier training set is empty");
    if (validation.empty()) throw ConfigError("classifier validation set is empty");

    auto params = model.trainable_parameters();
    if (params.empty()) throw ConfigError("classifier has no trainable parameters");
    torch::optim::Adam optimizer(params, torch::optim::AdamOptions(cfg.learning_rate));

    if (cfg.calibrate_batch_norm && model.feature_extract && model.provenance == "random") {
        calibrate_batch_norm(model, train, cfg.batch_size);
    }

    TrainOutcome outcome;
    outcome.best_validation_accuracy = -1.0;
    std::int64_t global_step = 0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        util::Rng rng(util::derive_seed(cfg.seed, 200 + static_cast<std::uint64_t>(epoch)));
        const auto order = util::permutation(train.size(), rng);
        model.set_training(true);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const auto end = std::min(order.size(), begin + batch);
            std::vector<torch::Tensor> images;
            std::vector<std::size_t> indices(order.begin() + begin, order.begin() + end);
            for (auto i : indices) {
                auto x = data::conform(train[i].pixels, data::kClassifierShape);
                if (cfg.augment) x = data::augment(x, cfg.augmentation, rng);
                images.push_back(x);
            }
            const auto labels = label_tensor(train, indices);
            const auto logits = forward(model, torch::stack(images));
            const auto loss = cross_entropy(logits, labels);
            const double value = loss.item<double>();
            if (!std::isfinite(value)) {
                throw TrainingInstabilityError("non-finite classifier loss in epoch " + std::to_string(epoch),
                                               global_step);
            }
            optimizer.zero_grad();
            loss.backward();
            optimizer.step();
            ++global_step;

            loss_sum += value * static_cast<double>(indices.size());
            correct += logits.detach().argmax(1).eq(labels).sum().item<std::int64_t>();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train.size());
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
        std::tie(stats.validation_loss, stats.validation_accuracy) =
            evaluate_loss_accuracy(model, validation, cfg.batch_size);
        outcome.curve.epochs.push_back(stats);

        if (stats.validation_accuracy > outcome.best_validation_accuracy) {
            outcome.best_validation_accuracy = stats.validation_accuracy;
            outcome.best_epoch = epoch;
            model.best_state = model.trainable_state();
        }
        spdlog::info("{} epoch {}/{}: train loss {:.4f} acc {:.4f}, val loss {:.4f} acc {:.4f}",
                     to_string(model.backbone), epoch, cfg.epochs, stats.train_loss, stats.train_accuracy,
                     stats.validation_loss, stats.validation_accuracy);
    }
    model.set_training(false);
    return outcome;
}

}  // namespace cxrgan::clf
