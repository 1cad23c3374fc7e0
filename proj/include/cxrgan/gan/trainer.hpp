#pragma once

#include <ATen/core/Generator.h>
#include <torch/optim/adam.h>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cxrgan/data/dataset.hpp"
#include "cxrgan/gan/models.hpp"

namespace cxrgan::gan {

struct AdamSettings {
    double lr_generator = 2e-4;
    double lr_critic = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.0009;  // as tabulated; conventional WGAN-GP runs use 0.9
};

struct GanTrainConfig {
    std::int64_t epochs = 2000;
    std::int64_t batch_size = 20;
    AdamSettings adam;
    double gp_weight = 10.0;
    std::int64_t n_critic = 5;
    std::int64_t z_dim = 128;
    std::int64_t hidden_dim = 64;
    std::int64_t image_size = 128;
    std::int64_t channels = 1;
    std::uint64_t seed = 0;
    std::int64_t snapshot_every = 0;    // epochs; 0 disables snapshot grids
    std::int64_t checkpoint_every = 0;  // epochs; 0 keeps only the final checkpoint
    std::optional<std::int64_t> max_generator_steps;

    /// Throws ConfigError on an invalid combination.
    void validate() const;

    /// Hash of every field that shapes the training trajectory. Run length and output
    /// cadence are excluded so a run can be resumed with a longer schedule.
    std::string fingerprint() const;

    GeneratorConfig generator_config() const;
    CriticConfig critic_config() const;
};

/// Losses of one generator step. Critic-side values average that step's n_critic updates.
struct GanStepRecord {
    std::int64_t step = 0;  // 1-based generator update index
    std::int64_t epoch = 0;
    double critic_loss = 0.0;
    double generator_loss = 0.0;
    double gradient_penalty = 0.0;
    double wasserstein_estimate = 0.0;
};

struct GanTrainRecord {
    // One entry per critic update.
    std::vector<double> critic_losses;
    std::vector<double> gradient_penalties;
    std::vector<double> wasserstein_estimates;
    // One entry per generator update.
    std::vector<double> generator_losses;
    std::vector<GanStepRecord> steps;

    std::int64_t critic_updates() const noexcept { return static_cast<std::int64_t>(critic_losses.size()); }
    std::int64_t generator_updates() const noexcept { return static_cast<std::int64_t>(generator_losses.size()); }

    /// step,critic_loss,generator_loss,gradient_penalty,wasserstein_estimate
    std::string to_csv() const;
};

/// Where a run writes its artifacts; all optional.
struct TrainerOutputs {
    std::filesystem::path checkpoint_dir;  // last.ckpt, epoch_<n>.ckpt, generator_epoch_<n>.pt
    std::filesystem::path snapshot_dir;    // epoch_<n>.png (4x4 grid)
    std::filesystem::path loss_csv;
};

/// WGAN-GP training state for one image class: both networks, both Adam optimizers, the noise
/// stream, data position and loss history. Each step() runs n_critic critic updates followed
/// by one generator update on the next real batch.
class WganTrainer {
public:
    /// `data` must be non-empty, single-class, channels x image_size x image_size in [-1, 1].
    WganTrainer(GanTrainConfig config, data::LabeledDataset data);

    /// Restores a checkpoint. Throws FingerprintError if it was written under another config.
    void load_checkpoint(const std::filesystem::path& path);
    /// Atomic write (temp file, then rename).
    void save_checkpoint(const std::filesystem::path& path) const;

    /// One generator update preceded by n_critic critic updates.
    GanStepRecord step();

    /// Trains until `epochs` complete or `max_generator_steps` is reached, writing snapshots
    /// and checkpoints per the configured cadence and a final checkpoint on exit. On a
    /// non-finite loss, writes `diagnostic.ckpt` with the last finite state and rethrows.
    void run(const TrainerOutputs& outputs = {});

    const GanTrainConfig& config() const noexcept { return config_; }
    const GanTrainRecord& record() const noexcept { return record_; }
    Generator generator() const { return generator_; }
    Critic critic() const { return critic_; }
    std::int64_t epoch() const noexcept { return epoch_; }  // completed epochs
    std::int64_t global_step() const noexcept { return global_step_; }
    std::int64_t batches_per_epoch() const noexcept;
    bool finished() const noexcept;

    /// 16 images from a fixed noise batch, in inference mode.
    torch::Tensor snapshot_images();

private:
    std::vector<std::size_t> epoch_order(std::int64_t epoch) const;
    torch::Tensor next_real_batch();
    void finish_epoch_if_needed(const TrainerOutputs& outputs);
    void write_epoch_artifacts(const TrainerOutputs& outputs);

    GanTrainConfig config_;
    data::LabeledDataset data_;
    Generator generator_{nullptr};
    Critic critic_{nullptr};
    std::unique_ptr<torch::optim::Adam> opt_generator_;
    std::unique_ptr<torch::optim::Adam> opt_critic_;
    at::Generator noise_;
    torch::Tensor snapshot_noise_;
    GanTrainRecord record_;
    std::int64_t epoch_ = 0;
    std::int64_t batch_in_epoch_ = 0;
    std::int64_t global_step_ = 0;
    std::vector<std::size_t> order_;
};

/// Standalone generator weights for one epoch, written by WganTrainer::run.
struct GeneratorArtifact {
    Generator generator{nullptr};
    std::int64_t epoch = 0;
    std::string fingerprint;
};

void save_generator_artifact(const std::filesystem::path& path, Generator generator, std::int64_t epoch,
                             const GanTrainConfig& config);
/// Throws MissingArtifactError if the file is absent.
GeneratorArtifact load_generator_artifact(const std::filesystem::path& path, const GanTrainConfig& config);

/// Critic weights from a training checkpoint.
Critic load_critic_from_checkpoint(const std::filesystem::path& path, const GanTrainConfig& config);

/// Tiles B x C x H x W images into one image, with a 2-pixel black border around each tile.
torch::Tensor make_grid(const torch::Tensor& images, std::int64_t columns);

}  // namespace cxrgan::gan
