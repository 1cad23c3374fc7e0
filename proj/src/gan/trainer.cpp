#include "cxrgan/gan/trainer.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <spdlog/spdlog.h>
#include <torch/torch.h>

#include <cmath>
#include <sstream>

#include "cxrgan/data/ingest.hpp"
#include "cxrgan/errors.hpp"
#include "cxrgan/gan/objectives.hpp"
#include "cxrgan/util/fs.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::gan {

namespace fs = std::filesystem;
using torch::serialize::InputArchive;
using torch::serialize::OutputArchive;

namespace {

constexpr std::int64_t kCheckpointVersion = 1;
constexpr std::int64_t kSnapshotCount = 16;

// Stream tags for util::derive_seed.
enum SeedTag : std::uint64_t { kGeneratorInit = 1, kCriticInit = 2, kNoise = 3, kSnapshot = 4, kShuffle = 100 };

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(10);
    out << v;
    return out.str();
}

torch::Tensor to_tensor(const std::vector<double>& values) {
    return torch::tensor(values, torch::kFloat64).clone();
}

std::vector<double> from_tensor(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat64).contiguous();
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

c10::IValue read_value(InputArchive& archive, const std::string& key) {
    c10::IValue value;
    archive.read(key, value);
    return value;
}

double mean_of(const std::vector<double>& v, std::size_t first) {
    double sum = 0.0;
    for (std::size_t i = first; i < v.size(); ++i) sum += v[i];
    return sum / static_cast<double>(v.size() - first);
}

}  // namespace

void GanTrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (n_critic < 1) throw ConfigError("n_critic must be at least 1");
    if (gp_weight < 0) throw ConfigError("gradient penalty weight must be non-negative");
    if (z_dim < 1 || hidden_dim < 1 || channels < 1) throw ConfigError("GAN dimensions must be positive");
    if (adam.lr_generator <= 0 || adam.lr_critic <= 0) throw ConfigError("learning rates must be positive");
    if (adam.beta1 < 0 || adam.beta1 >= 1 || adam.beta2 < 0 || adam.beta2 >= 1) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (snapshot_every < 0 || checkpoint_every < 0) throw ConfigError("cadences must be non-negative");
    if (max_generator_steps && *max_generator_steps < 0) throw ConfigError("max_generator_steps must be non-negative");
    stage_count(image_size);
}

std::string GanTrainConfig::fingerprint() const {
    std::ostringstream key;
    key.precision(17);
    key << "wgan-gp/v1;batch=" << batch_size << ";lr_g=" << adam.lr_generator << ";lr_c=" << adam.lr_critic
        << ";b1=" << adam.beta1 << ";b2=" << adam.beta2 << ";gp=" << gp_weight << ";n_critic=" << n_critic
        << ";z=" << z_dim << ";hidden=" << hidden_dim << ";size=" << image_size << ";channels=" << channels
        << ";seed=" << seed;
    return util::hex64(util::fnv1a64(key.str()));
}

GeneratorConfig GanTrainConfig::generator_config() const { return {z_dim, hidden_dim, channels, image_size}; }
CriticConfig GanTrainConfig::critic_config() const { return {channels, hidden_dim, image_size}; }

std::string GanTrainRecord::to_csv() const {
    std::string out = "step,critic_loss,generator_loss,gradient_penalty,wasserstein_estimate\n";
    for (const auto& s : steps) {
        out += std::to_string(s.step) + "," + format_double(s.critic_loss) + "," + format_double(s.generator_loss) +
               "," + format_double(s.gradient_penalty) + "," + format_double(s.wasserstein_estimate) + "\n";
    }
    return out;
}

WganTrainer::WganTrainer(GanTrainConfig config, data::LabeledDataset data)
    : config_(std::move(config)), data_(std::move(data)) {
    config_.validate();
    if (data_.empty()) throw ConfigError("GAN training data is empty");
    const int label = data_[0].label;
    for (const auto& s : data_.samples()) {
        if (s.label != label) throw ConfigError("GAN training data must hold a single class");
        if (s.pixels.dim() != 3 || s.pixels.size(0) != config_.channels || s.pixels.size(1) != config_.image_size ||
            s.pixels.size(2) != config_.image_size) {
            throw ShapeError("GAN training images must be " + std::to_string(config_.channels) + " x " +
                             std::to_string(config_.image_size) + " x " + std::to_string(config_.image_size));
        }
    }

    generator_ = build_generator(config_.generator_config());
    critic_ = build_critic(config_.critic_config());
    init_weights(*generator_, util::derive_seed(config_.seed, kGeneratorInit));
    init_weights(*critic_, util::derive_seed(config_.seed, kCriticInit));

    const std::vector<double> betas{config_.adam.beta1, config_.adam.beta2};
    opt_generator_ = std::make_unique<torch::optim::Adam>(
        generator_->parameters(),
        torch::optim::AdamOptions(config_.adam.lr_generator).betas({betas[0], betas[1]}));
    opt_critic_ = std::make_unique<torch::optim::Adam>(
        critic_->parameters(), torch::optim::AdamOptions(config_.adam.lr_critic).betas({betas[0], betas[1]}));

    noise_ = at::make_generator<at::CPUGeneratorImpl>(util::derive_seed(config_.seed, kNoise));
    auto snapshot_gen = at::make_generator<at::CPUGeneratorImpl>(util::derive_seed(config_.seed, kSnapshot));
    snapshot_noise_ = torch::randn({kSnapshotCount, config_.z_dim}, snapshot_gen);
    order_ = epoch_order(0);
}

std::int64_t WganTrainer::batches_per_epoch() const noexcept {
    const auto n = static_cast<std::int64_t>(data_.size());
    return (n + config_.batch_size - 1) / config_.batch_size;
}

bool WganTrainer::finished() const noexcept {
    if (config_.max_generator_steps && global_step_ >= *config_.max_generator_steps) return true;
    return epoch_ >= config_.epochs;
}

std::vector<std::size_t> WganTrainer::epoch_order(std::int64_t epoch) const {
    util::Rng rng(util::derive_seed(config_.seed, kShuffle + static_cast<std::uint64_t>(epoch)));
    return util::permutation(data_.size(), rng);
}

torch::Tensor WganTrainer::next_real_batch() {
    const auto n = static_cast<std::int64_t>(data_.size());
    const auto begin = batch_in_epoch_ * config_.batch_size;
    const auto end = std::min(n, begin + config_.batch_size);
    std::span<const std::size_t> slice(order_.data() + begin, static_cast<std::size_t>(end - begin));
    return data_.stack_pixels(slice);
}

GanStepRecord WganTrainer::step() {
    generator_->train();
    critic_->train();
    const auto step_index = global_step_ + 1;
    auto real = next_real_batch();
    const auto batch = real.size(0);
    const auto first_critic = record_.critic_losses.size();

    ScoreFn critic_fn = [this](const torch::Tensor& x) { return critic_->forward(x); };
    for (std::int64_t k = 0; k < config_.n_critic; ++k) {
        opt_critic_->zero_grad();
        torch::Tensor fake;
        {
            torch::NoGradGuard no_grad;
            fake = generator_->forward(torch::randn({batch, config_.z_dim}, noise_));
        }
        auto fake_scores = critic_->forward(fake);
        auto real_scores = critic_->forward(real);
        auto epsilon = torch::rand({batch}, noise_);
        auto mixed = interpolate(real, fake, epsilon);
        auto gp = gradient_penalty(critic_fn, mixed, step_index);
        auto loss = critic_loss(real_scores, fake_scores, gp, config_.gp_weight);

        const double loss_value = loss.item<double>();
        if (!std::isfinite(loss_value)) throw TrainingInstabilityError("non-finite critic loss", step_index);
        loss.backward();
        opt_critic_->step();

        record_.critic_losses.push_back(loss_value);
        record_.gradient_penalties.push_back(gp.item<double>());
        record_.wasserstein_estimates.push_back(wasserstein_estimate(real_scores.detach(), fake_scores.detach()));
    }

    opt_generator_->zero_grad();
    auto fake = generator_->forward(torch::randn({batch, config_.z_dim}, noise_));
    auto g_loss = generator_loss(critic_->forward(fake));
    const double g_value = g_loss.item<double>();
    if (!std::isfinite(g_value)) throw TrainingInstabilityError("non-finite generator loss", step_index);
    g_loss.backward();
    opt_generator_->step();
    record_.generator_losses.push_back(g_value);

    GanStepRecord rec;
    rec.step = step_index;
    rec.epoch = epoch_ + 1;
    rec.critic_loss = mean_of(record_.critic_losses, first_critic);
    rec.generator_loss = g_value;
    rec.gradient_penalty = mean_of(record_.gradient_penalties, first_critic);
    rec.wasserstein_estimate = mean_of(record_.wasserstein_estimates, first_critic);
    record_.steps.push_back(rec);

    global_step_ = step_index;
    if (++batch_in_epoch_ == batches_per_epoch()) {
        ++epoch_;
        batch_in_epoch_ = 0;
        order_ = epoch_order(epoch_);
    }
    return rec;
}

torch::Tensor WganTrainer::snapshot_images() {
    torch::NoGradGuard no_grad;
    const bool was_training = generator_->is_training();
    generator_->eval();
    auto images = generator_->forward(snapshot_noise_);
    generator_->train(was_training);
    return images;
}

void WganTrainer::write_epoch_artifacts(const TrainerOutputs& outputs) {
    const auto tag = std::to_string(epoch_);
    if (!outputs.snapshot_dir.empty() && config_.snapshot_every > 0 && epoch_ % config_.snapshot_every == 0) {
        data::write_png(outputs.snapshot_dir / ("epoch_" + tag + ".png"), make_grid(snapshot_images(), 4));
    }
    if (!outputs.checkpoint_dir.empty() && config_.checkpoint_every > 0 && epoch_ % config_.checkpoint_every == 0) {
        save_checkpoint(outputs.checkpoint_dir / ("epoch_" + tag + ".ckpt"));
        save_generator_artifact(outputs.checkpoint_dir / ("generator_epoch_" + tag + ".pt"), generator_, epoch_,
                                config_);
    }
}

void WganTrainer::run(const TrainerOutputs& outputs) {
    auto write_losses = [&] {
        if (!outputs.loss_csv.empty()) util::atomic_write(outputs.loss_csv, record_.to_csv());
    };
    try {
        while (!finished()) {
            const auto before = epoch_;
            const auto rec = step();
            if (rec.step % 50 == 0) {
                spdlog::debug("step {} critic {:.4f} generator {:.4f} gp {:.4f} w {:.4f}", rec.step, rec.critic_loss,
                              rec.generator_loss, rec.gradient_penalty, rec.wasserstein_estimate);
            }
            if (epoch_ != before) write_epoch_artifacts(outputs);
        }
    } catch (const TrainingInstabilityError&) {
        if (!outputs.checkpoint_dir.empty()) save_checkpoint(outputs.checkpoint_dir / "diagnostic.ckpt");
        write_losses();
        throw;
    }
    if (!outputs.checkpoint_dir.empty()) {
        save_checkpoint(outputs.checkpoint_dir / "last.ckpt");
        save_generator_artifact(outputs.checkpoint_dir / ("generator_epoch_" + std::to_string(epoch_) + ".pt"),
                                generator_, epoch_, config_);
    }
    write_losses();
}

void WganTrainer::save_checkpoint(const fs::path& path) const {
    OutputArchive archive;
    archive.write("version", c10::IValue(kCheckpointVersion));
    archive.write("fingerprint", c10::IValue(config_.fingerprint()));

    OutputArchive gen_archive, critic_archive, opt_gen_archive, opt_critic_archive;
    generator_->save(gen_archive);
    critic_->save(critic_archive);
    opt_generator_->save(opt_gen_archive);
    opt_critic_->save(opt_critic_archive);
    archive.write("generator", gen_archive);
    archive.write("critic", critic_archive);
    archive.write("opt_generator", opt_gen_archive);
    archive.write("opt_critic", opt_critic_archive);

    archive.write("rng", noise_.get_state());
    archive.write("counters", torch::tensor({epoch_, batch_in_epoch_, global_step_}, torch::kInt64));

    archive.write("record_critic", to_tensor(record_.critic_losses));
    archive.write("record_gp", to_tensor(record_.gradient_penalties));
    archive.write("record_w", to_tensor(record_.wasserstein_estimates));
    archive.write("record_generator", to_tensor(record_.generator_losses));
    std::vector<double> steps;
    for (const auto& s : record_.steps) {
        steps.insert(steps.end(), {static_cast<double>(s.step), static_cast<double>(s.epoch), s.critic_loss,
                                   s.generator_loss, s.gradient_penalty, s.wasserstein_estimate});
    }
    archive.write("record_steps", to_tensor(steps));

    util::atomic_write_with(path, [&](const fs::path& tmp) { archive.save_to(tmp.string()); });
}

void WganTrainer::load_checkpoint(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw MissingArtifactError("checkpoint not found: " + path.string());
    InputArchive archive;
    archive.load_from(path.string());
    if (read_value(archive, "version").toInt() != kCheckpointVersion) {
        throw FingerprintError("unsupported checkpoint version in " + path.string());
    }
    const auto stored = read_value(archive, "fingerprint").toStringRef();
    if (stored != config_.fingerprint()) {
        throw FingerprintError("checkpoint " + path.string() + " was written with config " + stored +
                               ", current config is " + config_.fingerprint());
    }

    InputArchive gen_archive, critic_archive, opt_gen_archive, opt_critic_archive;
    archive.read("generator", gen_archive);
    archive.read("critic", critic_archive);
    archive.read("opt_generator", opt_gen_archive);
    archive.read("opt_critic", opt_critic_archive);
    generator_->load(gen_archive);
    critic_->load(critic_archive);
    opt_generator_->load(opt_gen_archive);
    opt_critic_->load(opt_critic_archive);

    torch::Tensor rng_state, counters;
    archive.read("rng", rng_state);
    noise_.set_state(rng_state);
    archive.read("counters", counters);
    epoch_ = counters[0].item<std::int64_t>();
    batch_in_epoch_ = counters[1].item<std::int64_t>();
    global_step_ = counters[2].item<std::int64_t>();
    order_ = epoch_order(epoch_);

    torch::Tensor t;
    archive.read("record_critic", t);
    record_.critic_losses = from_tensor(t);
    archive.read("record_gp", t);
    record_.gradient_penalties = from_tensor(t);
    archive.read("record_w", t);
    record_.wasserstein_estimates = from_tensor(t);
    archive.read("record_generator", t);
    record_.generator_losses = from_tensor(t);
    archive.read("record_steps", t);
    const auto flat = from_tensor(t);
    record_.steps.clear();
    for (std::size_t i = 0; i + 5 < flat.size(); i += 6) {
        record_.steps.push_back({static_cast<std::int64_t>(flat[i]), static_cast<std::int64_t>(flat[i + 1]),
                                 flat[i + 2], flat[i + 3], flat[i + 4], flat[i + 5]});
    }
}

void save_generator_artifact(const fs::path& path, Generator generator, std::int64_t epoch,
                             const GanTrainConfig& config) {
    OutputArchive archive;
    archive.write("version", c10::IValue(kCheckpointVersion));
    archive.write("fingerprint", c10::IValue(config.fingerprint()));
    archive.write("epoch", c10::IValue(epoch));
    OutputArchive gen_archive;
    generator->save(gen_archive);
    archive.write("generator", gen_archive);
    util::atomic_write_with(path, [&](const fs::path& tmp) { archive.save_to(tmp.string()); });
}

GeneratorArtifact load_generator_artifact(const fs::path& path, const GanTrainConfig& config) {
    if (!fs::is_regular_file(path)) throw MissingArtifactError("generator artifact not found: " + path.string());
    InputArchive archive;
    archive.load_from(path.string());
    GeneratorArtifact out;
    out.fingerprint = read_value(archive, "fingerprint").toStringRef();
    if (out.fingerprint != config.fingerprint()) {
        throw FingerprintError("generator " + path.string() + " was trained under a different config");
    }
    out.epoch = read_value(archive, "epoch").toInt();
    out.generator = build_generator(config.generator_config());
    InputArchive gen_archive;
    archive.read("generator", gen_archive);
    out.generator->load(gen_archive);
    out.generator->eval();
    return out;
}

Critic load_critic_from_checkpoint(const fs::path& path, const GanTrainConfig& config) {
    if (!fs::is_regular_file(path)) throw MissingArtifactError("checkpoint not found: " + path.string());
    InputArchive archive;
    archive.load_from(path.string());
    if (read_value(archive, "fingerprint").toStringRef() != config.fingerprint()) {
        throw FingerprintError("checkpoint " + path.string() + " was trained under a different config");
    }
    auto critic = build_critic(config.critic_config());
    InputArchive critic_archive;
    archive.read("critic", critic_archive);
    critic->load(critic_archive);
    critic->eval();
    return critic;
}

torch::Tensor make_grid(const torch::Tensor& images, std::int64_t columns) {
    if (images.dim() != 4 || columns < 1) throw ShapeError("make_grid expects B x C x H x W images");
    constexpr std::int64_t pad = 2;
    const auto b = images.size(0), c = images.size(1), h = images.size(2), w = images.size(3);
    const auto cols = std::min(columns, std::max<std::int64_t>(b, 1));
    const auto rows = (b + cols - 1) / cols;
    auto grid = torch::full({c, rows * (h + pad) + pad, cols * (w + pad) + pad}, -1.0f);
    for (std::int64_t i = 0; i < b; ++i) {
        const auto top = pad + (i / cols) * (h + pad);
        const auto left = pad + (i % cols) * (w + pad);
        grid.narrow(1, top, h).narrow(2, left, w).copy_(images[i].detach());
    }
    return grid;
}

}  // namespace cxrgan::gan
