// Command-line front end: prepare, train-gan, generate, train-clf, evaluate.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cxrgan/errors.hpp"
#include "cxrgan/pipeline/commands.hpp"
#include "cxrgan/pipeline/config.hpp"

namespace {

using cxrgan::pipeline::CommandOptions;
using cxrgan::pipeline::Overrides;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kFingerprint = 3, kMissing = 4 };

struct Invocation {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> snapshot_every;
    std::optional<std::int64_t> n;
    std::optional<std::string> class_name;
    std::optional<std::string> backbone;
    std::optional<std::string> resume;
    std::optional<std::string> predictions;
    bool parallel = false;
};

int run(const std::string& command, const Invocation& inv) {
    Overrides overrides{inv.seed, inv.epochs, inv.snapshot_every, inv.n};
    const auto cfg = cxrgan::pipeline::load_config(inv.config, overrides);
    CommandOptions options;
    options.class_name = inv.class_name;
    options.backbone = inv.backbone;
    if (inv.resume) options.resume = *inv.resume;
    if (inv.predictions) options.predictions = *inv.predictions;
    options.parallel_classes = inv.parallel;

    spdlog::info("{}: output root {}", command, cfg.paths.output.string());
    if (command == "prepare") cxrgan::pipeline::cmd_prepare(cfg);
    if (command == "train-gan") cxrgan::pipeline::cmd_train_gan(cfg, options);
    if (command == "generate") cxrgan::pipeline::cmd_generate(cfg, options);
    if (command == "train-clf") cxrgan::pipeline::cmd_train_clf(cfg, options);
    if (command == "evaluate") cxrgan::pipeline::cmd_evaluate(cfg, options);
    return kOk;
}

int fail(int code, const std::exception& e) {
    spdlog::error("{}", e.what());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("cxrgan"));
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

    CLI::App app{"WGAN-GP augmentation and transfer-learning pipeline for chest radiographs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CXRGAN_VERSION));
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    Invocation inv;
    auto add = [&](const std::string& name, const std::string& about) {
        auto* sub = app.add_subcommand(name, about);
        sub->add_option("--config", inv.config, "Pipeline config (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", inv.seed, "Master seed; replaces every seed in the config");
        return sub;
    };
    add("prepare", "Normalize the real image trees into <output>/prepared");
    auto* gan = add("train-gan", "Train one WGAN-GP per class");
    gan->add_option("--epochs", inv.epochs, "Epochs per class");
    gan->add_option("--class", inv.class_name, "Train only this class");
    gan->add_option("--resume", inv.resume, "Continue from a checkpoint (needs --class with several classes)");
    gan->add_option("--snapshot-every", inv.snapshot_every, "Epochs between snapshot grids");
    gan->add_flag("--parallel", inv.parallel, "Train classes concurrently");
    auto* gen = add("generate", "Sample generators and keep the selected images");
    gen->add_option("--class", inv.class_name, "Generate only this class");
    gen->add_option("--n", inv.n, "Images to keep per class");
    auto* clf = add("train-clf", "Train the transfer-learning classifiers");
    clf->add_option("--backbone", inv.backbone, "vgg16 | resnet50 | googlenet | mnasnet");
    clf->add_option("--epochs", inv.epochs, "Training epochs");
    auto* ev = add("evaluate", "Evaluate trained classifiers on the test set");
    ev->add_option("--backbone", inv.backbone, "vgg16 | resnet50 | googlenet | mnasnet");
    ev->add_option("--predictions", inv.predictions, "Score a prediction CSV (truth,predicted,p0..) instead of a model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    const auto* chosen = app.get_subcommands().front();
    try {
        return run(chosen->get_name(), inv);
    } catch (const cxrgan::ConfigError& e) {
        return fail(kConfig, e);
    } catch (const cxrgan::ChecksumError& e) {
        return fail(kConfig, e);
    } catch (const cxrgan::FingerprintError& e) {
        return fail(kFingerprint, e);
    } catch (const cxrgan::MissingArtifactError& e) {
        return fail(kMissing, e);
    } catch (const std::exception& e) {
        return fail(kFailure, e);
    }
}
