#include "cxrgan/pipeline/commands.hpp"

#include <torch/torch.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "cxrgan/data/ingest.hpp"
#include "cxrgan/errors.hpp"
#include "cxrgan/metrics/report.hpp"
#include "cxrgan/pipeline/manifest.hpp"
#include "cxrgan/pipeline/plots.hpp"
#include "cxrgan/util/fs.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> files_under(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// SHA-256 over the sorted (relative path, file digest) list of a directory tree.
std::string directory_digest(const fs::path& dir) {
    std::string listing;
    for (const auto& f : files_under(dir)) {
        listing += fs::relative(f, dir).generic_string() + ':' + util::sha256_file(f) + '\n';
    }
    return util::sha256_hex(listing);
}

void reset_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

std::string image_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%06zu.png", index);
    return buf;
}

data::Shape3 stored_shape(const PipelineConfig& cfg) {
    return {cfg.prepare.channels, cfg.prepare.image_size, cfg.prepare.image_size};
}

void require_dir(const fs::path& dir, const std::string& hint) {
    if (!fs::is_directory(dir)) throw MissingArtifactError(dir.string() + " is missing; " + hint);
}

std::vector<data::ClassLabel> selected_classes(const PipelineConfig& cfg, const CommandOptions& options) {
    if (!options.class_name) return cfg.labels.labels();
    return {cfg.labels[cfg.labels.id_of(*options.class_name)]};
}

std::vector<BackboneSettings> selected_backbones(const PipelineConfig& cfg, const CommandOptions& options) {
    if (!options.backbone) return cfg.classifier.backbones;
    return {cfg.classifier.find(clf::parse_backbone(*options.backbone))};
}

data::LabeledDataset load_tree(const fs::path& root, const PipelineConfig& cfg, data::Shape3 shape,
                               data::DatasetRole role, data::SampleSource source) {
    data::IngestOptions opts;
    opts.target = shape;
    opts.role = role;
    opts.source = source;
    auto result = data::ingest_directory(root, cfg.labels, opts);
    if (!result.skipped.empty()) spdlog::warn("{} undecodable file(s) skipped under {}", result.skipped.size(), root.string());
    return std::move(result.dataset);
}

// ---------------------------------------------------------------- prepare

void write_split(const data::LabeledDataset& ds, const fs::path& root, const data::LabelSet& labels) {
    for (const auto& label : labels.labels()) fs::create_directories(root / label.name);
    std::set<fs::path> used;
    for (const auto& s : ds.samples()) {
        const auto dir = root / labels[s.label].name;
        const auto stem = fs::path(s.origin).stem().string();
        auto target = dir / (stem + ".png");
        for (int k = 1; used.count(target); ++k) target = dir / (stem + "_" + std::to_string(k) + ".png");
        used.insert(target);
        data::write_png(target, s.pixels);
    }
}

std::string counts_row(const std::string& name, const std::vector<std::size_t>& counts) {
    std::string row = name;
    std::size_t total = 0;
    for (auto c : counts) {
        row += "," + std::to_string(c);
        total += c;
    }
    return row + "," + std::to_string(total) + "\n";
}

// ---------------------------------------------------------------- train-gan

void train_one_class(const PipelineConfig& cfg, const data::LabeledDataset& prepared, const data::ClassLabel& label,
                     const CommandOptions& options) {
    const auto started = utc_timestamp();
    const auto& g = cfg.gan_for(label.name);
    auto class_data = prepared.only_class(label.id);
    if (class_data.empty()) {
        throw MissingArtifactError("no prepared training images for class " + label.name + "; run prepare first");
    }
    const auto dir = cfg.gan_dir(label.name);
    gan::WganTrainer trainer(g, std::move(class_data));
    if (options.resume) {
        trainer.load_checkpoint(*options.resume);
        spdlog::info("{}: resumed at generator step {} (epoch {})", label.name, trainer.global_step(), trainer.epoch());
    } else {
        reset_dir(dir);
    }
    gan::TrainerOutputs outputs{dir / "checkpoints", dir / "snapshots", dir / "losses.csv"};
    fs::create_directories(outputs.checkpoint_dir);
    if (g.snapshot_every > 0) fs::create_directories(outputs.snapshot_dir);
    spdlog::info("{}: training WGAN-GP for {} epochs ({} batches each)", label.name, g.epochs,
                 trainer.batches_per_epoch());
    trainer.run(outputs);

    LineChart chart{"WGAN-GP losses: " + label.name, "generator step", "loss", {}};
    Series critic{"critic", {}, {}}, generator{"generator", {}, {}};
    for (const auto& s : trainer.record().steps) {
        critic.x.push_back(static_cast<double>(s.step));
        critic.y.push_back(s.critic_loss);
        generator.x.push_back(static_cast<double>(s.step));
        generator.y.push_back(s.generator_loss);
    }
    chart.series = {critic, generator};
    plot_lines(dir / "losses.png", chart);

    CommandRecord rec;
    rec.command = "train-gan:" + label.name;
    rec.fingerprint = cfg.fingerprint();
    rec.started_at = started;
    rec.seeds = {{"gan", g.seed}};
    rec.inputs[fs::relative(cfg.prepared_dir() / "train" / label.name, cfg.paths.output).generic_string()] =
        directory_digest(cfg.prepared_dir() / "train" / label.name);
    rec.artifacts = files_under(dir);
    update_manifest(cfg.paths.output, rec);
}

// ---------------------------------------------------------------- generate

std::vector<std::pair<std::int64_t, fs::path>> generator_artifacts(const fs::path& dir) {
    static const std::regex pattern(R"(generator_epoch_(\d+)\.pt)");
    std::vector<std::pair<std::int64_t, fs::path>> out;
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            std::smatch m;
            const auto name = e.path().filename().string();
            if (std::regex_match(name, m, pattern)) out.emplace_back(std::stoll(m[1].str()), e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_images(const fs::path& dir, const std::vector<data::ImageSample>& samples) {
    reset_dir(dir);
    for (std::size_t i = 0; i < samples.size(); ++i) data::write_png(dir / image_name(i), samples[i].pixels);
}

// ---------------------------------------------------------------- train-clf / evaluate

nlohmann::json curve_point(const clf::EpochStats& e) {
    return {{"epoch", e.epoch}, {"train_accuracy", e.train_accuracy}, {"validation_accuracy", e.validation_accuracy}};
}

data::LabeledDataset test_dataset(const PipelineConfig& cfg) {
    if (cfg.evaluation.test_source == DataSource::Real) {
        const auto dir = cfg.prepared_dir() / "test";
        require_dir(dir, "run prepare with paths.real_test set");
        return load_tree(dir, cfg, stored_shape(cfg), data::DatasetRole::Test, data::SampleSource::Real);
    }
    const auto dir = cfg.synthetic_dir() / kHoldoutDir;
    require_dir(dir, "run generate with generation.holdout_count > 0");
    return load_tree(dir, cfg, stored_shape(cfg), data::DatasetRole::Test, data::SampleSource::Synthetic);
}

std::string accuracy_cell(const nlohmann::json& v) {
    if (v.is_null()) return "";
    std::ostringstream os;
    os.precision(10);
    os << v.get<double>();
    return os.str();
}

void evaluate_one(const PipelineConfig& cfg, const std::string& name, const metrics::PredictionSet& predictions,
                  const nlohmann::json& summary_in, std::vector<fs::path>& artifacts) {
    const auto k = cfg.labels.size();
    metrics::validate(predictions, k);
    const auto dir = cfg.eval_dir(name);
    reset_dir(dir);
    const auto names = cfg.labels.names();

    const auto cm = metrics::confusion_matrix(predictions, k, names);
    const auto report = metrics::classification_report(cm);

    nlohmann::json roc = nlohmann::json::object();
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& label : cfg.labels.labels()) {
        const auto positives = cm.row_sum(label.id);
        if (positives == 0 || positives == cm.total()) {
            spdlog::warn("{}: class {} has {} in the test set; ROC skipped", name, label.name,
                         positives == 0 ? "no samples" : "no negatives");
            skipped.push_back(label.name);
            continue;
        }
        const auto curve = metrics::roc_curve(predictions, label.id, label.name);
        roc[label.name] = curve.auc;
        const auto csv = dir / ("roc_" + label.name + ".csv");
        const auto png = dir / ("roc_" + label.name + ".png");
        util::atomic_write(csv, metrics::to_csv(curve));
        plot_roc(png, curve, "ROC " + name + ": " + label.name);
        artifacts.insert(artifacts.end(), {csv, png});
    }

    auto summary = summary_in;
    summary["testing_accuracy"] = metrics::accuracy(cm);

    nlohmann::json metrics_json;
    metrics_json["name"] = name;
    metrics_json["test_source"] = to_string(cfg.evaluation.test_source);
    metrics_json["num_samples"] = predictions.size();
    metrics_json["accuracy"] = metrics::accuracy(cm);
    metrics_json["classification_report"] = metrics::to_json(report);
    metrics_json["confusion_matrix"] = metrics::to_json(cm);
    metrics_json["roc_auc"] = roc;
    metrics_json["roc_skipped"] = skipped;
    metrics_json["summary"] = summary;

    const std::vector<std::pair<fs::path, std::string>> files = {
        {dir / "metrics.json", metrics_json.dump(2) + "\n"},
        {dir / "report.txt", metrics::render_text(report)},
        {dir / "confusion_matrix.json", metrics::to_json(cm).dump(2) + "\n"},
        {dir / "predictions.csv", metrics::to_csv(predictions, k)},
        {dir / "summary.csv", "name,training_accuracy,testing_accuracy,validation_accuracy\n" + name + "," +
                                  accuracy_cell(summary["training_accuracy"]) + "," +
                                  accuracy_cell(summary["testing_accuracy"]) + "," +
                                  accuracy_cell(summary["validation_accuracy"]) + "\n"},
    };
    for (const auto& [path, text] : files) {
        util::atomic_write(path, text);
        artifacts.push_back(path);
    }
    plot_confusion_matrix(dir / "confusion_matrix.png", cm, "Confusion matrix: " + name);
    artifacts.push_back(dir / "confusion_matrix.png");
    spdlog::info("{}: accuracy {:.4f} on {} test images\n{}", name, metrics::accuracy(cm), predictions.size(),
                 metrics::render_text(report));
}

}  // namespace

void cmd_prepare(const PipelineConfig& cfg) {
    const auto started = utc_timestamp();
    std::vector<std::pair<std::string, fs::path>> splits{{"train", cfg.paths.real_train}};
    if (cfg.paths.real_test) splits.emplace_back("test", *cfg.paths.real_test);

    // Everything that can be checked is checked before the output tree is touched.
    for (const auto& [split, root] : splits) {
        for (const auto& label : cfg.labels.labels()) {
            if (!fs::is_directory(root / label.name)) {
                throw ConfigError("missing class directory: " + (root / label.name).string());
            }
        }
    }
    std::optional<std::vector<std::string>> allow;
    if (cfg.paths.metadata) {
        const auto& m = *cfg.paths.metadata;
        allow = data::filter_metadata(m.csv, m.view_column, m.view_value, m.filename_column);
        spdlog::info("metadata filter {}={} keeps {} file name(s)", m.view_column, m.view_value, allow->size());
    }

    std::vector<std::pair<std::string, data::LabeledDataset>> loaded;
    CommandRecord rec;
    for (const auto& [split, root] : splits) {
        data::IngestOptions opts;
        opts.target = stored_shape(cfg);
        opts.role = split == "train" ? data::DatasetRole::Train : data::DatasetRole::Test;
        opts.allow_list = allow;
        auto result = data::ingest_directory(root, cfg.labels, opts);
        if (!result.skipped.empty()) {
            spdlog::warn("{}: {} undecodable file(s) skipped", split, result.skipped.size());
        }
        loaded.emplace_back(split, std::move(result.dataset));
        for (const auto& label : cfg.labels.labels()) {
            rec.inputs[split + "/" + label.name] = directory_digest(root / label.name);
        }
    }

    const auto out = cfg.prepared_dir();
    reset_dir(out);
    std::string counts = "split";
    for (const auto& n : cfg.labels.names()) counts += "," + n;
    counts += ",total\n";
    for (const auto& [split, ds] : loaded) {
        write_split(ds, out / split, cfg.labels);
        counts += counts_row(split, ds.class_counts());
        const auto c = ds.class_counts();
        for (const auto& label : cfg.labels.labels()) spdlog::info("{} {}: {} image(s)", split, label.name, c[label.id]);
    }
    util::atomic_write(out / "counts.csv", counts);

    rec.command = "prepare";
    rec.fingerprint = cfg.fingerprint();
    rec.started_at = started;
    rec.artifacts = files_under(out);
    update_manifest(cfg.paths.output, rec);
}

void cmd_train_gan(const PipelineConfig& cfg, const CommandOptions& options) {
    const auto classes = selected_classes(cfg, options);
    if (options.resume && classes.size() != 1) throw ConfigError("--resume needs --class when several classes exist");
    const auto train_dir = cfg.prepared_dir() / "train";
    require_dir(train_dir, "run prepare first");

    // Classes may use different resolutions; load each distinct shape once.
    std::map<std::pair<std::int64_t, std::int64_t>, data::LabeledDataset> by_shape;
    for (const auto& label : classes) {
        const auto& g = cfg.gan_for(label.name);
        const auto key = std::make_pair(g.channels, g.image_size);
        if (!by_shape.count(key)) {
            by_shape.emplace(key, load_tree(train_dir, cfg, {g.channels, g.image_size, g.image_size},
                                            data::DatasetRole::Train, data::SampleSource::Real));
        }
    }
    auto dataset_for = [&](const data::ClassLabel& label) -> const data::LabeledDataset& {
        const auto& g = cfg.gan_for(label.name);
        return by_shape.at({g.channels, g.image_size});
    };

    if (!(options.parallel_classes || cfg.parallel_classes) || classes.size() < 2) {
        for (const auto& label : classes) train_one_class(cfg, dataset_for(label), label, options);
        return;
    }
    std::vector<std::exception_ptr> errors(classes.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        workers.emplace_back([&, i] {
            try {
                train_one_class(cfg, dataset_for(classes[i]), classes[i], options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void cmd_generate(const PipelineConfig& cfg, const CommandOptions& options) {
    const auto classes = selected_classes(cfg, options);
    // Resolve every prerequisite first so a missing artifact leaves the tree untouched.
    std::vector<std::vector<std::pair<std::int64_t, fs::path>>> artifacts;
    for (const auto& label : classes) {
        auto found = generator_artifacts(cfg.gan_dir(label.name) / "checkpoints");
        const bool needed = cfg.count_for(label.name) > 0 || cfg.generation.holdout_count > 0;
        if (found.empty() && needed) {
            throw MissingArtifactError("no generator artifact for class " + label.name + " under " +
                                       (cfg.gan_dir(label.name) / "checkpoints").string() + "; run train-gan first");
        }
        if (cfg.generation.from_last_epochs > 0 &&
            found.size() > static_cast<std::size_t>(cfg.generation.from_last_epochs)) {
            found.erase(found.begin(), found.end() - cfg.generation.from_last_epochs);
        }
        if (cfg.generation.strategy == gan::SelectionStrategy::CriticScore && cfg.count_for(label.name) > 0 &&
            !fs::is_regular_file(cfg.gan_dir(label.name) / "checkpoints" / "last.ckpt")) {
            throw MissingArtifactError("critic checkpoint missing for class " + label.name);
        }
        artifacts.push_back(std::move(found));
    }

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const auto started = utc_timestamp();
        const auto& label = classes[ci];
        const auto& g = cfg.gan_for(label.name);
        const auto n = cfg.count_for(label.name);
        const auto per_epoch = cfg.generation.pool_per_epoch > 0 ? cfg.generation.pool_per_epoch : n;
        CommandRecord rec;

        std::vector<gan::GeneratedImage> pool;
        if (n > 0) {
            for (const auto& [epoch, path] : artifacts[ci]) {
                auto artifact = gan::load_generator_artifact(path, g);
                auto batch = gan::generate_tagged(artifact.generator, per_epoch,
                                                  util::derive_seed(cfg.generation_seed(label.id), epoch), label.id,
                                                  epoch);
                pool.insert(pool.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
                rec.inputs[fs::relative(path, cfg.paths.output).generic_string()] = util::sha256_file(path);
            }
            if (cfg.generation.strategy == gan::SelectionStrategy::CriticScore) {
                const auto ckpt = cfg.gan_dir(label.name) / "checkpoints" / "last.ckpt";
                gan::score_images(pool, gan::load_critic_from_checkpoint(ckpt, g));
            }
        }
        const auto chosen = gan::select_images(pool, n, cfg.generation.strategy);
        std::vector<data::ImageSample> samples;
        for (const auto& c : chosen) samples.push_back(c.sample);
        const auto dir = cfg.synthetic_dir() / label.name;
        write_images(dir, samples);
        spdlog::info("{}: kept {} of {} generated image(s) ({})", label.name, samples.size(), pool.size(),
                     gan::to_string(cfg.generation.strategy));
        rec.artifacts = files_under(dir);

        const auto holdout_dir = cfg.synthetic_dir() / kHoldoutDir / label.name;
        if (cfg.generation.holdout_count > 0) {
            const auto& [epoch, path] = artifacts[ci].back();
            auto artifact = gan::load_generator_artifact(path, g);
            write_images(holdout_dir,
                         gan::generate(artifact.generator, cfg.generation.holdout_count,
                                       cfg.holdout_seed(label.id), label.id));
            const auto extra = files_under(holdout_dir);
            rec.artifacts.insert(rec.artifacts.end(), extra.begin(), extra.end());
        } else {
            fs::remove_all(holdout_dir);
        }

        rec.command = "generate:" + label.name;
        rec.fingerprint = cfg.fingerprint();
        rec.started_at = started;
        rec.seeds = {{"generation", cfg.generation_seed(label.id)}, {"holdout", cfg.holdout_seed(label.id)}};
        update_manifest(cfg.paths.output, rec);
    }
}

void cmd_train_clf(const PipelineConfig& cfg, const CommandOptions& options) {
    const auto backbones = selected_backbones(cfg, options);

    std::vector<fs::path> roots;
    for (auto source : cfg.classifier.train_sources) {
        if (source == DataSource::Real) {
            roots.push_back(cfg.prepared_dir() / "train");
            require_dir(roots.back(), "run prepare first");
        } else {
            for (const auto& label : cfg.labels.labels()) {
                require_dir(cfg.synthetic_dir() / label.name, "run generate first");
            }
            roots.push_back(cfg.synthetic_dir());
        }
    }
    for (const auto& b : backbones) {
        if (b.pretrained && !fs::is_regular_file(b.pretrained->path)) {
            throw MissingArtifactError("pretrained weights file missing: " + b.pretrained->path.string());
        }
    }

    std::vector<data::LabeledDataset> parts;
    CommandRecord base;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const auto source = cfg.classifier.train_sources[i] == DataSource::Real ? data::SampleSource::Real
                                                                                 : data::SampleSource::Synthetic;
        parts.push_back(load_tree(roots[i], cfg, stored_shape(cfg), data::DatasetRole::Train, source));
        for (const auto& label : cfg.labels.labels()) {
            const auto dir = roots[i] / label.name;
            base.inputs[fs::relative(dir, cfg.paths.output).generic_string()] = directory_digest(dir);
        }
    }
    const auto pool = data::concat(parts, data::DatasetRole::Train);
    if (pool.empty()) throw MissingArtifactError("no training images found; run prepare/generate first");
    const auto [train, validation] = data::split(pool, cfg.split);
    spdlog::info("classifier data: {} train / {} validation image(s)", train.size(), validation.size());

    for (const auto& b : backbones) {
        const auto started = utc_timestamp();
        clf::BuildOptions build;
        build.seed = b.train.seed;
        build.pretrained = b.pretrained;
        build.input_normalization = cfg.classifier.input_normalization;
        build.class_names = cfg.labels.names();
        auto model = clf::build_classifier(b.id, cfg.labels.size(), b.feature_extract, b.pretrained.has_value(), build);
        const auto counts = model.counts();
        spdlog::info("{}: {} trainable of {} parameters", clf::to_string(b.id), counts.trainable, counts.total);

        const auto outcome = clf::train_classifier(model, train, validation, b.train);
        const auto& curve = outcome.curve.epochs;
        const auto& best = curve.at(static_cast<std::size_t>(outcome.best_epoch - 1));

        const auto dir = cfg.model_dir(b.id);
        reset_dir(dir);
        nlohmann::json extra;
        extra["config_fingerprint"] = cfg.fingerprint();
        extra["train_fingerprint"] = b.train.fingerprint();
        extra["best_epoch"] = outcome.best_epoch;
        extra["best"] = curve_point(best);
        extra["final"] = curve_point(curve.back());
        extra["train_size"] = train.size();
        extra["validation_size"] = validation.size();
        clf::save_model(dir / "model.bin", model, extra);
        util::atomic_write(dir / "learning_curve.csv", outcome.curve.to_csv());

        Series tl{"train", {}, {}}, vl{"validation", {}, {}}, ta{"train", {}, {}}, va{"validation", {}, {}};
        for (const auto& e : curve) {
            const auto x = static_cast<double>(e.epoch);
            tl.x.push_back(x), tl.y.push_back(e.train_loss);
            vl.x.push_back(x), vl.y.push_back(e.validation_loss);
            ta.x.push_back(x), ta.y.push_back(e.train_accuracy);
            va.x.push_back(x), va.y.push_back(e.validation_accuracy);
        }
        const auto name = clf::to_string(b.id);
        plot_lines(dir / "loss.png", {name + " loss", "epoch", "cross-entropy", {tl, vl}});
        plot_lines(dir / "accuracy.png", {name + " accuracy", "epoch", "accuracy", {ta, va}});

        auto rec = base;
        rec.command = "train-clf:" + name;
        rec.fingerprint = cfg.fingerprint();
        rec.started_at = started;
        rec.seeds = {{"classifier", b.train.seed}, {"split", cfg.split.seed}};
        rec.artifacts = files_under(dir);
        update_manifest(cfg.paths.output, rec);
    }
}

void cmd_evaluate(const PipelineConfig& cfg, const CommandOptions& options) {
    if (options.predictions) {
        const auto started = utc_timestamp();
        if (!fs::is_regular_file(*options.predictions)) {
            throw MissingArtifactError("prediction dump missing: " + options.predictions->string());
        }
        const auto name = options.backbone.value_or("predictions");
        const auto predictions = metrics::read_predictions_csv(*options.predictions);
        CommandRecord rec;
        nlohmann::json summary = {{"training_accuracy", nullptr}, {"validation_accuracy", nullptr}};
        evaluate_one(cfg, name, predictions, summary, rec.artifacts);
        rec.command = "evaluate:" + name;
        rec.fingerprint = cfg.fingerprint();
        rec.started_at = started;
        rec.inputs[options.predictions->string()] = util::sha256_file(*options.predictions);
        update_manifest(cfg.paths.output, rec);
        return;
    }

    const auto backbones = selected_backbones(cfg, options);
    for (const auto& b : backbones) {
        const auto path = cfg.model_dir(b.id) / "model.bin";
        if (!fs::is_regular_file(path)) {
            throw MissingArtifactError("model artifact missing: " + path.string() + "; run train-clf first");
        }
    }
    const auto test = test_dataset(cfg);
    if (test.empty()) throw MissingArtifactError("the test set is empty");

    for (const auto& b : backbones) {
        const auto started = utc_timestamp();
        const auto path = cfg.model_dir(b.id) / "model.bin";
        auto loaded = clf::load_model(path);
        if (loaded.model.class_names != cfg.labels.names()) {
            throw ConfigError("model " + path.string() + " was trained on different class names");
        }
        if (cfg.evaluation.use_best_weights) loaded.model.load_best_state();
        const auto& point = loaded.metadata.at(cfg.evaluation.use_best_weights ? "best" : "final");
        nlohmann::json summary = {{"training_accuracy", point.at("train_accuracy")},
                                  {"validation_accuracy", point.at("validation_accuracy")},
                                  {"epoch", point.at("epoch")},
                                  {"weights", cfg.evaluation.use_best_weights ? "best" : "final"}};

        const auto predictions = clf::predict(loaded.model, test);
        CommandRecord rec;
        const auto name = clf::to_string(b.id);
        evaluate_one(cfg, name, predictions, summary, rec.artifacts);
        rec.command = "evaluate:" + name;
        rec.fingerprint = cfg.fingerprint();
        rec.started_at = started;
        rec.inputs[fs::relative(path, cfg.paths.output).generic_string()] = util::sha256_file(path);
        update_manifest(cfg.paths.output, rec);
    }
}

}  // namespace cxrgan::pipeline
