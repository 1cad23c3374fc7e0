#include "cxrgan/pipeline/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"
#include "cxrgan/util/random.hpp"

namespace cxrgan::pipeline {

namespace fs = std::filesystem;

namespace {

// A key that is absent or written without a value. A default-constructed YAML::Node counts as
// defined, so it cannot stand in for "absent".
bool present(const YAML::Node& node) { return node && !node.IsNull(); }

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!present(node)) return;
    if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& where, T fallback) {
    if (!present(node) || !node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for " + where + "." + key);
    }
}

template <typename T>
std::optional<T> get_opt(const YAML::Node& node, const std::string& key, const std::string& where) {
    if (!present(node) || !present(node[key])) return std::nullopt;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for " + where + "." + key);
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void apply_gan_fields(const YAML::Node& n, const std::string& where, gan::GanTrainConfig& g, bool& seed_set) {
    check_keys(n, where, {"epochs", "batch_size", "lr_generator", "lr_critic", "beta1", "beta2", "gp_weight",
                          "n_critic", "z_dim", "hidden_dim", "image_size", "channels", "seed", "snapshot_every",
                          "checkpoint_every", "max_generator_steps", "parallel_classes", "per_class"});
    g.epochs = get(n, "epochs", where, g.epochs);
    g.batch_size = get(n, "batch_size", where, g.batch_size);
    g.adam.lr_generator = get(n, "lr_generator", where, g.adam.lr_generator);
    g.adam.lr_critic = get(n, "lr_critic", where, g.adam.lr_critic);
    g.adam.beta1 = get(n, "beta1", where, g.adam.beta1);
    g.adam.beta2 = get(n, "beta2", where, g.adam.beta2);
    g.gp_weight = get(n, "gp_weight", where, g.gp_weight);
    g.n_critic = get(n, "n_critic", where, g.n_critic);
    g.z_dim = get(n, "z_dim", where, g.z_dim);
    g.hidden_dim = get(n, "hidden_dim", where, g.hidden_dim);
    g.image_size = get(n, "image_size", where, g.image_size);
    g.channels = get(n, "channels", where, g.channels);
    g.snapshot_every = get(n, "snapshot_every", where, g.snapshot_every);
    g.checkpoint_every = get(n, "checkpoint_every", where, g.checkpoint_every);
    if (auto steps = get_opt<std::int64_t>(n, "max_generator_steps", where)) g.max_generator_steps = steps;
    if (auto seed = get_opt<std::uint64_t>(n, "seed", where)) {
        g.seed = *seed;
        seed_set = true;
    }
}

void apply_clf_fields(const YAML::Node& n, const std::string& where, BackboneSettings& b, bool& seed_set,
                      bool& epochs_set) {
    check_keys(n, where, {"epochs", "batch_size", "learning_rate", "seed", "augment", "flip_probability", "pad",
                          "feature_extract", "pretrained", "calibrate_batch_norm"});
    if (auto e = get_opt<std::int64_t>(n, "epochs", where)) {
        b.train.epochs = *e;
        epochs_set = true;
    }
    b.train.batch_size = get(n, "batch_size", where, b.train.batch_size);
    b.train.learning_rate = get(n, "learning_rate", where, b.train.learning_rate);
    b.train.augment = get(n, "augment", where, b.train.augment);
    b.train.augmentation.horizontal_flip_probability =
        get(n, "flip_probability", where, b.train.augmentation.horizontal_flip_probability);
    b.train.augmentation.pad_pixels = get(n, "pad", where, b.train.augmentation.pad_pixels);
    b.feature_extract = get(n, "feature_extract", where, b.feature_extract);
    b.train.calibrate_batch_norm = get(n, "calibrate_batch_norm", where, b.train.calibrate_batch_norm);
    if (auto seed = get_opt<std::uint64_t>(n, "seed", where)) {
        b.train.seed = *seed;
        seed_set = true;
    }
}

}  // namespace

DataSource parse_data_source(const std::string& name) {
    if (name == "real") return DataSource::Real;
    if (name == "synthetic") return DataSource::Synthetic;
    throw ConfigError("unknown data source '" + name + "' (real | synthetic)");
}

std::string to_string(DataSource source) { return source == DataSource::Real ? "real" : "synthetic"; }

const BackboneSettings& ClassifierSettings::find(clf::BackboneId id) const {
    for (const auto& b : backbones) {
        if (b.id == id) return b;
    }
    throw ConfigError("backbone " + clf::to_string(id) + " is not configured");
}

const gan::GanTrainConfig& PipelineConfig::gan_for(const std::string& class_name) const {
    auto it = gan_per_class.find(class_name);
    if (it == gan_per_class.end()) throw ConfigError("unknown class '" + class_name + "'");
    return it->second;
}

std::int64_t PipelineConfig::count_for(const std::string& class_name) const {
    auto it = generation.counts.find(class_name);
    if (it == generation.counts.end()) throw ConfigError("unknown class '" + class_name + "'");
    return it->second;
}

std::uint64_t PipelineConfig::generation_seed(int class_id) const {
    return util::derive_seed(seed, 200 + static_cast<std::uint64_t>(class_id));
}

std::uint64_t PipelineConfig::holdout_seed(int class_id) const {
    return util::derive_seed(seed, 400 + static_cast<std::uint64_t>(class_id));
}

std::string PipelineConfig::fingerprint() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["labels"] = labels.names();
    j["real_train"] = paths.real_train.generic_string();
    j["real_test"] = paths.real_test ? paths.real_test->generic_string() : "";
    if (paths.metadata) {
        j["metadata"] = {paths.metadata->csv.generic_string(), paths.metadata->view_column,
                         paths.metadata->view_value, paths.metadata->filename_column};
    }
    j["prepare"] = {prepare.image_size, prepare.channels};
    for (const auto& [name, g] : gan_per_class) {
        j["gan"][name] = {g.fingerprint(), g.epochs, g.snapshot_every, g.checkpoint_every,
                          g.max_generator_steps.value_or(-1)};
    }
    j["generation"] = {generation.counts, generation.pool_per_epoch, generation.from_last_epochs,
                       gan::to_string(generation.strategy), generation.holdout_count};
    j["split"] = {split.validation_fraction, split.seed};
    for (const auto& b : classifier.backbones) {
        j["classifier"][clf::to_string(b.id)] = {b.train.fingerprint(), b.train.epochs, b.feature_extract,
                                                 b.pretrained ? b.pretrained->sha256 : ""};
    }
    for (auto s : classifier.train_sources) j["train_sources"].push_back(to_string(s));
    j["input_normalization"] = clf::to_string(classifier.input_normalization);
    j["evaluation"] = {to_string(evaluation.test_source), evaluation.use_best_weights};
    return util::hex64(util::fnv1a64(j.dump()));
}

PipelineConfig parse_config(const std::string& yaml, const fs::path& base_dir, const Overrides& overrides) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("config must be a YAML mapping");
    check_keys(root, "config",
               {"seed", "labels", "paths", "prepare", "gan", "generation", "split", "classifier", "evaluation"});

    PipelineConfig cfg;
    cfg.seed = overrides.seed.value_or(get<std::uint64_t>(root, "seed", "config", 0));
    const bool seed_overridden = overrides.seed.has_value();

    if (root["labels"]) {
        auto names = get<std::vector<std::string>>(root, "labels", "config", {});
        cfg.labels = data::LabelSet(names);
    }
    if (cfg.labels.find(kHoldoutDir)) throw ConfigError(std::string("'") + kHoldoutDir + "' is a reserved name");

    // paths
    const auto paths = root["paths"];
    check_keys(paths, "paths", {"real_train", "real_test", "output", "metadata"});
    auto real_train = get<std::string>(paths, "real_train", "paths", "");
    if (real_train.empty()) throw ConfigError("paths.real_train is required");
    cfg.paths.real_train = resolve(base_dir, real_train);
    if (auto t = get_opt<std::string>(paths, "real_test", "paths")) cfg.paths.real_test = resolve(base_dir, *t);
    if (paths && paths["metadata"]) {
        const auto m = paths["metadata"];
        check_keys(m, "paths.metadata", {"csv", "view_column", "view_value", "filename_column"});
        MetadataFilter filter;
        auto csv = get<std::string>(m, "csv", "paths.metadata", "");
        if (csv.empty()) throw ConfigError("paths.metadata.csv is required when metadata is given");
        filter.csv = resolve(base_dir, csv);
        filter.view_column = get(m, "view_column", "paths.metadata", filter.view_column);
        filter.view_value = get(m, "view_value", "paths.metadata", filter.view_value);
        filter.filename_column = get(m, "filename_column", "paths.metadata", filter.filename_column);
        cfg.paths.metadata = filter;
    }
    const char* env_output = std::getenv(kOutputRootEnv);
    if (env_output && *env_output) {
        cfg.paths.output = fs::absolute(env_output).lexically_normal();
    } else {
        cfg.paths.output = resolve(base_dir, get<std::string>(paths, "output", "paths", "output"));
    }

    // prepare
    const auto prep = root["prepare"];
    check_keys(prep, "prepare", {"image_size", "channels"});
    cfg.prepare.image_size = get(prep, "image_size", "prepare", cfg.prepare.image_size);
    cfg.prepare.channels = get(prep, "channels", "prepare", cfg.prepare.channels);
    if (cfg.prepare.image_size < 8 || cfg.prepare.image_size > 4096) {
        throw ConfigError("prepare.image_size must be in [8, 4096]");
    }
    if (cfg.prepare.channels != 1 && cfg.prepare.channels != 3) throw ConfigError("prepare.channels must be 1 or 3");

    // gan
    const auto gan_node = root["gan"];
    bool base_seed_set = false;
    apply_gan_fields(gan_node, "gan", cfg.gan, base_seed_set);
    cfg.parallel_classes = get(gan_node, "parallel_classes", "gan", false);
    const auto per_class = present(gan_node) ? gan_node["per_class"] : YAML::Node();
    if (present(per_class)) {
        if (!per_class.IsMap()) throw ConfigError("gan.per_class must be a mapping of class name to settings");
        for (const auto& kv : per_class) {
            const auto name = kv.first.as<std::string>();
            if (!cfg.labels.find(name)) throw ConfigError("gan.per_class names unknown class '" + name + "'");
        }
    }
    for (const auto& label : cfg.labels.labels()) {
        auto g = cfg.gan;
        bool seed_set = base_seed_set;
        if (present(per_class) && per_class[label.name]) {
            const auto where = "gan.per_class." + label.name;
            if (per_class[label.name]["per_class"] || per_class[label.name]["parallel_classes"]) {
                throw ConfigError(where + " cannot nest per_class or parallel_classes");
            }
            apply_gan_fields(per_class[label.name], where, g, seed_set);
        }
        if (!seed_set || seed_overridden) g.seed = util::derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(label.id));
        if (overrides.epochs) g.epochs = *overrides.epochs;
        if (overrides.snapshot_every) g.snapshot_every = *overrides.snapshot_every;
        try {
            g.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("gan settings for " + label.name + ": " + e.what());
        }
        cfg.gan_per_class.emplace(label.name, g);
    }

    // generation
    const auto gen = root["generation"];
    check_keys(gen, "generation", {"count", "pool_per_epoch", "from_last_epochs", "strategy", "holdout_count"});
    std::int64_t default_count = 4000;
    std::map<std::string, std::int64_t> explicit_counts;
    if (gen && gen["count"]) {
        if (gen["count"].IsMap()) {
            for (const auto& kv : gen["count"]) {
                const auto name = kv.first.as<std::string>();
                if (!cfg.labels.find(name)) throw ConfigError("generation.count names unknown class '" + name + "'");
                explicit_counts[name] = get<std::int64_t>(gen["count"], name, "generation.count", 0);
            }
        } else {
            default_count = get(gen, "count", "generation", default_count);
        }
    }
    for (const auto& label : cfg.labels.labels()) {
        auto it = explicit_counts.find(label.name);
        auto n = overrides.n.value_or(it != explicit_counts.end() ? it->second : default_count);
        if (n < 0) throw ConfigError("generation count for " + label.name + " must be >= 0");
        cfg.generation.counts[label.name] = n;
    }
    cfg.generation.pool_per_epoch = get(gen, "pool_per_epoch", "generation", cfg.generation.pool_per_epoch);
    cfg.generation.from_last_epochs = get(gen, "from_last_epochs", "generation", cfg.generation.from_last_epochs);
    cfg.generation.holdout_count = get(gen, "holdout_count", "generation", cfg.generation.holdout_count);
    cfg.generation.strategy = gan::parse_selection_strategy(get<std::string>(gen, "strategy", "generation", "latest_epoch"));
    if (cfg.generation.pool_per_epoch < 0 || cfg.generation.from_last_epochs < 0 || cfg.generation.holdout_count < 0) {
        throw ConfigError("generation pool_per_epoch, from_last_epochs and holdout_count must be >= 0");
    }

    // split
    const auto split = root["split"];
    check_keys(split, "split", {"validation_fraction", "seed"});
    cfg.split.validation_fraction = get(split, "validation_fraction", "split", cfg.split.validation_fraction);
    auto split_seed = get_opt<std::uint64_t>(split, "seed", "split");
    cfg.split.seed = (split_seed && !seed_overridden) ? *split_seed : util::derive_seed(cfg.seed, 300);
    if (!(cfg.split.validation_fraction > 0.0 && cfg.split.validation_fraction < 1.0)) {
        throw ConfigError("split.validation_fraction must be in (0, 1)");
    }

    // classifier
    const auto clf_node = root["classifier"];
    check_keys(clf_node, "classifier", {"backbones", "defaults", "train_sources", "input_normalization"});
    if (clf_node && clf_node["train_sources"]) {
        cfg.classifier.train_sources.clear();
        for (const auto& s : get<std::vector<std::string>>(clf_node, "train_sources", "classifier", {})) {
            cfg.classifier.train_sources.push_back(parse_data_source(s));
        }
        if (cfg.classifier.train_sources.empty()) throw ConfigError("classifier.train_sources must not be empty");
    }
    cfg.classifier.input_normalization = clf::parse_input_normalization(
        get<std::string>(clf_node, "input_normalization", "classifier", "minus_one_to_one"));
    const auto defaults = present(clf_node) ? clf_node["defaults"] : YAML::Node();
    if (present(defaults) && defaults["pretrained"]) throw ConfigError("classifier.defaults cannot hold pretrained weights");

    std::vector<std::pair<std::string, YAML::Node>> backbone_nodes;
    const auto backbones = present(clf_node) ? clf_node["backbones"] : YAML::Node();
    if (!present(backbones)) {
        for (const char* name : {"vgg16", "resnet50", "googlenet", "mnasnet"}) backbone_nodes.emplace_back(name, YAML::Node());
    } else if (backbones.IsSequence()) {
        for (const auto& b : backbones) backbone_nodes.emplace_back(b.as<std::string>(), YAML::Node());
    } else if (backbones.IsMap()) {
        for (const auto& kv : backbones) backbone_nodes.emplace_back(kv.first.as<std::string>(), kv.second);
    } else {
        throw ConfigError("classifier.backbones must be a list or mapping");
    }
    std::set<clf::BackboneId> seen;
    for (const auto& [name, node] : backbone_nodes) {
        BackboneSettings b;
        b.id = clf::parse_backbone(name);
        if (!seen.insert(b.id).second) throw ConfigError("backbone " + name + " listed twice");
        b.train = clf::ClassifierTrainConfig::defaults_for(b.id);
        bool seed_set = false;
        bool epochs_set = false;
        apply_clf_fields(defaults, "classifier.defaults", b, seed_set, epochs_set);
        if (epochs_set) throw ConfigError("classifier.defaults cannot set epochs; set them per backbone");
        const auto where = "classifier.backbones." + name;
        if (node && !node.IsNull()) {
            apply_clf_fields(node, where, b, seed_set, epochs_set);
            if (node["pretrained"]) {
                const auto p = node["pretrained"];
                check_keys(p, where + ".pretrained", {"path", "sha256"});
                clf::PretrainedWeights w;
                w.path = resolve(base_dir, get<std::string>(p, "path", where + ".pretrained", ""));
                w.sha256 = get<std::string>(p, "sha256", where + ".pretrained", "");
                if (w.path == base_dir) throw ConfigError(where + ".pretrained.path is required");
                b.pretrained = w;
            }
        }
        if (!seed_set || seed_overridden) b.train.seed = util::derive_seed(cfg.seed, 500 + static_cast<std::uint64_t>(b.id));
        if (overrides.epochs) b.train.epochs = *overrides.epochs;
        try {
            b.train.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        cfg.classifier.backbones.push_back(b);
    }

    // evaluation
    const auto ev = root["evaluation"];
    check_keys(ev, "evaluation", {"test_source", "weights"});
    cfg.evaluation.test_source = parse_data_source(get<std::string>(ev, "test_source", "evaluation", "real"));
    const auto weights = get<std::string>(ev, "weights", "evaluation", "best");
    if (weights != "best" && weights != "final") throw ConfigError("evaluation.weights must be best or final");
    cfg.evaluation.use_best_weights = weights == "best";

    // referenced inputs must resolve
    if (!fs::is_directory(cfg.paths.real_train)) {
        throw ConfigError("paths.real_train is not a directory: " + cfg.paths.real_train.string());
    }
    if (cfg.paths.real_test && !fs::is_directory(*cfg.paths.real_test)) {
        throw ConfigError("paths.real_test is not a directory: " + cfg.paths.real_test->string());
    }
    if (cfg.paths.metadata && !fs::is_regular_file(cfg.paths.metadata->csv)) {
        throw ConfigError("paths.metadata.csv does not exist: " + cfg.paths.metadata->csv.string());
    }
    if (cfg.evaluation.test_source == DataSource::Real && !cfg.paths.real_test) {
        throw ConfigError("evaluation.test_source is real but paths.real_test is not set");
    }
    if (cfg.evaluation.test_source == DataSource::Synthetic && cfg.generation.holdout_count == 0) {
        throw ConfigError("evaluation.test_source is synthetic but generation.holdout_count is 0");
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const std::exception&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    auto cfg = parse_config(text, fs::absolute(path).parent_path(), overrides);
    cfg.source = fs::absolute(path);
    return cfg;
}

}  // namespace cxrgan::pipeline
