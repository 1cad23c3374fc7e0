#include "cxrgan/clf/classifier.hpp"

#include <torch/torch.h>

#include <set>

#include "cxrgan/clf/tensor_bundle.hpp"
#include "cxrgan/data/image_ops.hpp"
#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"

namespace cxrgan::clf {

namespace {

constexpr int kModelFormatVersion = 1;

bool in_head(const ClassifierModel& model, const std::string& name) {
    return name.starts_with(model.net->head_name() + ".");
}

std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& net) {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& p : net.named_parameters()) out.emplace_back(p.key(), p.value());
    for (const auto& b : net.named_buffers()) out.emplace_back(b.key(), b.value());
    return out;
}

torch::Tensor network_input(const ClassifierModel& model, const torch::Tensor& batch) {
    if (model.input_normalization != InputNormalization::ImageNet) return batch;
    const auto mean = torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1});
    const auto std = torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1});
    return ((batch + 1) / 2 - mean) / std;
}

}  // namespace

InputNormalization parse_input_normalization(const std::string& name) {
    if (name == "minus_one_to_one" || name == "[-1,1]") return InputNormalization::MinusOneToOne;
    if (name == "imagenet") return InputNormalization::ImageNet;
    throw ConfigError("unknown input normalization '" + name + "' (minus_one_to_one | imagenet)");
}

std::string to_string(InputNormalization mode) {
    return mode == InputNormalization::ImageNet ? "imagenet" : "minus_one_to_one";
}

ParameterCounts ClassifierModel::counts() const {
    ParameterCounts c;
    for (const auto& p : net->parameters()) {
        c.total += p.numel();
        if (p.requires_grad()) c.trainable += p.numel();
    }
    return c;
}

std::vector<torch::Tensor> ClassifierModel::trainable_parameters() const {
    std::vector<torch::Tensor> out;
    for (const auto& p : net->parameters()) {
        if (p.requires_grad()) out.push_back(p);
    }
    return out;
}

std::vector<std::pair<std::string, torch::Tensor>> ClassifierModel::frozen_parameters() const {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& p : net->named_parameters()) {
        if (!p.value().requires_grad()) out.emplace_back(p.key(), p.value());
    }
    return out;
}

std::map<std::string, torch::Tensor> ClassifierModel::trainable_state() const {
    std::map<std::string, torch::Tensor> out;
    for (const auto& p : net->named_parameters()) {
        if (p.value().requires_grad()) out.emplace(p.key(), p.value().detach().clone());
    }
    return out;
}

void ClassifierModel::set_training(bool training) {
    if (feature_extract) {
        net->eval();
        net->head()->train(training);
    } else {
        net->train(training);
    }
}

void ClassifierModel::load_best_state() {
    if (best_state.empty()) return;
    torch::NoGradGuard no_grad;
    for (auto& p : net->named_parameters()) {
        if (auto it = best_state.find(p.key()); it != best_state.end()) p.value().copy_(it->second);
    }
}

void load_pretrained(ClassifierModel& model, const PretrainedWeights& weights) {
    if (!std::filesystem::is_regular_file(weights.path)) {
        throw MissingArtifactError("pretrained weights file missing: " + weights.path.string());
    }
    const auto bytes = util::read_file(weights.path);
    const auto digest = util::sha256_hex(bytes);
    if (!weights.sha256.empty() && digest != weights.sha256) {
        throw ChecksumError("pretrained weights checksum mismatch for " + weights.path.string() + ": expected " +
                            weights.sha256 + ", got " + digest);
    }
    const auto bundle = decode_bundle(bytes);

    torch::NoGradGuard no_grad;
    std::vector<std::string> missing;
    for (auto& [name, tensor] : named_state(*model.net)) {
        if (in_head(model, name)) continue;
        const auto* src = bundle.find(name);
        if (!src || src->sizes() != tensor.sizes()) {
            missing.push_back(name);
            continue;
        }
        tensor.copy_(*src);
    }
    if (!missing.empty()) {
        throw ConfigError("pretrained weights " + weights.path.string() + " lack " + std::to_string(missing.size()) +
                          " tensor(s), first: " + missing.front());
    }
    model.provenance = "pretrained:" + digest;
}

ClassifierModel build_classifier(BackboneId backbone, int num_classes, bool feature_extract, bool pretrained,
                                 const BuildOptions& options) {
    if (num_classes < 1) throw ConfigError("num_classes must be positive");
    ClassifierModel model;
    model.backbone = backbone;
    model.num_classes = num_classes;
    model.feature_extract = feature_extract;
    model.input_normalization = options.input_normalization;
    model.class_names = options.class_names;
    if (model.class_names.empty()) {
        for (int k = 0; k < num_classes; ++k) model.class_names.push_back(std::to_string(k));
    }
    if (static_cast<int>(model.class_names.size()) != num_classes) {
        throw ConfigError("class name count does not match num_classes");
    }

    model.net = make_backbone(backbone, num_classes);
    model.net->reset_parameters(options.seed);
    if (pretrained) {
        if (!options.pretrained) {
            throw MissingArtifactError("pretrained weights requested for " + to_string(backbone) +
                                       " but no weights file is configured (file missing)");
        }
        load_pretrained(model, *options.pretrained);
    }
    for (auto& p : model.net->named_parameters()) {
        p.value().set_requires_grad(!feature_extract || in_head(model, p.key()));
    }
    model.set_training(false);
    return model;
}

torch::Tensor forward(ClassifierModel& model, const torch::Tensor& batch) {
    const auto& s = data::kClassifierShape;
    if (batch.dim() != 4 || batch.size(1) != s.channels || batch.size(2) != s.height || batch.size(3) != s.width) {
        std::string got;
        for (auto d : batch.sizes()) got += (got.empty() ? "" : " x ") + std::to_string(d);
        throw ShapeError("classifier expects B x 3 x 224 x 224 input, got " + got);
    }
    const auto x = network_input(model, batch);
    if (model.feature_extract) {
        torch::Tensor features;
        {
            torch::NoGradGuard no_grad;
            features = model.net->features(x);
        }
        return model.net->head()->forward(features);
    }
    return model.net->forward(x);
}

torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels) {
    if (logits.dim() != 2 || labels.dim() != 1 || labels.size(0) != logits.size(0)) {
        throw ShapeError("cross_entropy expects B x K logits and B labels");
    }
    const auto k = logits.size(1);
    if (labels.numel() > 0 && (labels.min().item<std::int64_t>() < 0 || labels.max().item<std::int64_t>() >= k)) {
        throw std::out_of_range("label outside [0, " + std::to_string(k) + ")");
    }
    return -torch::log_softmax(logits, 1).gather(1, labels.to(torch::kInt64).unsqueeze(1)).mean();
}

torch::Tensor softmax_probabilities(const torch::Tensor& logits) {
    return torch::softmax(logits.to(torch::kFloat64), 1);
}

torch::Tensor classifier_batch(const data::LabeledDataset& dataset, std::span<const std::size_t> indices) {
    std::vector<torch::Tensor> parts;
    parts.reserve(indices.size());
    for (auto i : indices) parts.push_back(data::conform(dataset[i].pixels, data::kClassifierShape));
    return torch::stack(parts);
}

metrics::PredictionSet predict(ClassifierModel& model, const data::LabeledDataset& dataset, std::int64_t batch_size) {
    metrics::PredictionSet out;
    out.reserve(dataset.size());
    model.set_training(false);
    torch::NoGradGuard no_grad;
    std::vector<std::size_t> indices;
    for (std::size_t begin = 0; begin < dataset.size(); begin += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(dataset.size(), begin + static_cast<std::size_t>(batch_size));
        indices.clear();
        for (auto i = begin; i < end; ++i) indices.push_back(i);
        const auto probs = softmax_probabilities(forward(model, classifier_batch(dataset, indices))).contiguous();
        for (std::size_t r = 0; r < indices.size(); ++r) {
            metrics::Prediction p;
            p.truth = dataset[indices[r]].label;
            const double* row = probs.data_ptr<double>() + r * static_cast<std::size_t>(model.num_classes);
            p.probabilities.assign(row, row + model.num_classes);
            p.predicted = metrics::argmax(p.probabilities);
            out.push_back(std::move(p));
        }
    }
    return out;
}

void calibrate_batch_norm(ClassifierModel& model, const data::LabeledDataset& data, std::int64_t batch_size) {
    if (data.empty()) throw ConfigError("cannot calibrate batch norm on an empty dataset");
    std::vector<std::pair<torch::nn::BatchNorm2dImpl*, std::optional<double>>> layers;
    for (auto& m : model.net->modules(false)) {
        if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
            layers.emplace_back(bn, bn->options.momentum());
            bn->reset_running_stats();
            bn->options.momentum(std::nullopt);  // cumulative average over all batches
        }
    }
    if (layers.empty()) return;

    torch::NoGradGuard no_grad;
    model.net->eval();
    for (auto& [bn, momentum] : layers) bn->train();
    std::vector<std::size_t> indices;
    const auto step = static_cast<std::size_t>(batch_size);
    for (std::size_t begin = 0; begin < data.size(); begin += step) {
        indices.clear();
        for (auto i = begin; i < std::min(data.size(), begin + step); ++i) indices.push_back(i);
        model.net->features(network_input(model, classifier_batch(data, indices)));
    }
    for (auto& [bn, momentum] : layers) bn->options.momentum(momentum);
    model.set_training(false);
}

void save_model(const std::filesystem::path& path, const ClassifierModel& model, const nlohmann::json& extra) {
    TensorBundle bundle;
    bundle.metadata = extra.is_object() ? extra : nlohmann::json::object();
    bundle.metadata["format"] = "cxrgan-model";
    bundle.metadata["version"] = kModelFormatVersion;
    bundle.metadata["backbone"] = to_string(model.backbone);
    bundle.metadata["num_classes"] = model.num_classes;
    bundle.metadata["class_names"] = model.class_names;
    bundle.metadata["feature_extract"] = model.feature_extract;
    bundle.metadata["provenance"] = model.provenance;
    bundle.metadata["input_normalization"] = to_string(model.input_normalization);
    for (auto& [name, tensor] : named_state(*model.net)) bundle.tensors.emplace_back("final/" + name, tensor);
    for (const auto& [name, tensor] : model.best_state) bundle.tensors.emplace_back("best/" + name, tensor);
    write_bundle(path, bundle);
}

LoadedModel load_model(const std::filesystem::path& path) {
    auto bundle = read_bundle(path);
    const auto& meta = bundle.metadata;
    if (meta.value("format", "") != "cxrgan-model" || meta.value("version", 0) != kModelFormatVersion) {
        throw IoError("not a model artifact: " + path.string());
    }
    BuildOptions options;
    options.class_names = meta.at("class_names").get<std::vector<std::string>>();
    options.input_normalization = parse_input_normalization(meta.at("input_normalization").get<std::string>());
    auto model = build_classifier(parse_backbone(meta.at("backbone").get<std::string>()), meta.at("num_classes"),
                                  meta.at("feature_extract"), false, options);
    model.provenance = meta.value("provenance", "random");

    torch::NoGradGuard no_grad;
    for (auto& [name, tensor] : named_state(*model.net)) {
        const auto* src = bundle.find("final/" + name);
        if (!src || src->sizes() != tensor.sizes()) throw IoError("model artifact lacks tensor " + name);
        tensor.copy_(*src);
    }
    for (const auto& [name, tensor] : bundle.tensors) {
        if (name.starts_with("best/")) model.best_state.emplace(name.substr(5), tensor);
    }
    return {std::move(model), meta};
}

}  // namespace cxrgan::clf
