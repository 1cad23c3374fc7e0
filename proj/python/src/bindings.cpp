#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include <torch/torch.h>

#include "cxrgan/clf/classifier.hpp"
#include "cxrgan/clf/tensor_bundle.hpp"
#include "cxrgan/data/image_ops.hpp"
#include "cxrgan/errors.hpp"
#include "cxrgan/gan/objectives.hpp"
#include "cxrgan/metrics/confusion.hpp"
#include "cxrgan/metrics/report.hpp"
#include "cxrgan/metrics/roc.hpp"
#include "cxrgan/pipeline/commands.hpp"
#include "cxrgan/pipeline/config.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace cxrgan;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const FloatArray& a) {
    std::vector<std::int64_t> shape(a.shape(), a.shape() + a.ndim());
    return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

FloatArray to_array(const torch::Tensor& t) {
    const auto c = t.detach().to(torch::kFloat32).contiguous();
    FloatArray out(std::vector<py::ssize_t>(c.sizes().begin(), c.sizes().end()));
    std::memcpy(out.mutable_data(), c.data_ptr<float>(), c.numel() * sizeof(float));
    return out;
}

metrics::ConfusionMatrix to_cm(const std::vector<std::vector<std::int64_t>>& counts,
                               std::vector<std::string> names) {
    if (names.empty()) {
        for (std::size_t i = 0; i < counts.size(); ++i) names.push_back(std::to_string(i));
    }
    return metrics::ConfusionMatrix(std::move(names), counts);
}

py::dict report_dict(const metrics::ClassificationReport& r) {
    return py::module_::import("json").attr("loads")(metrics::to_json(r).dump());
}

pipeline::PipelineConfig config_from(const fs::path& path, std::optional<std::uint64_t> seed,
                                     std::optional<std::int64_t> epochs, std::optional<std::int64_t> n) {
    pipeline::Overrides o;
    o.seed = seed;
    o.epochs = epochs;
    o.n = n;
    return pipeline::load_config(path, o);
}

// Features of a backbone loaded from a weight bundle, for comparison against other frameworks.
FloatArray backbone_features(const std::string& backbone, const fs::path& weights, const FloatArray& images) {
    clf::BuildOptions opts;
    opts.pretrained = clf::PretrainedWeights{weights, ""};
    auto model = clf::build_classifier(clf::parse_backbone(backbone), 3, true, true, opts);
    torch::NoGradGuard guard;
    return to_array(model.net->features(to_tensor(images)));
}

}  // namespace

PYBIND11_MODULE(_cxrgan, m) {
    m.doc() = "Bindings for the cxrgan C++ core";
    m.attr("__version__") = CXRGAN_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FingerprintError>(m, "FingerprintError", PyExc_RuntimeError);
    py::register_exception<MissingArtifactError>(m, "MissingArtifactError", PyExc_FileNotFoundError);
    py::register_exception<ChecksumError>(m, "ChecksumError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<TrainingInstabilityError>(m, "TrainingInstabilityError", PyExc_RuntimeError);

    // metrics
    m.def(
        "confusion_matrix",
        [](const std::vector<int>& truth, const std::vector<int>& predicted, int num_classes) {
            if (truth.size() != predicted.size()) throw std::invalid_argument("truth and predicted differ in length");
            std::vector<std::string> names;
            for (int i = 0; i < num_classes; ++i) names.push_back(std::to_string(i));
            metrics::ConfusionMatrix cm(std::move(names));
            for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
            return cm.rows();
        },
        py::arg("truth"), py::arg("predicted"), py::arg("num_classes"),
        "K x K counts, rows = actual class, columns = predicted class.");
    m.def(
        "classification_report",
        [](const std::vector<std::vector<std::int64_t>>& counts, std::vector<std::string> names) {
            return report_dict(metrics::classification_report(to_cm(counts, std::move(names))));
        },
        py::arg("counts"), py::arg("class_names") = std::vector<std::string>{});
    m.def(
        "render_report",
        [](const std::vector<std::vector<std::int64_t>>& counts, std::vector<std::string> names) {
            return metrics::render_text(metrics::classification_report(to_cm(counts, std::move(names))));
        },
        py::arg("counts"), py::arg("class_names") = std::vector<std::string>{});
    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<bool>& positive) {
            const auto curve = metrics::roc_curve(scores, positive);
            std::vector<double> fpr, tpr, thresholds;
            for (const auto& p : curve.points) {
                fpr.push_back(p.fpr);
                tpr.push_back(p.tpr);
                thresholds.push_back(p.threshold);
            }
            return py::make_tuple(fpr, tpr, thresholds, curve.auc);
        },
        py::arg("scores"), py::arg("positive"), "Returns (fpr, tpr, thresholds, auc).");

    // data
    m.def(
        "normalize",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image, std::int64_t channels,
           std::int64_t size) {
            if (image.ndim() != 2 && image.ndim() != 3) throw ShapeError("expected H x W or H x W x C uint8 pixels");
            data::RawImage raw;
            raw.height = static_cast<int>(image.shape(0));
            raw.width = static_cast<int>(image.shape(1));
            raw.channels = image.ndim() == 3 ? static_cast<int>(image.shape(2)) : 1;
            raw.data.assign(image.data(), image.data() + image.size());
            return to_array(data::normalize(raw, {channels, size, size}));
        },
        py::arg("image"), py::arg("channels") = 1, py::arg("size") = 128,
        "uint8 pixels -> C x size x size float32 in [-1, 1].");
    m.def(
        "denormalize",
        [](const FloatArray& pixels) {
            const auto raw = data::denormalize(to_tensor(pixels));
            py::array_t<std::uint8_t> out({raw.height, raw.width, raw.channels});
            std::memcpy(out.mutable_data(), raw.data.data(), raw.data.size());
            return out;
        },
        py::arg("pixels"), "C x H x W in [-1, 1] -> H x W x C uint8.");

    // wgan-gp
    m.def(
        "gradient_penalty_linear",
        [](const FloatArray& points, const FloatArray& weights) {
            const auto w = to_tensor(weights);
            const auto x = to_tensor(points);
            const gan::ScoreFn critic = [&](const torch::Tensor& t) { return (t * w).flatten(1).sum(1); };
            py::gil_scoped_release release;
            return gan::gradient_penalty(critic, x).item<double>();
        },
        py::arg("points"), py::arg("weights"),
        "Gradient penalty of the linear critic x -> sum(w * x) at `points`.");

    // transfer-classifier
    m.def(
        "parameter_counts",
        [](const std::string& backbone, int num_classes, bool feature_extract) {
            const auto model = clf::build_classifier(clf::parse_backbone(backbone), num_classes, feature_extract, false);
            const auto c = model.counts();
            return py::make_tuple(c.trainable, c.total);
        },
        py::arg("backbone"), py::arg("num_classes") = 3, py::arg("feature_extract") = true,
        "(trainable, total) parameter counts.");
    m.def("backbone_features", &backbone_features, py::arg("backbone"), py::arg("weights"), py::arg("images"),
          "Inference-mode features of a backbone whose weights come from a tensor bundle.");
    m.def(
        "read_bundle",
        [](const fs::path& path) {
            const auto bundle = clf::read_bundle(path);
            py::dict tensors;
            for (const auto& [name, t] : bundle.tensors) {
                if (t.scalar_type() == torch::kInt64) {
                    const auto c = t.contiguous();
                    py::array_t<std::int64_t> a(std::vector<py::ssize_t>(c.sizes().begin(), c.sizes().end()));
                    std::memcpy(a.mutable_data(), c.data_ptr<std::int64_t>(), c.numel() * sizeof(std::int64_t));
                    tensors[py::str(name)] = a;
                } else {
                    tensors[py::str(name)] = to_array(t);
                }
            }
            return py::make_tuple(py::module_::import("json").attr("loads")(bundle.metadata.dump()), tensors);
        },
        py::arg("path"), "Returns (metadata, {name: array}).");

    // pipeline
    m.def(
        "load_config",
        [](const fs::path& path, std::optional<std::uint64_t> seed) {
            const auto cfg = config_from(path, seed, std::nullopt, std::nullopt);
            py::dict out;
            out["seed"] = cfg.seed;
            out["classes"] = cfg.labels.names();
            out["output"] = cfg.paths.output;
            out["fingerprint"] = cfg.fingerprint();
            std::vector<std::string> backbones;
            for (const auto& b : cfg.classifier.backbones) backbones.push_back(clf::to_string(b.id));
            out["backbones"] = backbones;
            py::dict counts;
            for (const auto& n : cfg.labels.names()) counts[py::str(n)] = cfg.count_for(n);
            out["generation_counts"] = counts;
            return out;
        },
        py::arg("path"), py::arg("seed") = py::none(), "Resolved summary of a pipeline config.");
    m.def(
        "run",
        [](const std::string& command, const fs::path& config, std::optional<std::uint64_t> seed,
           std::optional<std::int64_t> epochs, std::optional<std::int64_t> n, std::optional<std::string> class_name,
           std::optional<std::string> backbone, std::optional<fs::path> resume,
           std::optional<fs::path> predictions) {
            const auto cfg = config_from(config, seed, epochs, n);
            pipeline::CommandOptions opts;
            opts.class_name = class_name;
            opts.backbone = backbone;
            opts.resume = resume;
            opts.predictions = predictions;
            py::gil_scoped_release release;
            if (command == "prepare") {
                pipeline::cmd_prepare(cfg);
            } else if (command == "train-gan") {
                pipeline::cmd_train_gan(cfg, opts);
            } else if (command == "generate") {
                pipeline::cmd_generate(cfg, opts);
            } else if (command == "train-clf") {
                pipeline::cmd_train_clf(cfg, opts);
            } else if (command == "evaluate") {
                pipeline::cmd_evaluate(cfg, opts);
            } else {
                throw ConfigError("unknown command '" + command + "'");
            }
        },
        py::arg("command"), py::arg("config"), py::kw_only(), py::arg("seed") = py::none(),
        py::arg("epochs") = py::none(), py::arg("n") = py::none(), py::arg("class_name") = py::none(),
        py::arg("backbone") = py::none(), py::arg("resume") = py::none(), py::arg("predictions") = py::none(),
        "Runs one pipeline stage, like the command-line tool.");
}
