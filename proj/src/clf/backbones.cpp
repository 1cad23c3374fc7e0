#include "cxrgan/clf/backbones.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cxrgan/errors.hpp"

namespace cxrgan::clf {

namespace nn = torch::nn;

BackboneId parse_backbone(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    lower.erase(std::remove(lower.begin(), lower.end(), '-'), lower.end());
    lower.erase(std::remove(lower.begin(), lower.end(), '_'), lower.end());
    if (lower == "vgg16" || lower == "vgg16bn") return BackboneId::Vgg16;
    if (lower == "resnet50") return BackboneId::Resnet50;
    if (lower == "googlenet") return BackboneId::Googlenet;
    if (lower == "mnasnet" || lower == "mnasnet10" || lower == "mnasnet1.0") return BackboneId::Mnasnet;
    throw ConfigError("unknown backbone '" + name + "' (vgg16 | resnet50 | googlenet | mnasnet)");
}

std::string to_string(BackboneId id) {
    switch (id) {
        case BackboneId::Vgg16: return "vgg16";
        case BackboneId::Resnet50: return "resnet50";
        case BackboneId::Googlenet: return "googlenet";
        case BackboneId::Mnasnet: return "mnasnet";
    }
    return "unknown";
}

namespace {

// ---- initialization helpers (seeded; mirror the reference initializers) ----

std::int64_t receptive_field(const torch::Tensor& w) {
    std::int64_t r = 1;
    for (std::int64_t d = 2; d < w.dim(); ++d) r *= w.size(d);
    return r;
}

void kaiming_normal_fan_out(torch::Tensor& w, at::Generator& gen) {
    const double fan_out = static_cast<double>(w.size(0) * receptive_field(w));
    w.normal_(0.0, std::sqrt(2.0 / fan_out), gen);
}

// nn.Linear / nn.Conv2d default: kaiming_uniform(a=sqrt(5)) and U(+-1/sqrt(fan_in)) bias.
void default_linear_init(nn::Linear& fc, at::Generator& gen) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fc->weight.size(1)));
    fc->weight.uniform_(-bound, bound, gen);
    if (fc->bias.defined()) fc->bias.uniform_(-bound, bound, gen);
}

void reset_batch_norms(nn::Module& root) {
    for (auto& m : root.modules()) {
        if (auto* bn = m->as<nn::BatchNorm2d>()) {
            bn->weight.fill_(1.0);
            bn->bias.zero_();
            bn->running_mean.zero_();
            bn->running_var.fill_(1.0);
            bn->num_batches_tracked.zero_();
        }
    }
}

nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride = 1,
                std::int64_t padding = 0, bool bias = false, std::int64_t groups = 1) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias).groups(groups));
}

// ---------------------------------- VGG-16 (batch norm) ----------------------------------

class Vgg16BnImpl final : public BackboneImpl {
public:
    explicit Vgg16BnImpl(std::int64_t num_classes) {
        const std::vector<std::int64_t> plan{64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0};
        nn::Sequential layers;
        std::int64_t in = 3;
        for (auto v : plan) {
            if (v == 0) {
                layers->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
                continue;
            }
            layers->push_back(conv(in, v, 3, 1, 1, /*bias=*/true));
            layers->push_back(nn::BatchNorm2d(v));
            layers->push_back(nn::ReLU(true));
            in = v;
        }
        features_ = register_module("features", layers);
        avgpool_ = register_module("avgpool", nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions({7, 7})));
        fc1_ = nn::Linear(512 * 7 * 7, 4096);
        fc2_ = nn::Linear(4096, 4096);
        drop1_ = nn::Dropout(0.5);
        drop2_ = nn::Dropout(0.5);
        head_ = nn::Linear(4096, num_classes);
        classifier_ = register_module(
            "classifier", nn::Sequential(fc1_, nn::ReLU(true), drop1_, fc2_, nn::ReLU(true), drop2_, head_));
    }

    torch::Tensor features(const torch::Tensor& x) override {
        auto y = avgpool_(features_->forward(x)).flatten(1);
        y = drop1_(torch::relu(fc1_(y)));
        return drop2_(torch::relu(fc2_(y)));
    }

    nn::Linear head() const override { return head_; }
    std::string head_name() const override { return "classifier.6"; }
    BackboneId id() const override { return BackboneId::Vgg16; }

    void reset_parameters(std::uint64_t seed) override {
        torch::NoGradGuard no_grad;
        auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
        for (auto& m : features_->modules(false)) {
            if (auto* c = m->as<nn::Conv2d>()) {
                kaiming_normal_fan_out(c->weight, gen);
                c->bias.zero_();
            }
        }
        reset_batch_norms(*this);
        for (auto* fc : {&fc1_, &fc2_}) {
            (*fc)->weight.normal_(0.0, 0.01, gen);
            (*fc)->bias.zero_();
        }
        default_linear_init(head_, gen);
    }

private:
    nn::Sequential features_{nullptr}, classifier_{nullptr};
    nn::AdaptiveAvgPool2d avgpool_{nullptr};
    nn::Linear fc1_{nullptr}, fc2_{nullptr}, head_{nullptr};
    nn::Dropout drop1_{nullptr}, drop2_{nullptr};
};

// ---------------------------------------- ResNet-50 ----------------------------------------

class BottleneckImpl : public nn::Module {
public:
    static constexpr std::int64_t kExpansion = 4;

    BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
        const auto out = planes * kExpansion;
        conv1 = register_module("conv1", conv(in, planes, 1));
        bn1 = register_module("bn1", nn::BatchNorm2d(planes));
        conv2 = register_module("conv2", conv(planes, planes, 3, stride, 1));
        bn2 = register_module("bn2", nn::BatchNorm2d(planes));
        conv3 = register_module("conv3", conv(planes, out, 1));
        bn3 = register_module("bn3", nn::BatchNorm2d(out));
        if (stride != 1 || in != out) {
            downsample = register_module("downsample", nn::Sequential(conv(in, out, 1, stride), nn::BatchNorm2d(out)));
        }
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(bn1(conv1(x)));
        y = torch::relu(bn2(conv2(y)));
        y = bn3(conv3(y));
        return torch::relu(y + (downsample ? downsample->forward(x) : x));
    }

    nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
    nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
    nn::Sequential downsample{nullptr};
};
TORCH_MODULE(Bottleneck);

class Resnet50Impl final : public BackboneImpl {
public:
    explicit Resnet50Impl(std::int64_t num_classes) {
        conv1_ = register_module("conv1", conv(3, 64, 7, 2, 3));
        bn1_ = register_module("bn1", nn::BatchNorm2d(64));
        maxpool_ = register_module("maxpool", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
        std::int64_t in = 64;
        const std::int64_t blocks[] = {3, 4, 6, 3};
        for (int stage = 0; stage < 4; ++stage) {
            const std::int64_t planes = 64LL << stage;
            nn::Sequential layer;
            for (std::int64_t b = 0; b < blocks[stage]; ++b) {
                layer->push_back(Bottleneck(in, planes, b == 0 && stage > 0 ? 2 : 1));
                in = planes * BottleneckImpl::kExpansion;
            }
            layers_.push_back(register_module("layer" + std::to_string(stage + 1), layer));
        }
        head_ = register_module("fc", nn::Linear(2048, num_classes));
    }

    torch::Tensor features(const torch::Tensor& x) override {
        auto y = maxpool_(torch::relu(bn1_(conv1_(x))));
        for (auto& layer : layers_) y = layer->forward(y);
        return y.mean({2, 3});
    }

    nn::Linear head() const override { return head_; }
    std::string head_name() const override { return "fc"; }
    BackboneId id() const override { return BackboneId::Resnet50; }

    void reset_parameters(std::uint64_t seed) override {
        torch::NoGradGuard no_grad;
        auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
        for (auto& m : modules(false)) {
            if (auto* c = m->as<nn::Conv2d>()) kaiming_normal_fan_out(c->weight, gen);
        }
        reset_batch_norms(*this);
        default_linear_init(head_, gen);
    }

private:
    nn::Conv2d conv1_{nullptr};
    nn::BatchNorm2d bn1_{nullptr};
    nn::MaxPool2d maxpool_{nullptr};
    std::vector<nn::Sequential> layers_;
    nn::Linear head_{nullptr};
};

// ----------------------------------------- GoogLeNet -----------------------------------------

class BasicConv2dImpl : public nn::Module {
public:
    BasicConv2dImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride = 1,
                    std::int64_t padding = 0) {
        conv_ = register_module("conv", conv(in, out, kernel, stride, padding));
        bn_ = register_module("bn", nn::BatchNorm2d(nn::BatchNorm2dOptions(out).eps(0.001)));
    }
    torch::Tensor forward(const torch::Tensor& x) { return torch::relu(bn_(conv_(x))); }

private:
    nn::Conv2d conv_{nullptr};
    nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(BasicConv2d);

class InceptionImpl : public nn::Module {
public:
    InceptionImpl(std::int64_t in, std::int64_t ch1x1, std::int64_t ch3x3red, std::int64_t ch3x3,
                  std::int64_t ch5x5red, std::int64_t ch5x5, std::int64_t pool_proj) {
        branch1_ = register_module("branch1", BasicConv2d(in, ch1x1, 1));
        branch2_ = register_module("branch2", nn::Sequential(BasicConv2d(in, ch3x3red, 1),
                                                             BasicConv2d(ch3x3red, ch3x3, 3, 1, 1)));
        // The "5x5" branch uses a 3x3 kernel in the reference layout.
        branch3_ = register_module("branch3", nn::Sequential(BasicConv2d(in, ch5x5red, 1),
                                                             BasicConv2d(ch5x5red, ch5x5, 3, 1, 1)));
        branch4_ = register_module(
            "branch4", nn::Sequential(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(1).padding(1).ceil_mode(true)),
                                      BasicConv2d(in, pool_proj, 1)));
    }
    torch::Tensor forward(const torch::Tensor& x) {
        return torch::cat({branch1_(x), branch2_->forward(x), branch3_->forward(x), branch4_->forward(x)}, 1);
    }

private:
    BasicConv2d branch1_{nullptr};
    nn::Sequential branch2_{nullptr}, branch3_{nullptr}, branch4_{nullptr};
};
TORCH_MODULE(Inception);

class InceptionAuxImpl : public nn::Module {
public:
    InceptionAuxImpl(std::int64_t in, std::int64_t num_classes) {
        conv_ = register_module("conv", BasicConv2d(in, 128, 1));
        fc1_ = register_module("fc1", nn::Linear(2048, 1024));
        fc2_ = register_module("fc2", nn::Linear(1024, num_classes));
    }
    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::adaptive_avg_pool2d(x, {4, 4});
        y = conv_(y).flatten(1);
        y = torch::dropout(torch::relu(fc1_(y)), 0.7, is_training());
        return fc2_(y);
    }

private:
    BasicConv2d conv_{nullptr};
    nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(InceptionAux);

class GooglenetImpl final : public BackboneImpl {
public:
    GooglenetImpl(std::int64_t num_classes, bool aux_logits) {
        auto pool = [](std::int64_t k, std::int64_t s) {
            return nn::MaxPool2d(nn::MaxPool2dOptions(k).stride(s).ceil_mode(true));
        };
        conv1_ = register_module("conv1", BasicConv2d(3, 64, 7, 2, 3));
        maxpool1_ = register_module("maxpool1", pool(3, 2));
        conv2_ = register_module("conv2", BasicConv2d(64, 64, 1));
        conv3_ = register_module("conv3", BasicConv2d(64, 192, 3, 1, 1));
        maxpool2_ = register_module("maxpool2", pool(3, 2));
        i3a_ = register_module("inception3a", Inception(192, 64, 96, 128, 16, 32, 32));
        i3b_ = register_module("inception3b", Inception(256, 128, 128, 192, 32, 96, 64));
        maxpool3_ = register_module("maxpool3", pool(3, 2));
        i4a_ = register_module("inception4a", Inception(480, 192, 96, 208, 16, 48, 64));
        i4b_ = register_module("inception4b", Inception(512, 160, 112, 224, 24, 64, 64));
        i4c_ = register_module("inception4c", Inception(512, 128, 128, 256, 24, 64, 64));
        i4d_ = register_module("inception4d", Inception(512, 112, 144, 288, 32, 64, 64));
        i4e_ = register_module("inception4e", Inception(528, 256, 160, 320, 32, 128, 128));
        maxpool4_ = register_module("maxpool4", pool(2, 2));
        i5a_ = register_module("inception5a", Inception(832, 256, 160, 320, 32, 128, 128));
        i5b_ = register_module("inception5b", Inception(832, 384, 192, 384, 48, 128, 128));
        if (aux_logits) {
            aux1_ = register_module("aux1", InceptionAux(512, num_classes));
            aux2_ = register_module("aux2", InceptionAux(528, num_classes));
        }
        dropout_ = register_module("dropout", nn::Dropout(0.2));
        head_ = register_module("fc", nn::Linear(1024, num_classes));
    }

    // Auxiliary towers are never evaluated here: under feature extraction nothing they
    // feed into is trainable.
    torch::Tensor features(const torch::Tensor& x) override {
        auto y = maxpool1_(conv1_(x));
        y = maxpool2_(conv3_(conv2_(y)));
        y = maxpool3_(i3b_(i3a_(y)));
        y = i4e_(i4d_(i4c_(i4b_(i4a_(y)))));
        y = i5b_(i5a_(maxpool4_(y)));
        return dropout_(y.mean({2, 3}));
    }

    nn::Linear head() const override { return head_; }
    std::string head_name() const override { return "fc"; }
    BackboneId id() const override { return BackboneId::Googlenet; }

    void reset_parameters(std::uint64_t seed) override {
        torch::NoGradGuard no_grad;
        auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
        for (auto& m : modules(false)) {
            if (auto* c = m->as<nn::Conv2d>()) {
                c->weight.normal_(0.0, 0.01, gen).clamp_(-2.0, 2.0);
            } else if (auto* l = m->as<nn::Linear>(); l && l != head_.get()) {
                l->weight.normal_(0.0, 0.01, gen).clamp_(-2.0, 2.0);
                l->bias.zero_();
            }
        }
        reset_batch_norms(*this);
        default_linear_init(head_, gen);
    }

private:
    BasicConv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
    nn::MaxPool2d maxpool1_{nullptr}, maxpool2_{nullptr}, maxpool3_{nullptr}, maxpool4_{nullptr};
    Inception i3a_{nullptr}, i3b_{nullptr}, i4a_{nullptr}, i4b_{nullptr}, i4c_{nullptr}, i4d_{nullptr},
        i4e_{nullptr}, i5a_{nullptr}, i5b_{nullptr};
    InceptionAux aux1_{nullptr}, aux2_{nullptr};
    nn::Dropout dropout_{nullptr};
    nn::Linear head_{nullptr};
};

// ---------------------------------------- MNASNet 1.0 ----------------------------------------

constexpr double kMnasBnMomentum = 1.0 - 0.9997;

nn::BatchNorm2d mnas_bn(std::int64_t channels) {
    return nn::BatchNorm2d(nn::BatchNorm2dOptions(channels).momentum(kMnasBnMomentum));
}

class InvertedResidualImpl : public nn::Module {
public:
    InvertedResidualImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                         std::int64_t expansion)
        : residual_(in == out && stride == 1) {
        const auto mid = in * expansion;
        layers_ = register_module(
            "layers", nn::Sequential(conv(in, mid, 1), mnas_bn(mid), nn::ReLU(true),
                                     conv(mid, mid, kernel, stride, kernel / 2, false, mid), mnas_bn(mid),
                                     nn::ReLU(true), conv(mid, out, 1), mnas_bn(out)));
    }
    torch::Tensor forward(const torch::Tensor& x) {
        auto y = layers_->forward(x);
        return residual_ ? y + x : y;
    }

private:
    bool residual_;
    nn::Sequential layers_{nullptr};
};
TORCH_MODULE(InvertedResidual);

// Sequential with a concrete forward, so it can nest inside another Sequential.
class StackImpl : public nn::SequentialImpl {
public:
    using nn::SequentialImpl::SequentialImpl;
    torch::Tensor forward(torch::Tensor x) { return nn::SequentialImpl::forward(std::move(x)); }
};
TORCH_MODULE(Stack);

Stack inverted_stack(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                     std::int64_t expansion, std::int64_t repeats) {
    Stack stack;
    stack->push_back(InvertedResidual(in, out, kernel, stride, expansion));
    for (std::int64_t r = 1; r < repeats; ++r) stack->push_back(InvertedResidual(out, out, kernel, 1, expansion));
    return stack;
}

class Mnasnet10Impl final : public BackboneImpl {
public:
    explicit Mnasnet10Impl(std::int64_t num_classes) {
        nn::Sequential layers(conv(3, 32, 3, 2, 1), mnas_bn(32), nn::ReLU(true),
                              conv(32, 32, 3, 1, 1, false, 32), mnas_bn(32), nn::ReLU(true),
                              conv(32, 16, 1), mnas_bn(16),
                              inverted_stack(16, 24, 3, 2, 3, 3), inverted_stack(24, 40, 5, 2, 3, 3),
                              inverted_stack(40, 80, 5, 2, 6, 3), inverted_stack(80, 96, 3, 1, 6, 2),
                              inverted_stack(96, 192, 5, 2, 6, 4), inverted_stack(192, 320, 3, 1, 6, 1),
                              conv(320, 1280, 1), mnas_bn(1280), nn::ReLU(true));
        layers_ = register_module("layers", layers);
        dropout_ = nn::Dropout(0.2);
        head_ = nn::Linear(1280, num_classes);
        classifier_ = register_module("classifier", nn::Sequential(dropout_, head_));
    }

    torch::Tensor features(const torch::Tensor& x) override {
        return dropout_(layers_->forward(x).mean({2, 3}));
    }

    nn::Linear head() const override { return head_; }
    std::string head_name() const override { return "classifier.1"; }
    BackboneId id() const override { return BackboneId::Mnasnet; }

    void reset_parameters(std::uint64_t seed) override {
        torch::NoGradGuard no_grad;
        auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
        for (auto& m : layers_->modules(false)) {
            if (auto* c = m->as<nn::Conv2d>()) kaiming_normal_fan_out(c->weight, gen);
        }
        reset_batch_norms(*this);
        default_linear_init(head_, gen);
    }

private:
    nn::Sequential layers_{nullptr}, classifier_{nullptr};
    nn::Dropout dropout_{nullptr};
    nn::Linear head_{nullptr};
};

}  // namespace

Backbone make_vgg16_bn(std::int64_t num_classes) { return std::make_shared<Vgg16BnImpl>(num_classes); }
Backbone make_resnet50(std::int64_t num_classes) { return std::make_shared<Resnet50Impl>(num_classes); }
Backbone make_googlenet(std::int64_t num_classes, bool aux_logits) {
    return std::make_shared<GooglenetImpl>(num_classes, aux_logits);
}
Backbone make_mnasnet1_0(std::int64_t num_classes) { return std::make_shared<Mnasnet10Impl>(num_classes); }

Backbone make_backbone(BackboneId id, std::int64_t num_classes) {
    if (num_classes < 1) throw ConfigError("num_classes must be positive");
    switch (id) {
        case BackboneId::Vgg16: return make_vgg16_bn(num_classes);
        case BackboneId::Resnet50: return make_resnet50(num_classes);
        case BackboneId::Googlenet: return make_googlenet(num_classes);
        case BackboneId::Mnasnet: return make_mnasnet1_0(num_classes);
    }
    throw ConfigError("unsupported backbone");
}

}  // namespace cxrgan::clf
