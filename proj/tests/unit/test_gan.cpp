#include "torch_doctest.hpp"

#include <algorithm>
#include <cmath>

#include "cxrgan/errors.hpp"
#include "cxrgan/gan/models.hpp"
#include "cxrgan/gan/objectives.hpp"
#include "cxrgan/gan/sampling.hpp"
#include "cxrgan/gan/trainer.hpp"
#include "fixtures.hpp"

using namespace cxrgan;
using namespace cxrgan::gan;
namespace fs = std::filesystem;
using testing::TempDir;

namespace {

GanTrainConfig tiny_config() {
    GanTrainConfig cfg;
    cfg.epochs = 1000;
    cfg.batch_size = 4;
    cfg.adam.beta2 = 0.9;
    cfg.z_dim = 8;
    cfg.hidden_dim = 4;
    cfg.image_size = 8;
    cfg.seed = 3;
    return cfg;
}

std::vector<double> collect_weights(torch::nn::Module& m) {
    std::vector<double> out;
    for (const auto& p : m.named_parameters()) {
        if (p.key().find("weight") == std::string::npos || p.value().dim() < 2) continue;
        auto flat = p.value().detach().flatten().to(torch::kFloat64);
        out.insert(out.end(), flat.data_ptr<double>(), flat.data_ptr<double>() + flat.numel());
    }
    return out;
}

std::vector<GeneratedImage> fake_pool(const std::vector<double>& scores, std::int64_t per_epoch) {
    std::vector<GeneratedImage> pool;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        GeneratedImage g;
        g.sample = {torch::zeros({1, 2, 2}), 0, data::SampleSource::Synthetic, "g" + std::to_string(i)};
        g.epoch = static_cast<std::int64_t>(i) / per_epoch + 1;
        g.index = static_cast<std::int64_t>(i) % per_epoch;
        g.critic_score = scores[i];
        pool.push_back(g);
    }
    return pool;
}

}  // namespace

TEST_SUITE("gan models") {

TEST_CASE("stage ladder") {
    CHECK(stage_count(128) == 6);
    CHECK(stage_count(8) == 2);
    CHECK_THROWS_AS(stage_count(100), ConfigError);
    CHECK_THROWS_AS(stage_count(2), ConfigError);
}

TEST_CASE("generator shapes and range at paper size") {
    auto g = build_generator({});
    g->eval();
    torch::NoGradGuard guard;
    const auto z = torch::randn({2, 128});
    const auto out = g->forward(z);
    CHECK(out.sizes() == torch::IntArrayRef({2, 1, 128, 128}));
    CHECK(out.abs().max().item<float>() <= 1.0f);
    CHECK(torch::equal(out, g->forward(z.view({2, 128, 1, 1}))));
    CHECK_THROWS_AS(g->forward(torch::randn({2, 64})), ShapeError);
}

TEST_CASE("batch of 20 noise vectors gives 20 images") {
    auto g = build_generator({16, 4, 1, 16});
    torch::NoGradGuard guard;
    CHECK(g->forward(torch::randn({20, 16})).size(0) == 20);
}

TEST_CASE("critic scores are per sample and unbounded") {
    auto c = build_critic({1, 8, 16});
    init_weights(*c, 1);
    torch::NoGradGuard guard;
    auto x = torch::rand({20, 1, 16, 16}) * 2 - 1;
    x[1] = x[0];
    const auto s = c->forward(x);
    CHECK(s.sizes() == torch::IntArrayRef({20}));
    CHECK(s[0].item<float>() == s[1].item<float>());
    const auto big = c->forward(torch::full({1, 1, 16, 16}, 1000.0f));
    CHECK(std::abs(big.item<float>()) > 1.0f);
    CHECK_THROWS_AS(c->forward(torch::rand({2, 1, 8, 8})), ShapeError);
}

TEST_CASE("weight init statistics") {
    auto g = build_generator({});
    init_weights(*g, 11);
    const auto w = collect_weights(*g);
    REQUIRE(w.size() > 100000);
    double mean = 0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0;
    for (double v : w) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(w.size()));
    CHECK(std::abs(mean) < 0.001);
    CHECK(std::abs(sd - 0.02) < 0.001);
    for (const auto& p : g->named_parameters()) {
        if (p.key().find("bias") != std::string::npos) CHECK(p.value().abs().max().item<float>() == 0.0f);
    }
    auto g2 = build_generator({});
    init_weights(*g2, 11);
    CHECK(collect_weights(*g2) == w);
}

}  // TEST_SUITE

TEST_SUITE("gan objectives") {

TEST_CASE("interpolation endpoints and arithmetic") {
    const auto real = torch::rand({3, 1, 4, 4});
    const auto fake = torch::rand({3, 1, 4, 4});
    CHECK(torch::equal(interpolate(real, fake, torch::ones({3})), real));
    CHECK(torch::equal(interpolate(real, fake, torch::zeros({3})), fake));
    const auto mixed = interpolate(torch::ones({2, 1, 2, 2}), -torch::ones({2, 1, 2, 2}), torch::full({2}, 0.25));
    CHECK(torch::allclose(mixed, torch::full({2, 1, 2, 2}, -0.5)));
    CHECK_THROWS_AS(interpolate(real, torch::rand({2, 1, 4, 4}), torch::ones({3})), ShapeError);
}

TEST_CASE("penalty of analytic critics") {
    const auto x = torch::rand({4, 1, 128, 128}, torch::kFloat64);
    const ScoreFn sum = [](const torch::Tensor& t) { return t.flatten(1).sum(1); };
    const ScoreFn scaled = [](const torch::Tensor& t) { return t.flatten(1).sum(1) / 128.0; };
    const ScoreFn constant = [](const torch::Tensor& t) { return t.flatten(1).sum(1) * 0.0 + 3.0; };
    CHECK(gradient_penalty(sum, x).item<double>() == doctest::Approx(16129.0));
    CHECK(gradient_penalty(scaled, x).item<double>() == doctest::Approx(0.0));
    CHECK(gradient_penalty(constant, x).item<double>() == doctest::Approx(1.0));
}

TEST_CASE("non-finite gradient carries the step") {
    const ScoreFn sqrt_critic = [](const torch::Tensor& t) { return t.flatten(1).sqrt().sum(1); };
    try {
        gradient_penalty(sqrt_critic, torch::zeros({2, 1, 2, 2}), 17);
        FAIL("expected TrainingInstabilityError");
    } catch (const TrainingInstabilityError& e) {
        CHECK(e.step() == 17);
    }
}

TEST_CASE("input gradients of a tiny critic match central differences") {
    torch::manual_seed(5);
    auto net = torch::nn::Sequential(torch::nn::Flatten(), torch::nn::Linear(16, 8), torch::nn::Tanh(),
                                     torch::nn::Linear(8, 1));
    net->to(torch::kFloat64);
    std::int64_t params = 0;
    for (const auto& p : net->parameters()) params += p.numel();
    REQUIRE(params <= 200);
    const ScoreFn critic = [&](const torch::Tensor& t) { return net->forward(t).squeeze(1); };
    const auto x = torch::randn({3, 1, 4, 4}, torch::kFloat64);
    const auto grad = input_gradient(critic, x, false);
    const double h = 1e-6;
    double worst = 0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        auto plus = x.clone(), minus = x.clone();
        plus.view(-1)[i] += h;
        minus.view(-1)[i] -= h;
        torch::NoGradGuard guard;
        const double fd = (critic(plus).sum().item<double>() - critic(minus).sum().item<double>()) / (2 * h);
        const double an = grad.view(-1)[i].item<double>();
        worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an)));
    }
    CHECK(worst < 1e-4);
    const auto gp = gradient_penalty(critic, x);
    CHECK(gp.item<double>() >= 0.0);
}

TEST_CASE("critic and generator losses") {
    const auto fake = torch::full({4}, 0.5), real = torch::full({4}, 2.0);
    CHECK(critic_loss(real, fake, torch::tensor(0.1), 10.0).item<double>() == doctest::Approx(-0.5));
    CHECK(critic_loss(real, real, torch::tensor(0.0), 10.0).item<double>() == 0.0);
    const auto r = torch::tensor({1.0, 4.0, -2.0}), f = torch::tensor({0.5, 0.0, 3.0});
    const auto zero = torch::tensor(0.0);
    CHECK(critic_loss(r, f, zero, 1.0).item<double>() == doctest::Approx(-critic_loss(f, r, zero, 1.0).item<double>()));
    CHECK(critic_loss(r, f, zero, 1.0).item<double>() == critic_loss(r, f, zero, 1000.0).item<double>());
    CHECK(generator_loss(torch::tensor({1.0, 3.0})).item<double>() == -2.0);
    CHECK(generator_loss(torch::zeros({3})).item<double>() == 0.0);
    CHECK(generator_loss(f + 2.5).item<double>() == doctest::Approx(generator_loss(f).item<double>() - 2.5));
    CHECK(wasserstein_estimate(real, fake) == doctest::Approx(1.5));
}

}  // TEST_SUITE

TEST_SUITE("gan trainer") {

TEST_CASE("update ledger") {
    WganTrainer trainer(tiny_config(), testing::bright_squares(8, 8, 1));
    for (int i = 0; i < 10; ++i) trainer.step();
    CHECK(trainer.record().generator_updates() == 10);
    CHECK(trainer.record().critic_updates() == 50);
    CHECK(trainer.record().steps.size() == 10);
    const auto csv = trainer.record().to_csv();
    CHECK(csv.rfind("step,critic_loss,generator_loss,gradient_penalty,wasserstein_estimate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}

TEST_CASE("checkpoint round trip continues the same trajectory") {
    TempDir dir;
    const auto data = testing::bright_squares(8, 8, 2);
    WganTrainer full(tiny_config(), data);
    for (int i = 0; i < 8; ++i) full.step();

    WganTrainer first(tiny_config(), data);
    for (int i = 0; i < 4; ++i) first.step();
    first.save_checkpoint(dir / "mid.ckpt");
    WganTrainer resumed(tiny_config(), data);
    resumed.load_checkpoint(dir / "mid.ckpt");
    CHECK(resumed.global_step() == 4);
    for (int i = 0; i < 4; ++i) resumed.step();
    for (std::size_t i = 4; i < 8; ++i) {
        CHECK(std::abs(resumed.record().steps[i].critic_loss - full.record().steps[i].critic_loss) <= 1e-6);
        CHECK(std::abs(resumed.record().steps[i].generator_loss - full.record().steps[i].generator_loss) <= 1e-6);
    }
}

TEST_CASE("resume refuses another configuration and a missing file") {
    TempDir dir;
    const auto data = testing::bright_squares(4, 8, 3);
    WganTrainer a(tiny_config(), data);
    a.step();
    a.save_checkpoint(dir / "a.ckpt");
    auto other = tiny_config();
    other.gp_weight = 5.0;
    WganTrainer b(other, data);
    CHECK_THROWS_AS(b.load_checkpoint(dir / "a.ckpt"), FingerprintError);
    CHECK_THROWS_AS(b.load_checkpoint(dir / "absent.ckpt"), MissingArtifactError);
    auto longer = tiny_config();
    longer.epochs = 5000;
    WganTrainer c(longer, data);
    CHECK_NOTHROW(c.load_checkpoint(dir / "a.ckpt"));
}

TEST_CASE("run writes snapshots, checkpoints and generator artifacts per epoch") {
    TempDir dir;
    auto cfg = tiny_config();
    cfg.epochs = 2;
    cfg.snapshot_every = 1;
    cfg.checkpoint_every = 1;
    fs::create_directories(dir / "ckpt");
    fs::create_directories(dir / "snap");
    WganTrainer trainer(cfg, testing::bright_squares(8, 8, 4));
    trainer.run({dir / "ckpt", dir / "snap", dir / "losses.csv"});
    CHECK(trainer.epoch() == 2);
    CHECK(trainer.global_step() == 4);
    std::size_t snapshots = 0;
    for (const auto& e : fs::directory_iterator(dir / "snap")) snapshots += e.path().extension() == ".png";
    CHECK(snapshots == 2);
    const auto grid = data::decode_image(dir / "snap" / "epoch_2.png");
    REQUIRE(grid.has_value());
    CHECK(grid->height == 4 * 8 + 5 * 2);
    CHECK(grid->width == 4 * 8 + 5 * 2);
    CHECK(fs::exists(dir / "ckpt" / "last.ckpt"));
    CHECK(fs::exists(dir / "ckpt" / "generator_epoch_1.pt"));
    const auto art = load_generator_artifact(dir / "ckpt" / "generator_epoch_2.pt", cfg);
    CHECK(art.epoch == 2);
    CHECK_THROWS_AS(load_generator_artifact(dir / "ckpt" / "generator_epoch_9.pt", cfg), MissingArtifactError);
}

TEST_CASE("non-finite losses abort with a diagnostic checkpoint") {
    TempDir dir;
    auto data = testing::bright_squares(4, 8, 5);
    std::vector<data::ImageSample> samples(data.samples().begin(), data.samples().end());
    samples[0].pixels = torch::full({1, 8, 8}, std::nanf(""));
    samples[1].pixels = samples[0].pixels;
    samples[2].pixels = samples[0].pixels;
    samples[3].pixels = samples[0].pixels;
    data::LabeledDataset poisoned(data.labels(), data.role(), samples);
    WganTrainer trainer(tiny_config(), poisoned);
    CHECK_THROWS_AS(trainer.run({dir.path(), {}, dir / "losses.csv"}), TrainingInstabilityError);
    CHECK(fs::exists(dir / "diagnostic.ckpt"));
}

TEST_CASE("invalid configurations") {
    auto cfg = tiny_config();
    cfg.n_critic = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.adam.beta2 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(WganTrainer(tiny_config(), testing::bright_squares(2, 16, 1)), ShapeError);
}

TEST_CASE("grid tiling") {
    const auto images = torch::arange(16, torch::kFloat32).view({16, 1, 1, 1});
    const auto grid = make_grid(images, 4);
    CHECK(grid.sizes() == torch::IntArrayRef({1, 14, 14}));
    // tile 6 sits in row 1, column 2 behind a 2-pixel border
    CHECK(grid[0][2 + 1 * 3][2 + 2 * 3].item<float>() == 6.0f);
    CHECK(grid[0][0][0].item<float>() == -1.0f);
}

}  // TEST_SUITE

TEST_SUITE("sampling") {

TEST_CASE("generation is seeded and labelled") {
    auto g = build_generator({8, 4, 1, 8});
    init_weights(*g, 1);
    CHECK(generate(g, 0, 1, 2).empty());
    const auto a = generate(g, 5, 42, 2);
    const auto b = generate(g, 5, 42, 2);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(torch::equal(a[i].pixels, b[i].pixels));
        CHECK(a[i].label == 2);
        CHECK(a[i].source == data::SampleSource::Synthetic);
        CHECK(data::denormalize(a[i].pixels).data == data::denormalize(b[i].pixels).data);
    }
    CHECK_FALSE(torch::equal(generate(g, 1, 43, 2)[0].pixels, a[0].pixels));
    CHECK_THROWS_AS(generate(g, -1, 1, 0), ConfigError);
}

TEST_CASE("paper-scale expansion counts") {
    std::vector<double> scores(40000, 0.0);
    const auto pool = fake_pool(scores, 4000);
    const auto picked = select_images(pool, 4000, SelectionStrategy::LatestEpoch);
    REQUIRE(picked.size() == 4000);
    for (const auto& p : picked) CHECK(p.epoch == 10);
    CHECK(picked.front().index == 0);
    CHECK(picked.back().index == 3999);
    CHECK(3 * picked.size() == 12000);
}

TEST_CASE("n equal to the pool is the identity") {
    const auto pool = fake_pool({0.3, 0.1, 0.2, 0.5}, 2);
    const auto picked = select_images(pool, 4, SelectionStrategy::LatestEpoch);
    for (std::size_t i = 0; i < 4; ++i) CHECK(picked[i].sample.origin == pool[i].sample.origin);
}

TEST_CASE("critic-score selection matches a sort oracle") {
    util::Rng rng(6);
    std::vector<double> scores;
    for (int i = 0; i < 20; ++i) scores.push_back(util::uniform01(rng) * 10 - 5);
    const auto pool = fake_pool(scores, 5);
    for (std::int64_t n = 0; n <= 20; ++n) {
        auto oracle = scores;
        std::sort(oracle.begin(), oracle.end(), std::greater<>());
        const auto picked = select_images(pool, n, SelectionStrategy::CriticScore);
        REQUIRE(picked.size() == static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) CHECK(picked[i].critic_score == oracle[i]);
    }
}

TEST_CASE("ties keep generation order; small pools are reported") {
    const auto pool = fake_pool({1.0, 2.0, 1.0, 2.0}, 4);
    const auto picked = select_images(pool, 3, SelectionStrategy::CriticScore);
    CHECK(picked[0].sample.origin == "g1");
    CHECK(picked[1].sample.origin == "g3");
    CHECK(picked[2].sample.origin == "g0");
    try {
        select_images(pool, 7, SelectionStrategy::LatestEpoch);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('7') != std::string::npos);
        CHECK(msg.find('4') != std::string::npos);
    }
    CHECK(parse_selection_strategy("critic_score") == SelectionStrategy::CriticScore);
    CHECK_THROWS_AS(parse_selection_strategy("best"), ConfigError);
}

TEST_CASE("scoring uses the critic") {
    auto g = build_generator({8, 4, 1, 8});
    auto c = build_critic({1, 4, 8});
    init_weights(*g, 1);
    init_weights(*c, 2);
    auto pool = generate_tagged(g, 3, 7, 0, 4);
    score_images(pool, c);
    torch::NoGradGuard guard;
    c->eval();
    for (const auto& p : pool) {
        CHECK(p.epoch == 4);
        CHECK(p.critic_score == doctest::Approx(c->forward(p.sample.pixels.unsqueeze(0)).item<double>()));
    }
}

}  // TEST_SUITE
