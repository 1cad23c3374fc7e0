#include "torch_doctest.hpp"

#include <fstream>
#include <set>

#include "cxrgan/data/split.hpp"
#include "cxrgan/errors.hpp"
#include "fixtures.hpp"

using namespace cxrgan;
using namespace cxrgan::data;
namespace fs = std::filesystem;
using testing::TempDir;

namespace {

LabeledDataset tiny_pool(std::size_t n) {
    std::vector<ImageSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        samples.push_back({torch::full({1, 1, 1}, 0.0f), static_cast<int>(i % 3), SampleSource::Real,
                           "s" + std::to_string(i)});
    }
    return {LabelSet::chest_xray_default(), DatasetRole::Train, std::move(samples)};
}

std::set<std::string> origins(const LabeledDataset& d) {
    std::set<std::string> out;
    for (const auto& s : d.samples()) out.insert(s.origin);
    return out;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_SUITE("labels") {

TEST_CASE("default label set") {
    const auto labels = LabelSet::chest_xray_default();
    REQUIRE(labels.size() == 3);
    CHECK(labels[0].name == "COVID-19");
    CHECK(labels[2].id == 2);
    CHECK(labels.id_of("NORMAL") == 1);
    CHECK_FALSE(labels.find("covid").has_value());
    CHECK_THROWS_AS(labels.id_of("OTHER"), ConfigError);
}

TEST_CASE("duplicate or empty names are rejected") {
    CHECK_THROWS_AS(LabelSet({"a", "a"}), ConfigError);
    CHECK_THROWS_AS(LabelSet({"a", ""}), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("dataset") {

TEST_CASE("counts, subsets and concatenation") {
    const auto pool = tiny_pool(10);
    const auto counts = pool.class_counts();
    CHECK((counts == std::vector<std::size_t>{4, 3, 3}));
    CHECK(pool.only_class(1).size() == 3);
    const std::vector<std::size_t> idx = {0, 5};
    const auto sub = pool.subset(idx, DatasetRole::Validation);
    CHECK(sub.size() == 2);
    CHECK(sub.role() == DatasetRole::Validation);
    CHECK(sub[1].origin == "s5");
    CHECK(concat({pool, sub}, DatasetRole::Train).size() == 12);
}

TEST_CASE("unregistered labels are rejected") {
    std::vector<ImageSample> bad = {{torch::zeros({1, 1, 1}), 3, SampleSource::Real, "x"}};
    CHECK_THROWS_AS(LabeledDataset(LabelSet::chest_xray_default(), DatasetRole::Train, bad), ConfigError);
}

TEST_CASE("stacking mismatched shapes fails") {
    std::vector<ImageSample> samples = {{torch::zeros({1, 2, 2}), 0, SampleSource::Real, "a"},
                                        {torch::zeros({1, 3, 3}), 0, SampleSource::Real, "b"}};
    const LabeledDataset d(LabelSet({"x"}), DatasetRole::Train, samples);
    const std::vector<std::size_t> order = {0, 1};
    CHECK_THROWS_AS(d.stack_pixels(order), ShapeError);
}

}  // TEST_SUITE

TEST_SUITE("normalize") {

TEST_CASE("endpoint and midpoint values") {
    CHECK(normalize_value(0) == -1.0f);
    CHECK(normalize_value(255) == 1.0f);
    CHECK(normalize_value(128) == doctest::Approx(128.0 / 127.5 - 1.0));
    const auto t = normalize(testing::flat_image(4, 4, 255), {1, 4, 4});
    CHECK(t.max().item<float>() == 1.0f);
}

TEST_CASE("denormalize inverts normalize for every byte value") {
    RawImage img;
    img.height = 16;
    img.width = 16;
    img.channels = 1;
    for (int v = 0; v < 256; ++v) img.data.push_back(static_cast<std::uint8_t>(v));
    const auto back = denormalize(normalize(img, {1, 16, 16}));
    CHECK(back.data == img.data);
    for (int v = 0; v < 256; ++v) CHECK(denormalize_value(normalize_value(static_cast<std::uint8_t>(v))) == v);
}

TEST_CASE("grayscale is replicated to three channels and resized") {
    util::Rng rng(1);
    auto img = testing::flat_image(128, 128, 0);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(util::uniform_below(rng, 256));
    const auto t = normalize(img, kClassifierShape);
    CHECK(t.sizes() == torch::IntArrayRef({3, 224, 224}));
    CHECK(torch::equal(t[0], t[1]));
    CHECK(torch::equal(t[1], t[2]));
    CHECK(t.min().item<float>() >= -1.0f);
    CHECK(t.max().item<float>() <= 1.0f);
}

TEST_CASE("RGB reduces to luma") {
    auto img = testing::flat_image(2, 2, 0, 3);
    for (std::size_t i = 0; i < img.data.size(); i += 3) img.data[i] = 255;  // pure red
    const auto t = normalize(img, {1, 2, 2});
    CHECK(t[0][0][0].item<float>() == doctest::Approx(0.299 * 2.0 - 1.0).epsilon(1e-5));
}

TEST_CASE("malformed input is rejected") {
    CHECK_THROWS_AS(normalize(RawImage{}, kGanShape), ShapeError);
    CHECK_THROWS_AS(conform(torch::zeros({2, 4, 4}), kGanShape), ShapeError);
}

}  // TEST_SUITE

TEST_SUITE("augmentation") {

TEST_CASE("degenerate policy is the identity") {
    const auto x = torch::rand({3, 224, 224}) * 2 - 1;
    util::Rng rng(1);
    AugmentationPolicy policy{0.0, 0, 224, 224};
    CHECK(torch::equal(augment(x, policy, rng), x));
}

TEST_CASE("flip probability 1 reverses columns and is an involution") {
    const auto x = torch::rand({1, 5, 7});
    util::Rng rng(2);
    AugmentationPolicy policy{1.0, 0, 5, 7};
    const auto once = augment(x, policy, rng);
    for (int c = 0; c < 7; ++c) CHECK(torch::equal(once.select(2, c), x.select(2, 6 - c)));
    CHECK(torch::equal(augment(once, policy, rng), x));
}

TEST_CASE("pad 4 reaches all 81 crop offsets with the expected content") {
    const std::int64_t n = 224;
    const auto ramp = torch::arange(n * n, torch::kFloat64).div(double(n * n)).mul(2).sub(1).to(torch::kFloat32);
    const auto x = ramp.view({1, n, n});
    AugmentationPolicy policy{0.0, 4, 224, 224};
    util::Rng rng(3);
    std::set<std::pair<int, int>> seen;
    for (int trial = 0; trial < 2000 && seen.size() < 81; ++trial) {
        util::Rng probe = rng;
        const auto draw = draw_augmentation(policy, n, n, probe);
        const auto out = augment(x, policy, rng);
        REQUIRE(out.sizes() == x.sizes());
        // manual oracle: out(i, j) = x(i + top - 4, j + left - 4), or -1 outside the image
        auto expected = torch::full({1, n, n}, -1.0f);
        const int dy = draw.top - 4, dx = draw.left - 4;
        const auto y0 = std::max(0, -dy), y1 = std::min<int>(n, n - dy);
        const auto x0 = std::max(0, -dx), x1 = std::min<int>(n, n - dx);
        expected.narrow(1, y0, y1 - y0).narrow(2, x0, x1 - x0)
            .copy_(x.narrow(1, y0 + dy, y1 - y0).narrow(2, x0 + dx, x1 - x0));
        CHECK(torch::equal(out, expected));
        CHECK(out.min().item<float>() >= -1.0f);
        seen.insert({dy, dx});
    }
    CHECK(seen.size() == 81);
    for (const auto& [dy, dx] : seen) {
        CHECK(std::abs(dy) <= 4);
        CHECK(std::abs(dx) <= 4);
    }
}

TEST_CASE("crop larger than the padded image is rejected") {
    util::Rng rng(4);
    CHECK_THROWS_AS(augment(torch::zeros({1, 10, 10}), AugmentationPolicy{0.5, 1, 13, 10}, rng), ConfigError);
    CHECK_THROWS_AS(augment(torch::zeros({1, 10, 10}), AugmentationPolicy{1.5, 0, 10, 10}, rng), ConfigError);
}

TEST_CASE("seeded augmentation is reproducible and stays in range") {
    const auto x = torch::rand({1, 32, 32}) * 2 - 1;
    AugmentationPolicy policy{0.5, 4, 32, 32};
    util::Rng a(7), b(7);
    for (int i = 0; i < 50; ++i) {
        const auto ya = augment(x, policy, a);
        CHECK(torch::equal(ya, augment(x, policy, b)));
        CHECK(ya.max().item<float>() <= 1.0f);
        CHECK(ya.min().item<float>() >= -1.0f);
    }
}

}  // TEST_SUITE

TEST_SUITE("ingest") {

TEST_CASE("paper-sized class layouts") {
    TempDir dir;
    const auto labels = LabelSet::chest_xray_default();
    testing::write_toy_tree(dir / "train", labels, 146, 8, 1);
    const auto train = ingest_directory(dir / "train", labels, {{1, 8, 8}});
    CHECK(train.dataset.size() == 438);
    CHECK((train.dataset.class_counts() == std::vector<std::size_t>{146, 146, 146}));

    for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{{"COVID-19", 59}, {"NORMAL", 164},
                                                                         {"VIRAL_PNEUMONIA", 152}}) {
        const LabelSet one({name});
        testing::write_toy_tree(dir / "test", one, n, 8, 2);
    }
    const auto test = ingest_directory(dir / "test", labels, {{1, 8, 8}});
    CHECK(test.dataset.size() == 375);
    CHECK((test.dataset.class_counts() == std::vector<std::size_t>{59, 164, 152}));
}

TEST_CASE("empty class directory and undecodable files") {
    TempDir dir;
    const LabelSet labels({"a", "b"});
    testing::write_toy_tree(dir.path(), LabelSet({"a"}), 3, 8, 1);
    fs::create_directories(dir / "b");
    write_text(dir / "a" / "broken.png", "not a png");
    write_text(dir / "a" / "notes.txt", "ignored");
    const auto result = ingest_directory(dir.path(), labels, {{1, 8, 8}});
    CHECK(result.dataset.count(0) == 3);
    CHECK(result.dataset.count(1) == 0);
    REQUIRE(result.skipped.size() == 1);
    CHECK(result.skipped[0].filename() == "broken.png");
}

TEST_CASE("missing class directory names the directory") {
    TempDir dir;
    testing::write_toy_tree(dir.path(), LabelSet({"a"}), 1, 8, 1);
    try {
        ingest_directory(dir.path(), LabelSet({"a", "b"}), {{1, 8, 8}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find((dir / "b").string()) != std::string::npos);
    }
}

TEST_CASE("allow list restricts files") {
    TempDir dir;
    testing::write_toy_tree(dir.path(), LabelSet({"a"}), 4, 8, 1);
    IngestOptions opts{{1, 8, 8}};
    opts.allow_list = std::vector<std::string>{"img_1.png", "img_3.png"};
    const auto result = ingest_directory(dir.path(), LabelSet({"a"}), opts);
    REQUIRE(result.dataset.size() == 2);
    CHECK(fs::path(result.dataset[0].origin).filename() == "img_1.png");
}

TEST_CASE("metadata filtering") {
    TempDir dir;
    const auto csv = dir / "meta.csv";
    write_text(csv, "filename,view\nx.png,AP\ny.png,PA\nz.png,AP\n");
    CHECK((filter_metadata(csv, "view", "AP") == std::vector<std::string>{"x.png", "z.png"}));
    CHECK(filter_metadata(csv, "view", "LL").empty());
    try {
        filter_metadata(csv, "projection", "AP");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("projection") != std::string::npos);
    }
    CHECK_THROWS_AS(filter_metadata(dir / "absent.csv", "view", "AP"), IoError);
}

}  // TEST_SUITE

TEST_SUITE("split") {

TEST_CASE("sizes") {
    CHECK(validation_size(12000, {0.2, 1}) == 2400);
    CHECK(validation_size(438, {0.2, 1}) == 88);
    const auto [train, val] = split(tiny_pool(12000), {0.2, 5});
    CHECK(train.size() == 9600);
    CHECK(val.size() == 2400);
}

TEST_CASE("partition is disjoint, complete and seeded") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pool = tiny_pool(10);
        const auto [train, val] = split(pool, {0.2, seed});
        CHECK(train.size() == 8);
        CHECK(val.size() == 2);
        CHECK(val.role() == DatasetRole::Validation);
        auto all = origins(train);
        for (const auto& o : origins(val)) CHECK(all.insert(o).second);
        CHECK(all.size() == 10);
        const auto [train2, val2] = split(pool, {0.2, seed});
        CHECK(origins(val2) == origins(val));
    }
}

TEST_CASE("fraction outside (0, 1) is rejected") {
    CHECK_THROWS_AS(split(tiny_pool(10), {0.0, 1}), ConfigError);
    CHECK_THROWS_AS(split(tiny_pool(10), {1.0, 1}), ConfigError);
}

}  // TEST_SUITE
