#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "cxrgan/metrics/confusion.hpp"
#include "cxrgan/util/random.hpp"

using namespace cxrgan::metrics;

namespace {

const std::vector<std::string> kNames = {"COVID-19", "NORMAL", "VIRAL_PNEUMONIA"};

PredictionSet from_counts(const std::vector<std::vector<std::int64_t>>& counts) {
    PredictionSet out;
    const int k = static_cast<int>(counts.size());
    for (int a = 0; a < k; ++a) {
        for (int p = 0; p < k; ++p) {
            for (std::int64_t n = 0; n < counts[a][p]; ++n) {
                std::vector<double> probs(k, 0.0);
                probs[p] = 1.0;
                out.push_back({a, p, probs});
            }
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("confusion") {

TEST_CASE("perfect predictions give a diagonal matrix") {
    const auto cm = confusion_matrix(from_counts({{59, 0, 0}, {0, 164, 0}, {0, 0, 152}}), 3, kNames);
    CHECK(cm.at(0, 0) == 59);
    CHECK(cm.at(1, 1) == 164);
    CHECK(cm.at(2, 2) == 152);
    CHECK(cm.total() == 375);
    CHECK(cm.trace() == 375);
    for (int a = 0; a < 3; ++a) {
        for (int p = 0; p < 3; ++p) {
            if (a != p) CHECK(cm.at(a, p) == 0);
        }
    }
}

TEST_CASE("rows are actual classes, columns predicted") {
    PredictionSet preds = {{0, 2, {0, 0, 1}}, {0, 2, {0, 0, 1}}, {1, 0, {1, 0, 0}}};
    const auto cm = confusion_matrix(preds, 3, kNames);
    CHECK(cm.at(0, 2) == 2);
    CHECK(cm.at(1, 0) == 1);
    CHECK(cm.row_sum(0) == 2);
    CHECK(cm.column_sum(2) == 2);
}

TEST_CASE("label out of range is rejected") {
    CHECK_THROWS_AS(confusion_matrix({{3, 0, {1, 0, 0}}}, 3, kNames), std::invalid_argument);
    CHECK_THROWS_AS(confusion_matrix({{0, -1, {1, 0, 0}}}, 3, kNames), std::invalid_argument);
}

TEST_CASE("VGG-16 reconstruction metrics") {
    const ConfusionMatrix cm(kNames, {{55, 0, 4}, {0, 164, 0}, {0, 0, 152}});
    CHECK(precision(cm, 0) == doctest::Approx(1.0));
    CHECK(recall(cm, 0) == doctest::Approx(55.0 / 59.0));
    CHECK(f1(cm, 0) == doctest::Approx(2 * (55.0 / 59.0) / (1 + 55.0 / 59.0)));
    CHECK(accuracy(cm) == doctest::Approx(371.0 / 375.0));
}

TEST_CASE("ResNet-50 reconstruction metrics") {
    const ConfusionMatrix cm(kNames, {{19, 0, 40}, {0, 161, 3}, {0, 0, 152}});
    CHECK(recall(cm, 0) == doctest::Approx(19.0 / 59.0));
    CHECK(precision(cm, 2) == doctest::Approx(152.0 / 195.0));
    CHECK(accuracy(cm) == doctest::Approx(332.0 / 375.0));
}

TEST_CASE("empty predicted class has precision 0 and no error") {
    const ConfusionMatrix cm(kNames, {{5, 0, 0}, {2, 0, 0}, {0, 0, 3}});
    CHECK(precision(cm, 1) == 0.0);
    CHECK(recall(cm, 1) == 0.0);
    CHECK(f1(cm, 1) == 0.0);
}

TEST_CASE("derived counts partition the total") {
    cxrgan::util::Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(cxrgan::util::uniform_below(rng, 4));
        std::vector<std::vector<std::int64_t>> counts(k, std::vector<std::int64_t>(k));
        for (auto& row : counts) {
            for (auto& v : row) v = static_cast<std::int64_t>(cxrgan::util::uniform_below(rng, 20));
        }
        std::vector<std::string> names;
        for (int c = 0; c < k; ++c) names.push_back(std::to_string(c));
        const ConfusionMatrix cm(names, counts);
        std::int64_t row_total = 0;
        for (int c = 0; c < k; ++c) {
            CHECK(cm.true_positives(c) + cm.false_positives(c) + cm.false_negatives(c) + cm.true_negatives(c) ==
                  cm.total());
            CHECK(cm.true_positives(c) == counts[c][c]);
            row_total += cm.row_sum(c);
            const double p = precision(cm, c), r = recall(cm, c), f = f1(cm, c);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            CHECK(f <= (p + r) / 2 + 1e-12);
            CHECK((f == 0.0) == (p * r == 0.0));
        }
        CHECK(row_total == cm.total());
        if (cm.total() > 0) CHECK(accuracy(cm) == static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
    }
}

TEST_CASE("confusion matrix ignores sample order") {
    auto preds = from_counts({{7, 1, 2}, {0, 9, 3}, {4, 0, 5}});
    const auto reference = confusion_matrix(preds, 3, kNames);
    cxrgan::util::Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto order = cxrgan::util::permutation(preds.size(), rng);
        PredictionSet shuffled;
        for (auto i : order) shuffled.push_back(preds[i]);
        CHECK(confusion_matrix(shuffled, 3, kNames).rows() == reference.rows());
    }
}

TEST_CASE("malformed matrices are rejected") {
    CHECK_THROWS_AS(ConfusionMatrix(kNames, {{1, 2}, {3, 4}}), std::invalid_argument);
    CHECK_THROWS_AS(ConfusionMatrix(kNames, {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}}), std::invalid_argument);
}

}  // TEST_SUITE
