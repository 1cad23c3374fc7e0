#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "cxrgan/metrics/report.hpp"

using namespace cxrgan::metrics;

namespace {

using Matrix = std::array<std::array<int, 3>, 3>;
const std::vector<std::string> kNames = {"COVID-19", "NORMAL", "VIRALPNEUMONIA"};
const std::array<int, 3> kSupport = {59, 164, 152};

// A published report in hundredths: rows COVID, NORMAL, VIRAL as (precision, recall, f1),
// then accuracy, macro (p, r, f1), weighted (p, r, f1).
struct Table {
    std::array<std::array<int, 3>, 3> per_class;
    int accuracy;
    std::array<int, 3> macro;
    std::array<int, 3> weighted;
};

const Table kVgg{{{{100, 93, 96}, {100, 100, 100}, {97, 100, 99}}}, 99, {99, 98, 98}, {99, 99, 99}};
const Table kResnet{{{{100, 32, 49}, {100, 98, 99}, {78, 100, 88}}}, 89, {93, 77, 78}, {91, 89, 87}};
const Table kGooglenet{{{{98, 71, 82}, {99, 98, 98}, {88, 99, 93}}}, 94, {95, 89, 91}, {95, 94, 94}};
const Table kMnasnet{{{{100, 85, 92}, {100, 100, 100}, {94, 100, 97}}}, 98, {98, 95, 96}, {98, 98, 98}};

int hundredths(double v) { return static_cast<int>(std::floor(v * 100.0 + 0.5 + 1e-9)); }

// Independent metric arithmetic straight from the counts.
bool consistent(const Matrix& m, const Table& t) {
    const int n = 375;
    double macro[3] = {0, 0, 0}, weighted[3] = {0, 0, 0};
    int trace = 0;
    for (int c = 0; c < 3; ++c) {
        const int tp = m[c][c];
        int col = 0;
        for (int a = 0; a < 3; ++a) col += m[a][c];
        const double p = col == 0 ? 0.0 : double(tp) / col;
        const double r = double(tp) / kSupport[c];
        const double f = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
        const double v[3] = {p, r, f};
        for (int k = 0; k < 3; ++k) {
            if (hundredths(v[k]) != t.per_class[c][k]) return false;
            macro[k] += v[k] / 3;
            weighted[k] += v[k] * kSupport[c] / n;
        }
        trace += tp;
    }
    if (hundredths(double(trace) / n) != t.accuracy) return false;
    for (int k = 0; k < 3; ++k) {
        if (hundredths(macro[k]) != t.macro[k] || hundredths(weighted[k]) != t.weighted[k]) return false;
    }
    return true;
}

// Every integer matrix with the paper's supports whose report renders to `t`. Rows are pruned
// by rendered recall, which depends on the diagonal alone.
std::vector<Matrix> reconstruct(const Table& t) {
    std::array<std::vector<std::array<int, 3>>, 3> rows;
    for (int c = 0; c < 3; ++c) {
        for (int d = 0; d <= kSupport[c]; ++d) {
            if (hundredths(double(d) / kSupport[c]) != t.per_class[c][1]) continue;
            const int rest = kSupport[c] - d;
            for (int x = 0; x <= rest; ++x) {
                std::array<int, 3> row{};
                row[c] = d;
                row[(c + 1) % 3] = x;
                row[(c + 2) % 3] = rest - x;
                rows[c].push_back(row);
            }
        }
    }
    std::vector<Matrix> found;
    for (const auto& r0 : rows[0]) {
        for (const auto& r1 : rows[1]) {
            for (const auto& r2 : rows[2]) {
                const Matrix m{r0, r1, r2};
                if (consistent(m, t)) found.push_back(m);
            }
        }
    }
    return found;
}

int false_negatives(const Matrix& m, int c) { return kSupport[c] - m[c][c]; }

ConfusionMatrix to_cm(const Matrix& m) {
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& r : m) rows.push_back({r[0], r[1], r[2]});
    return ConfusionMatrix(kNames, rows);
}

std::string table_line(const std::string& name, const std::string& rest) {
    std::istringstream in(rest);
    std::string out = name, tok;
    while (in >> tok) out += " " + tok;
    return out;
}

// Collapses runs of spaces so rendered rows compare against the published table text.
std::vector<std::string> squeeze_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string tok, joined;
        while (words >> tok) joined += (joined.empty() ? "" : " ") + tok;
        if (!joined.empty()) out.push_back(joined);
    }
    return out;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("VGG-16 table reconstructs to a unique matrix") {
    const auto found = reconstruct(kVgg);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == Matrix{{{55, 0, 4}, {0, 164, 0}, {0, 0, 152}}});
    CHECK(false_negatives(found[0], 0) == 4);
}

TEST_CASE("ResNet-50 table reconstructs to a unique matrix") {
    const auto found = reconstruct(kResnet);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == Matrix{{{19, 0, 40}, {0, 161, 3}, {0, 0, 152}}});
    CHECK(false_negatives(found[0], 0) == 40);
    CHECK(false_negatives(found[0], 1) == 3);
}

TEST_CASE("MNASNet table reconstructs to a unique matrix") {
    const auto found = reconstruct(kMnasnet);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == Matrix{{{50, 0, 9}, {0, 164, 0}, {0, 0, 152}}});
}

TEST_CASE("GoogLeNet table does not pin down a single matrix") {
    const auto found = reconstruct(kGooglenet);
    CHECK(found.size() > 1);
    for (const auto& m : found) {
        const auto report = classification_report(to_cm(m));
        CHECK(report.weighted.recall == doctest::Approx(report.accuracy).epsilon(1e-12));
    }
}

TEST_CASE("rendered report matches the published VGG-16 table") {
    const auto text = render_text(classification_report(to_cm({{{55, 0, 4}, {0, 164, 0}, {0, 0, 152}}})));
    const auto lines = squeeze_lines(text);
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] == "precision recall f1-score support");
    CHECK(lines[1] == table_line("COVID-19", "1.00 0.93 0.96 59"));
    CHECK(lines[2] == table_line("NORMAL", "1.00 1.00 1.00 164"));
    CHECK(lines[3] == table_line("VIRALPNEUMONIA", "0.97 1.00 0.99 152"));
    CHECK(lines[4] == table_line("accuracy", "0.99 375"));
    CHECK(lines[5] == table_line("macro avg", "0.99 0.98 0.98 375"));
    CHECK(lines[6] == table_line("weighted avg", "0.99 0.99 0.99 375"));
}

TEST_CASE("rendered report matches the published ResNet-50 and MNASNet tables") {
    auto resnet = squeeze_lines(render_text(classification_report(to_cm({{{19, 0, 40}, {0, 161, 3}, {0, 0, 152}}}))));
    CHECK(resnet[1] == table_line("COVID-19", "1.00 0.32 0.49 59"));
    CHECK(resnet[3] == table_line("VIRALPNEUMONIA", "0.78 1.00 0.88 152"));
    CHECK(resnet[4] == table_line("accuracy", "0.89 375"));
    CHECK(resnet[5] == table_line("macro avg", "0.93 0.77 0.78 375"));
    CHECK(resnet[6] == table_line("weighted avg", "0.91 0.89 0.87 375"));

    auto mnas = squeeze_lines(render_text(classification_report(to_cm({{{50, 0, 9}, {0, 164, 0}, {0, 0, 152}}}))));
    CHECK(mnas[1] == table_line("COVID-19", "1.00 0.85 0.92 59"));
    CHECK(mnas[3] == table_line("VIRALPNEUMONIA", "0.94 1.00 0.97 152"));
    CHECK(mnas[4] == table_line("accuracy", "0.98 375"));
    CHECK(mnas[5] == table_line("macro avg", "0.98 0.95 0.96 375"));
}

TEST_CASE("full precision is kept in the computed report") {
    const auto report = classification_report(to_cm({{{55, 0, 4}, {0, 164, 0}, {0, 0, 152}}}));
    CHECK(report.macro.precision == doctest::Approx((1.0 + 1.0 + 152.0 / 156.0) / 3));
    CHECK(report.accuracy == doctest::Approx(371.0 / 375.0));
    CHECK(report.total == 375);
    const auto j = to_json(report);
    CHECK(j["accuracy"].get<double>() == report.accuracy);
    CHECK(j["classes"][0]["recall"].get<double>() == 55.0 / 59.0);
}

TEST_CASE("single class, all correct") {
    const auto report = classification_report(ConfusionMatrix({"only"}, {{12}}));
    CHECK(report.classes[0].precision == 1.0);
    CHECK(report.classes[0].recall == 1.0);
    CHECK(report.classes[0].f1 == 1.0);
    CHECK(report.accuracy == 1.0);
    CHECK(report.macro.f1 == 1.0);
    CHECK(report.weighted.precision == 1.0);
}

TEST_CASE("macro average counts a class with zero support") {
    const auto report = classification_report(ConfusionMatrix({"a", "b", "c"}, {{4, 0, 0}, {0, 0, 0}, {0, 0, 6}}));
    CHECK(report.macro.recall == doctest::Approx(2.0 / 3.0));
    CHECK(report.weighted.recall == doctest::Approx(1.0));
}

TEST_CASE("weighted recall equals accuracy for every small matrix") {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    if (a + b + c + d == 0) continue;
                    const auto r = classification_report(ConfusionMatrix({"x", "y"}, {{a, b}, {c, d}}));
                    CHECK(r.weighted.recall == doctest::Approx(r.accuracy).epsilon(1e-12));
                }
}

TEST_CASE("half-up rounding") {
    CHECK(round_half_up(0.985, 2) == doctest::Approx(0.99));
    CHECK(round_half_up(0.9849, 2) == doctest::Approx(0.98));
    CHECK(round_half_up(0.125, 2) == doctest::Approx(0.13));
    CHECK(round_half_up(1.0, 2) == doctest::Approx(1.0));
}

}  // TEST_SUITE
