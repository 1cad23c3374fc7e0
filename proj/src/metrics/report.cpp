#include "cxrgan/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cxrgan::metrics {

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    ClassificationReport report;
    const int k = cm.size();
    report.total = cm.total();
    report.accuracy = accuracy(cm);

    for (int c = 0; c < k; ++c) {
        ClassMetrics m{cm.class_names()[static_cast<std::size_t>(c)], precision(cm, c), recall(cm, c), f1(cm, c),
                       cm.row_sum(c)};
        report.macro.precision += m.precision / k;
        report.macro.recall += m.recall / k;
        report.macro.f1 += m.f1 / k;
        if (report.total > 0) {
            const double w = static_cast<double>(m.support) / static_cast<double>(report.total);
            report.weighted.precision += w * m.precision;
            report.weighted.f1 += w * m.f1;
        }
        report.classes.push_back(std::move(m));
    }
    // sum_c support_c * recall_c / N == sum_c TP_c / N, so the weighted recall is the accuracy.
    report.weighted.recall = report.accuracy;
    report.macro.support = report.total;
    report.weighted.support = report.total;
    return report;
}

double round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", round_half_up(v, 2));
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_text(const ClassificationReport& report) {
    std::size_t name_width = std::string("weighted avg").size();
    for (const auto& c : report.classes) name_width = std::max(name_width, c.name.size());
    constexpr std::size_t col = 10;

    auto line = [&](const std::string& name, const std::string& p, const std::string& r, const std::string& f,
                    const std::string& s) {
        return pad_left(name, name_width) + pad_left(p, col) + pad_left(r, col) + pad_left(f, col) +
               pad_left(s, col) + "\n";
    };

    std::string out = line("", "precision", "recall", "f1-score", "support") + "\n";
    for (const auto& c : report.classes) {
        out += line(c.name, fixed2(c.precision), fixed2(c.recall), fixed2(c.f1), std::to_string(c.support));
    }
    out += "\n";
    out += line("accuracy", "", "", fixed2(report.accuracy), std::to_string(report.total));
    out += line("macro avg", fixed2(report.macro.precision), fixed2(report.macro.recall), fixed2(report.macro.f1),
                std::to_string(report.macro.support));
    out += line("weighted avg", fixed2(report.weighted.precision), fixed2(report.weighted.recall),
                fixed2(report.weighted.f1), std::to_string(report.weighted.support));
    return out;
}

nlohmann::json to_json(const ClassificationReport& report) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : report.classes) {
        classes.push_back(
            {{"name", c.name}, {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
    }
    auto avg = [](const AverageMetrics& a) {
        return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}, {"support", a.support}};
    };
    return {{"classes", classes},
            {"accuracy", report.accuracy},
            {"total", report.total},
            {"macro_avg", avg(report.macro)},
            {"weighted_avg", avg(report.weighted)}};
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    return {{"class_names", cm.class_names()}, {"orientation", "rows=actual,columns=predicted"}, {"counts", cm.rows()}};
}

}  // namespace cxrgan::metrics
