#include "cxrgan/pipeline/plots.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"

namespace cxrgan::pipeline {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;
constexpr auto kFont = cv::FONT_HERSHEY_SIMPLEX;

const cv::Scalar kBlack(0, 0, 0);
const cv::Scalar kGrid(225, 225, 225);
// BGR
const std::vector<cv::Scalar> kPalette = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44},
                                          {40, 39, 214},  {189, 103, 148}, {75, 86, 140}};

void save(const std::filesystem::path& path, const cv::Mat& image) {
    util::atomic_write_with(path, [&](const std::filesystem::path& tmp) {
        if (!cv::imwrite(tmp.string(), image)) throw IoError("cannot write " + path.string());
    });
}

std::string fmt_tick(double v) {
    char buf[32];
    if (std::abs(v) >= 1000 || (std::abs(v) < 0.01 && v != 0.0)) {
        std::snprintf(buf, sizeof buf, "%.2g", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.2f", v);
    }
    return buf;
}

void centered_text(cv::Mat& img, const std::string& text, cv::Point center, double scale, int thickness = 1) {
    int baseline = 0;
    const auto size = cv::getTextSize(text, kFont, scale, thickness, &baseline);
    cv::putText(img, text, {center.x - size.width / 2, center.y + size.height / 2}, kFont, scale, kBlack, thickness,
                cv::LINE_AA);
}

struct Frame {
    double x0, x1, y0, y1;
    cv::Rect area{kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom};

    cv::Point map(double x, double y) const {
        const double fx = x1 > x0 ? (x - x0) / (x1 - x0) : 0.5;
        const double fy = y1 > y0 ? (y - y0) / (y1 - y0) : 0.5;
        return {area.x + static_cast<int>(std::lround(fx * area.width)),
                area.y + area.height - static_cast<int>(std::lround(fy * area.height))};
    }
};

cv::Mat draw_frame(const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
    cv::Mat img(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / ticks;
        const double y = f.y0 + (f.y1 - f.y0) * i / ticks;
        const auto px = f.map(x, f.y0);
        const auto py = f.map(f.x0, y);
        cv::line(img, {px.x, f.area.y}, {px.x, f.area.y + f.area.height}, kGrid);
        cv::line(img, {f.area.x, py.y}, {f.area.x + f.area.width, py.y}, kGrid);
        centered_text(img, fmt_tick(x), {px.x, f.area.y + f.area.height + 14}, 0.4);
        int baseline = 0;
        const auto label = fmt_tick(y);
        const auto size = cv::getTextSize(label, kFont, 0.4, 1, &baseline);
        cv::putText(img, label, {f.area.x - size.width - 6, py.y + size.height / 2}, kFont, 0.4, kBlack, 1,
                    cv::LINE_AA);
    }
    cv::rectangle(img, f.area, kBlack);
    centered_text(img, title, {kWidth / 2, 22}, 0.6);
    centered_text(img, xl, {f.area.x + f.area.width / 2, kHeight - 18}, 0.5);
    cv::putText(img, yl, {8, kTop - 12}, kFont, 0.45, kBlack, 1, cv::LINE_AA);
    return img;
}

void draw_legend(cv::Mat& img, const std::vector<std::string>& names, const Frame& f) {
    int y = f.area.y + 18;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int x = f.area.x + f.area.width - 170;
        cv::line(img, {x, y - 4}, {x + 24, y - 4}, kPalette[i % kPalette.size()], 2, cv::LINE_AA);
        cv::putText(img, names[i], {x + 30, y}, kFont, 0.45, kBlack, 1, cv::LINE_AA);
        y += 18;
    }
}

}  // namespace

void plot_lines(const std::filesystem::path& path, const LineChart& chart) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : chart.series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("series " + s.name + " has mismatched x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    Frame f{x0, x1, y0 - pad, y1 + pad};
    auto img = draw_frame(f, chart.title, chart.x_label, chart.y_label);

    std::vector<std::string> names;
    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        names.push_back(s.name);
        std::vector<cv::Point> pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.y[i])) pts.push_back(f.map(s.x[i], s.y[i]));
        }
        const auto color = kPalette[k % kPalette.size()];
        if (pts.size() == 1) cv::circle(img, pts[0], 3, color, cv::FILLED, cv::LINE_AA);
        if (pts.size() > 1) cv::polylines(img, pts, false, color, 2, cv::LINE_AA);
    }
    draw_legend(img, names, f);
    save(path, img);
}

void plot_confusion_matrix(const std::filesystem::path& path, const metrics::ConfusionMatrix& cm,
                           const std::string& title) {
    const int k = cm.size();
    const int cell = std::max(40, std::min(120, 360 / std::max(k, 1)));
    const int left = 170, top = 60;
    const int width = left + k * cell + 40, height = top + k * cell + 90;
    cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
    centered_text(img, title, {width / 2, 22}, 0.6);

    for (int a = 0; a < k; ++a) {
        const auto row = cm.row_sum(a);
        for (int p = 0; p < k; ++p) {
            const double share = row > 0 ? static_cast<double>(cm.at(a, p)) / static_cast<double>(row) : 0.0;
            // white -> dark blue
            const auto shade = [&](double full) { return 255.0 - share * (255.0 - full); };
            const cv::Scalar color(shade(107), shade(48), shade(8));
            const cv::Rect r(left + p * cell, top + a * cell, cell, cell);
            cv::rectangle(img, r, color, cv::FILLED);
            cv::rectangle(img, r, kBlack);
            const auto text = std::to_string(cm.at(a, p));
            int baseline = 0;
            const auto size = cv::getTextSize(text, kFont, 0.6, 1, &baseline);
            cv::putText(img, text, {r.x + (cell - size.width) / 2, r.y + (cell + size.height) / 2}, kFont, 0.6,
                        share > 0.5 ? cv::Scalar(255, 255, 255) : kBlack, 1, cv::LINE_AA);
        }
        cv::putText(img, cm.class_names()[a], {8, top + a * cell + cell / 2 + 5}, kFont, 0.45, kBlack, 1, cv::LINE_AA);
    }
    for (int p = 0; p < k; ++p) {
        centered_text(img, cm.class_names()[p], {left + p * cell + cell / 2, top + k * cell + 16}, 0.4);
    }
    centered_text(img, "Predicted", {left + k * cell / 2, height - 30}, 0.5);
    cv::putText(img, "Actual", {8, top - 10}, kFont, 0.5, kBlack, 1, cv::LINE_AA);
    save(path, img);
}

void plot_roc(const std::filesystem::path& path, const metrics::RocCurve& curve, const std::string& title) {
    Frame f{0.0, 1.0, 0.0, 1.0};
    auto img = draw_frame(f, title, "False Positive Rate", "True Positive Rate");
    cv::line(img, f.map(0, 0), f.map(1, 1), cv::Scalar(160, 160, 160), 1, cv::LINE_AA);
    std::vector<cv::Point> pts;
    for (const auto& p : curve.points) pts.push_back(f.map(p.fpr, p.tpr));
    if (pts.size() > 1) cv::polylines(img, pts, false, kPalette[0], 2, cv::LINE_AA);
    char label[96];
    std::snprintf(label, sizeof label, "%s (AUC = %.4f)", curve.class_name.c_str(), curve.auc);
    int baseline = 0;
    const auto size = cv::getTextSize(label, kFont, 0.45, 1, &baseline);
    const cv::Point at(f.area.x + f.area.width - size.width - 46, f.area.y + f.area.height - 16);
    cv::line(img, {at.x, at.y - 4}, {at.x + 24, at.y - 4}, kPalette[0], 2, cv::LINE_AA);
    cv::putText(img, label, {at.x + 30, at.y}, kFont, 0.45, kBlack, 1, cv::LINE_AA);
    save(path, img);
}

}  // namespace cxrgan::pipeline
