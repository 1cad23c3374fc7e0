#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cxrgan/metrics/confusion.hpp"
#include "cxrgan/metrics/roc.hpp"

namespace cxrgan::pipeline {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Static PNG renderings. Output is a pure function of the inputs.
void plot_lines(const std::filesystem::path& path, const LineChart& chart);
void plot_confusion_matrix(const std::filesystem::path& path, const metrics::ConfusionMatrix& cm,
                           const std::string& title);
void plot_roc(const std::filesystem::path& path, const metrics::RocCurve& curve, const std::string& title);

}  // namespace cxrgan::pipeline
