#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "cxrgan/metrics/confusion.hpp"

namespace cxrgan::metrics {

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct AverageMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct ClassificationReport {
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;
    std::int64_t total = 0;
    AverageMetrics macro;     // unweighted mean over all K classes
    AverageMetrics weighted;  // support-weighted mean
};

ClassificationReport classification_report(const ConfusionMatrix& cm);

/// Decimal half-up rounding, tolerant of binary representation error (0.985 -> 0.99).
double round_half_up(double value, int decimals);

/// Fixed-width table: precision / recall / f1-score / support with 2-decimal values.
std::string render_text(const ClassificationReport& report);

/// Full-precision machine-readable form.
nlohmann::json to_json(const ClassificationReport& report);
nlohmann::json to_json(const ConfusionMatrix& cm);

}  // namespace cxrgan::metrics
