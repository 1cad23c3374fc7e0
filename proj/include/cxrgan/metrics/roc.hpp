#pragma once

#include <span>
#include <string>
#include <vector>

#include "cxrgan/metrics/predictions.hpp"

namespace cxrgan::metrics {

struct RocPoint {
    double threshold = 0.0;  // +inf for the (0, 0) anchor
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    int class_id = 0;
    std::string class_name;
    std::vector<RocPoint> points;  // (0,0) ... (1,1), non-decreasing in both coordinates
    double auc = 0.0;
};

/// Binary ROC: thresholds sweep the distinct scores in descending order and tied samples move
/// together. Throws std::invalid_argument without at least one positive and one negative.
RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positive);

/// One-vs-rest ROC for class `c` using the probability of `c` as the score.
RocCurve roc_curve(const PredictionSet& predictions, int c, const std::string& class_name = {});

/// Trapezoid rule over the polyline.
double trapezoid_auc(const std::vector<RocPoint>& points);

/// threshold,fpr,tpr
std::string to_csv(const RocCurve& curve);

}  // namespace cxrgan::metrics
