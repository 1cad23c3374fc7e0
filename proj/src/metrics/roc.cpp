#include "cxrgan/metrics/roc.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cxrgan::metrics {

RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("scores and labels differ in length");
    const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    const auto n_neg = positive.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("ROC needs at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            if (positive[order[i]]) {
                ++tp;
            } else {
                ++fp;
            }
        }
        curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

RocCurve roc_curve(const PredictionSet& predictions, int c, const std::string& class_name) {
    std::vector<double> scores;
    std::vector<bool> positive;
    scores.reserve(predictions.size());
    for (const auto& p : predictions) {
        if (c < 0 || static_cast<std::size_t>(c) >= p.probabilities.size()) {
            throw std::invalid_argument("class " + std::to_string(c) + " has no probability column");
        }
        scores.push_back(p.probabilities[static_cast<std::size_t>(c)]);
        positive.push_back(p.truth == c);
    }
    const auto label = class_name.empty() ? std::to_string(c) : class_name;
    RocCurve curve;
    try {
        curve = roc_curve(scores, positive);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("ROC for class '" + label + "' needs at least one positive and one negative sample");
    }
    curve.class_id = c;
    curve.class_name = label;
    return curve;
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    }
    return area;
}

std::string to_csv(const RocCurve& curve) {
    std::ostringstream out;
    out.precision(17);
    out << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) out << p.threshold << "," << p.fpr << "," << p.tpr << "\n";
    return out.str();
}

}  // namespace cxrgan::metrics
