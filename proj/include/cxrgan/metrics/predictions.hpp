#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cxrgan::metrics {

struct Prediction {
    int truth = 0;
    int predicted = 0;
    std::vector<double> probabilities;  // length K, non-negative, sums to 1
};

using PredictionSet = std::vector<Prediction>;

/// Index of the largest value; ties go to the lowest index.
int argmax(const std::vector<double>& values);

/// Throws std::invalid_argument if a label is outside [0, K) or a probability vector is
/// malformed (wrong length, negative entry, sum off by more than 1e-6).
void validate(const PredictionSet& predictions, int num_classes);

/// CSV with header `truth,predicted,p0,...,p{K-1}`.
std::string to_csv(const PredictionSet& predictions, int num_classes);
PredictionSet read_predictions_csv(const std::filesystem::path& path);

}  // namespace cxrgan::metrics
