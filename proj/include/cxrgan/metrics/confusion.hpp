#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxrgan/metrics/predictions.hpp"

namespace cxrgan::metrics {

/// K x K counts, rows = actual class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> class_names);
    ConfusionMatrix(std::vector<std::string> class_names, std::vector<std::vector<std::int64_t>> counts);

    int size() const noexcept { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& class_names() const noexcept { return names_; }
    std::int64_t at(int actual, int predicted) const;
    void add(int actual, int predicted, std::int64_t count = 1);

    std::int64_t row_sum(int c) const;  // support
    std::int64_t column_sum(int c) const;
    std::int64_t total() const;
    std::int64_t trace() const;

    std::int64_t true_positives(int c) const { return at(c, c); }
    std::int64_t false_positives(int c) const { return column_sum(c) - at(c, c); }
    std::int64_t false_negatives(int c) const { return row_sum(c) - at(c, c); }
    std::int64_t true_negatives(int c) const {
        return total() - true_positives(c) - false_positives(c) - false_negatives(c);
    }

    std::vector<std::vector<std::int64_t>> rows() const;

private:
    std::size_t index(int actual, int predicted) const;

    std::vector<std::string> names_;
    std::vector<std::int64_t> counts_;
};

/// Default class names are "0".."K-1".
ConfusionMatrix confusion_matrix(const PredictionSet& predictions, int num_classes,
                                 std::vector<std::string> class_names = {});

// Zero denominators yield 0.
double precision(const ConfusionMatrix& cm, int c);
double recall(const ConfusionMatrix& cm, int c);
double f1(const ConfusionMatrix& cm, int c);
double accuracy(const ConfusionMatrix& cm);

}  // namespace cxrgan::metrics
