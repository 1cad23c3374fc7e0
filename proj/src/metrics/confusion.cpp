#include "cxrgan/metrics/confusion.hpp"

#include <stdexcept>

namespace cxrgan::metrics {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {
    if (names_.empty()) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names, std::vector<std::vector<std::int64_t>> counts)
    : ConfusionMatrix(std::move(class_names)) {
    if (counts.size() != names_.size()) throw std::invalid_argument("confusion matrix rows do not match classes");
    for (std::size_t a = 0; a < counts.size(); ++a) {
        if (counts[a].size() != names_.size()) throw std::invalid_argument("confusion matrix must be square");
        for (std::size_t p = 0; p < counts[a].size(); ++p) {
            if (counts[a][p] < 0) throw std::invalid_argument("confusion matrix counts must be non-negative");
            counts_[a * names_.size() + p] = counts[a][p];
        }
    }
}

std::size_t ConfusionMatrix::index(int actual, int predicted) const {
    const int k = size();
    if (actual < 0 || actual >= k || predicted < 0 || predicted >= k) {
        throw std::invalid_argument("class index outside [0, " + std::to_string(k) + ")");
    }
    return static_cast<std::size_t>(actual) * names_.size() + static_cast<std::size_t>(predicted);
}

std::int64_t ConfusionMatrix::at(int actual, int predicted) const { return counts_[index(actual, predicted)]; }

void ConfusionMatrix::add(int actual, int predicted, std::int64_t count) { counts_[index(actual, predicted)] += count; }

std::int64_t ConfusionMatrix::row_sum(int c) const {
    std::int64_t s = 0;
    for (int p = 0; p < size(); ++p) s += at(c, p);
    return s;
}

std::int64_t ConfusionMatrix::column_sum(int c) const {
    std::int64_t s = 0;
    for (int a = 0; a < size(); ++a) s += at(a, c);
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (auto v : counts_) s += v;
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int c = 0; c < size(); ++c) s += at(c, c);
    return s;
}

std::vector<std::vector<std::int64_t>> ConfusionMatrix::rows() const {
    std::vector<std::vector<std::int64_t>> out(names_.size());
    for (int a = 0; a < size(); ++a) {
        for (int p = 0; p < size(); ++p) out[static_cast<std::size_t>(a)].push_back(at(a, p));
    }
    return out;
}

ConfusionMatrix confusion_matrix(const PredictionSet& predictions, int num_classes,
                                 std::vector<std::string> class_names) {
    if (class_names.empty()) {
        for (int k = 0; k < num_classes; ++k) class_names.push_back(std::to_string(k));
    }
    if (static_cast<int>(class_names.size()) != num_classes) {
        throw std::invalid_argument("class name count does not match K");
    }
    validate(predictions, num_classes);
    ConfusionMatrix cm(std::move(class_names));
    for (const auto& p : predictions) cm.add(p.truth, p.predicted);
    return cm;
}

namespace {
double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double precision(const ConfusionMatrix& cm, int c) { return ratio(cm.true_positives(c), cm.column_sum(c)); }

double recall(const ConfusionMatrix& cm, int c) { return ratio(cm.true_positives(c), cm.row_sum(c)); }

double f1(const ConfusionMatrix& cm, int c) {
    const double p = precision(cm, c);
    const double r = recall(cm, c);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.trace(), cm.total()); }

}  // namespace cxrgan::metrics
