#include "cxrgan/metrics/predictions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cxrgan/util/csv.hpp"

namespace cxrgan::metrics {

int argmax(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return static_cast<int>(best);
}

void validate(const PredictionSet& predictions, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("need at least one class");
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        if (p.truth < 0 || p.truth >= num_classes || p.predicted < 0 || p.predicted >= num_classes) {
            throw std::invalid_argument("prediction " + std::to_string(i) + " has a label outside [0, " +
                                        std::to_string(num_classes) + ")");
        }
        if (p.probabilities.empty()) continue;
        if (static_cast<int>(p.probabilities.size()) != num_classes) {
            throw std::invalid_argument("prediction " + std::to_string(i) + " has a probability vector of length " +
                                        std::to_string(p.probabilities.size()));
        }
        double sum = 0.0;
        for (double v : p.probabilities) {
            if (!(v >= 0.0)) throw std::invalid_argument("negative or NaN probability in prediction " + std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::invalid_argument("probabilities of prediction " + std::to_string(i) + " do not sum to 1");
        }
    }
}

std::string to_csv(const PredictionSet& predictions, int num_classes) {
    std::ostringstream out;
    out.precision(17);
    out << "truth,predicted";
    for (int k = 0; k < num_classes; ++k) out << ",p" << k;
    out << "\n";
    for (const auto& p : predictions) {
        out << p.truth << "," << p.predicted;
        for (double v : p.probabilities) out << "," << v;
        out << "\n";
    }
    return out.str();
}

PredictionSet read_predictions_csv(const std::filesystem::path& path) {
    const auto rows = util::read_csv(path);
    if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "truth" || rows.front()[1] != "predicted") {
        throw std::invalid_argument("prediction CSV must start with header truth,predicted,p0,...");
    }
    const auto width = rows.front().size();
    PredictionSet out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != width) throw std::invalid_argument("ragged prediction CSV at row " + std::to_string(r));
        Prediction p;
        p.truth = std::stoi(row[0]);
        p.predicted = std::stoi(row[1]);
        for (std::size_t k = 2; k < width; ++k) p.probabilities.push_back(std::stod(row[k]));
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace cxrgan::metrics
