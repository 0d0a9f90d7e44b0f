#include <limits>
#include <string>

#include "repcx/error.hpp"
#include "repcx/knn.hpp"

namespace repcx {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        fail(ErrorCode::Dimension, "distance between vectors of length " + std::to_string(a.size()) + " and " +
                                       std::to_string(b.size()));
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
        sum += d * d;
    }
    return sum;
}

Label loo_nn_predict(const LabeledPointSet& set, std::size_t i) {
    if (set.size() < 2)
        fail(ErrorCode::InsufficientData, "leave-one-out needs at least 2 points, got " + std::to_string(set.size()));
    if (i >= set.size()) fail(ErrorCode::Parameter, "query index " + std::to_string(i) + " out of range");
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < set.size(); ++j) {
        if (j == i) continue;
        const double d = squared_distance(set.point(i), set.point(j));
        if (d < best) {
            best = d;
            best_j = j;
        }
    }
    return set.label(best_j);
}

}  // namespace repcx
