#include <algorithm>
#include <numeric>
#include <limits>
#include <random>
#include <string>

#include "repcx/error.hpp"
#include "repcx/knn.hpp"

namespace repcx {

ComplexityEstimate combine_subset_errors(std::vector<double> per_subset, std::size_t subset_size,
                                         std::size_t n_points, std::size_t dropped_tail) {
    ComplexityEstimate e;
    double sum = 0.0;
    for (double v : per_subset) sum += v;
    e.subset_count = per_subset.size();
    e.value = per_subset.empty() ? 0.0 : sum / static_cast<double>(per_subset.size());
    e.subset_size = subset_size;
    e.n_points = n_points;
    e.dropped_tail = dropped_tail;
    e.per_subset = std::move(per_subset);
    return e;
}

ComplexityEstimate loo_nn_error(const LabeledPointSet& set, std::size_t threads) {
    const auto predicted = loo_nn_predictions(set, threads);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != set.label(i) ? 1 : 0;
    const double rate = static_cast<double>(wrong) / static_cast<double>(set.size());
    return combine_subset_errors({rate}, set.size(), set.size(), 0);
}

ComplexityEstimate subset_mean_complexity(const LabeledPointSet& set, std::size_t subset_size,
                                          std::size_t threads) {
    if (subset_size < 2)
        fail(ErrorCode::Parameter, "subset size must be at least 2, got " + std::to_string(subset_size));
    const std::size_t n = set.size();
    if (n <= subset_size) return loo_nn_error(set, threads);

    const std::size_t count = n / subset_size;
    std::vector<double> per_subset;
    per_subset.reserve(count);
    for (std::size_t s = 0; s < count; ++s)
        per_subset.push_back(loo_nn_error(set.slice(s * subset_size, subset_size), threads).value);
    return combine_subset_errors(std::move(per_subset), subset_size, n, n - count * subset_size);
}

namespace {

// Uniform draw in [0, bound) from raw 64-bit outputs: reject the partial
// top bucket so every residue is equally likely.
std::uint64_t draw_below(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
    if (n > total)
        fail(ErrorCode::Parameter, "cannot sample " + std::to_string(n) + " of " + std::to_string(total) + " points");
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (n < total) {
        std::mt19937_64 gen(seed);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = i + static_cast<std::size_t>(draw_below(gen, total - i));
            std::swap(pool[i], pool[j]);
        }
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

LabeledPointSet subsample(const LabeledPointSet& set, std::size_t n, std::uint64_t seed) {
    const auto idx = subsample_indices(set.size(), n, seed);
    return set.select(idx);
}

}  // namespace repcx
