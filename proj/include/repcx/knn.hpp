#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "repcx/point_set.hpp"

namespace repcx {

/// Leave-one-out 1-NN error of a point set, possibly averaged over
/// contiguous equal-size subsets.
struct ComplexityEstimate {
    double value = 0.0;
    std::size_t n_points = 0;      ///< size of the measured set, including dropped tail
    std::size_t subset_count = 0;
    std::size_t subset_size = 0;
    std::vector<double> per_subset;
    std::size_t dropped_tail = 0;

    friend bool operator==(const ComplexityEstimate&, const ComplexityEstimate&) = default;
};

/// Reference distance: sum of (a_k - b_k)^2 accumulated in double, in index
/// order. Every decision the search makes is confirmed with this function.
double squared_distance(std::span<const float> a, std::span<const float> b);

/// Label of the nearest other point to point i (lowest index on ties), by
/// direct scan with the reference distance.
Label loo_nn_predict(const LabeledPointSet& set, std::size_t i);

/// Index of every point's nearest other point, lowest index on distance ties.
/// Uses the blocked search; results equal a direct scan exactly.
std::vector<std::size_t> loo_nn_neighbors(const LabeledPointSet& set, std::size_t threads = 0);

std::vector<Label> loo_nn_predictions(const LabeledPointSet& set, std::size_t threads = 0);

/// Fraction of points whose nearest other point carries a different label.
ComplexityEstimate loo_nn_error(const LabeledPointSet& set, std::size_t threads = 0);

/// Mean LOO error over floor(N/m) contiguous subsets of size m; the N mod m
/// trailing points are dropped and reported. N <= m collapses to a single
/// LOO evaluation over the whole set.
ComplexityEstimate subset_mean_complexity(const LabeledPointSet& set, std::size_t subset_size,
                                          std::size_t threads = 0);

/// Assembles an estimate from per-subset errors (mean taken in subset order).
ComplexityEstimate combine_subset_errors(std::vector<double> per_subset, std::size_t subset_size,
                                         std::size_t n_points, std::size_t dropped_tail);

/// Ascending indices of a uniform n-of-N sample without replacement.
///
/// Generator: std::mt19937_64 seeded with `seed`, driving a partial
/// Fisher-Yates shuffle; each draw in [0, k) uses rejection on the raw 64-bit
/// output (no std distributions, whose output is implementation-defined).
std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed);

LabeledPointSet subsample(const LabeledPointSet& set, std::size_t n, std::uint64_t seed);

}  // namespace repcx
