// Exact leave-one-out nearest-neighbor search.
//
// Distances are first estimated in bulk through the expansion
// |a-b|^2 = |a|^2 + |b|^2 - 2 a.b on mean-centered double copies of the
// points (blocked dot products, see gram_kernel). For each query every
// candidate whose estimate lies within a rigorous rounding-error bound of the
// best estimate is kept, and the final choice among the survivors is made
// with the reference squared_distance, lowest index first. The result is
// therefore identical to a direct scan with the reference distance.
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gram_kernel.hpp"
#include "repcx/error.hpp"
#include "repcx/knn.hpp"
#include "repcx/parallel.hpp"

namespace repcx {
namespace {

using detail::kLanes;
using detail::kTile;

constexpr std::size_t kQueryBlock = 64;
constexpr std::size_t kCandidateBlock = 128;
constexpr double kRelativeMargin = 1e-6;

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

struct CenteredPoints {
    std::vector<double> rows;  // padded_n x stride, zero padding
    std::vector<double> norms; // |row|^2, one per real point
    std::size_t stride = 0;
    std::size_t padded_n = 0;
    double max_norm = 0.0;
};

CenteredPoints center(const LabeledPointSet& set) {
    const std::size_t n = set.size();
    const std::size_t dim = set.dim();
    CenteredPoints c;
    c.stride = std::max(kLanes, round_up(dim, kLanes));
    c.padded_n = round_up(n, std::max(kQueryBlock, kCandidateBlock));

    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = set.point(i);
        for (std::size_t k = 0; k < dim; ++k) mean[k] += p[k];
    }
    for (auto& m : mean) m /= static_cast<double>(n);

    c.rows.assign(c.padded_n * c.stride, 0.0);
    c.norms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = set.point(i);
        double* row = c.rows.data() + i * c.stride;
        double norm = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            row[k] = static_cast<double>(p[k]) - mean[k];
            norm += row[k] * row[k];
        }
        c.norms[i] = norm;
        c.max_norm = std::max(c.max_norm, norm);
    }
    return c;
}

struct Candidate {
    double estimate;
    std::size_t index;
};

// Running best estimate for one query plus every candidate that might still
// turn out to be the exact nearest neighbor.
class QueryState {
public:
    explicit QueryState(double slack) : slack_(slack) {}

    void offer(double estimate, std::size_t j) {
        if (estimate > best_ + margin(best_)) return;
        if (estimate < best_) best_ = estimate;
        kept_.push_back({estimate, j});
        if (kept_.size() >= 2 * prune_at_) {
            prune();
            prune_at_ = std::max<std::size_t>(16, kept_.size());
        }
    }

    std::size_t resolve(const LabeledPointSet& set, std::size_t query) {
        prune();
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = std::numeric_limits<std::size_t>::max();
        const auto q = set.point(query);
        for (const auto& c : kept_) {
            const double d = squared_distance(q, set.point(c.index));
            if (d < best || (d == best && c.index < best_j)) {
                best = d;
                best_j = c.index;
            }
        }
        return best_j;
    }

private:
    double margin(double best) const { return slack_ + kRelativeMargin * std::abs(best); }

    void prune() {
        const double limit = best_ + margin(best_);
        std::erase_if(kept_, [limit](const Candidate& c) { return c.estimate > limit; });
    }

    double slack_;
    double best_ = std::numeric_limits<double>::infinity();
    std::vector<Candidate> kept_;
    std::size_t prune_at_ = 16;
};

}  // namespace

std::vector<std::size_t> loo_nn_neighbors(const LabeledPointSet& set, std::size_t threads) {
    const std::size_t n = set.size();
    if (n < 2) fail(ErrorCode::InsufficientData, "leave-one-out needs at least 2 points, got " + std::to_string(n));

    const CenteredPoints pts = center(set);
    // Bound on |estimate - exact distance| covering centering, norms, the dot
    // product in any summation order, and the final combination; doubled
    // again so the comparison of two estimates stays conservative.
    const double unit = std::numeric_limits<double>::epsilon() / 2;
    const double growth = (4.0 * static_cast<double>(set.dim()) + 32.0) * unit;

    std::vector<std::size_t> neighbor(n);
    const std::size_t blocks = (n + kQueryBlock - 1) / kQueryBlock;
    parallel_for(blocks, threads, [&](std::size_t block) {
        const std::size_t q0 = block * kQueryBlock;
        const std::size_t q_count = std::min(kQueryBlock, n - q0);
        std::vector<QueryState> states;
        states.reserve(q_count);
        for (std::size_t i = 0; i < q_count; ++i)
            states.emplace_back(2.0 * growth * (pts.norms[q0 + i] + pts.max_norm));

        std::vector<double> dots(kQueryBlock * kCandidateBlock);
        for (std::size_t c0 = 0; c0 < n; c0 += kCandidateBlock) {
            const std::size_t c_count = std::min(kCandidateBlock, n - c0);
            detail::gram_block(pts.rows.data() + q0 * pts.stride, kQueryBlock, pts.rows.data() + c0 * pts.stride,
                               kCandidateBlock, pts.stride, dots.data());
            for (std::size_t i = 0; i < q_count; ++i) {
                const std::size_t q = q0 + i;
                const double* row = dots.data() + i * kCandidateBlock;
                for (std::size_t j = 0; j < c_count; ++j) {
                    const std::size_t c = c0 + j;
                    if (c == q) continue;
                    states[i].offer(pts.norms[q] + pts.norms[c] - 2.0 * row[j], c);
                }
            }
        }
        for (std::size_t i = 0; i < q_count; ++i) neighbor[q0 + i] = states[i].resolve(set, q0 + i);
    });
    return neighbor;
}

std::vector<Label> loo_nn_predictions(const LabeledPointSet& set, std::size_t threads) {
    const auto neighbor = loo_nn_neighbors(set, threads);
    std::vector<Label> out(neighbor.size());
    for (std::size_t i = 0; i < neighbor.size(); ++i) out[i] = set.label(neighbor[i]);
    return out;
}

}  // namespace repcx
