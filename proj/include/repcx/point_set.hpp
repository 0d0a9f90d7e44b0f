#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repcx {

using Label = std::int32_t;

struct PointSetMeta {
    std::string boundary;
    std::string split;
    std::optional<int> epoch;

    friend bool operator==(const PointSetMeta&, const PointSetMeta&) = default;
};

/// N points of dimension D stored row-major in 32-bit floats, one class label
/// per point.
class LabeledPointSet {
public:
    LabeledPointSet() = default;

    /// Validates row length and label range. `num_classes == 0` infers it as
    /// max(label) + 1.
    LabeledPointSet(std::vector<float> points, std::size_t dim, std::vector<Label> labels,
                    std::size_t num_classes = 0, PointSetMeta meta = {});

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    bool empty() const noexcept { return labels_.empty(); }

    std::span<const float> point(std::size_t i) const noexcept {
        return {points_.data() + i * dim_, dim_};
    }
    std::span<const float> points() const noexcept { return points_; }
    std::span<const Label> labels() const noexcept { return labels_; }
    Label label(std::size_t i) const noexcept { return labels_[i]; }

    const PointSetMeta& meta() const noexcept { return meta_; }
    PointSetMeta& meta() noexcept { return meta_; }

    /// Rows at `indices`, in the given order.
    LabeledPointSet select(std::span<const std::size_t> indices) const;
    /// Rows [begin, begin + count).
    LabeledPointSet slice(std::size_t begin, std::size_t count) const;

    friend bool operator==(const LabeledPointSet&, const LabeledPointSet&) = default;

private:
    std::vector<float> points_;
    std::size_t dim_ = 0;
    std::vector<Label> labels_;
    std::size_t num_classes_ = 0;
    PointSetMeta meta_;
};

}  // namespace repcx
