#include "repcx/point_set.hpp"

#include <algorithm>
#include <string>

#include "repcx/error.hpp"

namespace repcx {

LabeledPointSet::LabeledPointSet(std::vector<float> points, std::size_t dim, std::vector<Label> labels,
                                 std::size_t num_classes, PointSetMeta meta)
    : points_(std::move(points)), dim_(dim), labels_(std::move(labels)), meta_(std::move(meta)) {
    if (points_.size() != labels_.size() * dim_)
        fail(ErrorCode::Dimension, "point set holds " + std::to_string(points_.size()) +
                                        " values, expected " + std::to_string(labels_.size()) +
                                        " rows of " + std::to_string(dim_));
    Label max_label = -1;
    for (Label l : labels_) {
        if (l < 0) fail(ErrorCode::Validation, "negative class label " + std::to_string(l));
        max_label = std::max(max_label, l);
    }
    num_classes_ = num_classes == 0 ? static_cast<std::size_t>(max_label + 1) : num_classes;
    if (max_label >= 0 && static_cast<std::size_t>(max_label) >= num_classes_)
        fail(ErrorCode::Validation, "label " + std::to_string(max_label) + " outside [0, " +
                                        std::to_string(num_classes_) + ")");
}

LabeledPointSet LabeledPointSet::select(std::span<const std::size_t> indices) const {
    std::vector<float> pts;
    pts.reserve(indices.size() * dim_);
    std::vector<Label> labs;
    labs.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) fail(ErrorCode::Parameter, "row index " + std::to_string(i) + " out of range");
        auto row = point(i);
        pts.insert(pts.end(), row.begin(), row.end());
        labs.push_back(labels_[i]);
    }
    return LabeledPointSet(std::move(pts), dim_, std::move(labs), num_classes_, meta_);
}

LabeledPointSet LabeledPointSet::slice(std::size_t begin, std::size_t count) const {
    if (begin + count > size()) fail(ErrorCode::Parameter, "slice out of range");
    std::vector<float> pts(points_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                           points_.begin() + static_cast<std::ptrdiff_t>((begin + count) * dim_));
    std::vector<Label> labs(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                            labels_.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return LabeledPointSet(std::move(pts), dim_, std::move(labs), num_classes_, meta_);
}

}  // namespace repcx
