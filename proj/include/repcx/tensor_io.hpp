#pragma once

#include <filesystem>

#include "repcx/point_set.hpp"
#include "repcx/tensor.hpp"

namespace repcx {

enum class TensorFormat { Rtd, Npy, Idx };

/// Detects the on-disk format from the leading magic bytes.
TensorFormat detect_format(const std::filesystem::path& path);

/// Loads an RTD, NPY or IDX file, selected by magic bytes.
Tensor load_tensor(const std::filesystem::path& path);

/// Writes the canonical RTD format.
void save_tensor(const Tensor& t, const std::filesystem::path& path);

Tensor load_rtd(const std::filesystem::path& path);
void save_rtd(const Tensor& t, const std::filesystem::path& path);

// NPY v1.0, C order, '<f4' '<f8' '<i8' '|u1'. The writer reproduces numpy's
// own header layout, so files from numpy round-trip byte for byte.
Tensor load_npy(const std::filesystem::path& path);
void save_npy(const Tensor& t, const std::filesystem::path& path);

// IDX (big-endian, unsigned byte payloads only).
Tensor load_idx(const std::filesystem::path& path);
void save_idx(const Tensor& t, const std::filesystem::path& path);

/// Writes `t` in the requested format.
void save_tensor_as(const Tensor& t, const std::filesystem::path& path, TensorFormat format);

/// Narrows an integer label tensor (i64 or u8, any rank) to labels, rejecting
/// negative values.
std::vector<Label> labels_from_tensor(const Tensor& t);
Tensor labels_to_tensor(std::span<const Label> labels);

/// Reads MNIST IDX images + labels. Each 28x28 image is scaled by 1/255 and
/// zero-padded by 2 pixels per side, giving D = 1024 (1x32x32).
LabeledPointSet load_mnist_idx(const std::filesystem::path& images,
                               const std::filesystem::path& labels);

/// The MNIST transform on one already-loaded u8 image tensor [N, 28, 28].
std::vector<float> pad_and_scale_mnist(const Tensor& images);

/// Samples along axis 0 of a [N, ...] tensor as a point set; label tensor
/// length must equal N.
LabeledPointSet point_set_from_tensors(const Tensor& samples, const Tensor& labels,
                                       std::size_t num_classes = 0);

/// Images for the network: accepts an IDX image file (28x28, MNIST transform
/// applied) or an RTD/NPY tensor already shaped [N,1,32,32], [N,32,32] or
/// [N,1024].
LabeledPointSet load_image_set(const std::filesystem::path& images,
                               const std::filesystem::path& labels);

}  // namespace repcx
