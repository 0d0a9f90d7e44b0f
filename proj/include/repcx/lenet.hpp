#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repcx/point_set.hpp"
#include "repcx/tensor.hpp"
#include "repcx/weights.hpp"

namespace repcx {

enum class CaptureMode { Eval, TrainDropout };

std::string_view capture_mode_name(CaptureMode m) noexcept;
CaptureMode parse_capture_mode(std::string_view name);

enum class LayerKind { Conv, Dropout, Tanh, Pool, Linear };

struct Layer {
    std::string_view name;
    LayerKind kind;
    Param weight = Param::Conv1W;  // Conv / Linear only
    Param bias = Param::Conv1B;
    bool channelwise = false;      // Dropout only: drop whole channels
};

/// Layer sequence of the network: 11 layers for the basic variant, 15 with
/// the four dropout layers.
std::span<const Layer> network_layers(Variant variant);

enum class Side { Entry, Exit };
std::string_view side_name(Side s) noexcept;

/// A tensor between two layers. Boundary 0 is the input image (entry of the
/// first layer); boundary k > 0 is the exit of layer k-1, which is also the
/// entry of layer k.
struct BoundaryId {
    std::size_t index = 0;
    std::string layer_name;
    Side side = Side::Exit;

    friend bool operator==(const BoundaryId&, const BoundaryId&) = default;
};

std::vector<BoundaryId> network_boundaries(Variant variant);

/// "<index>_<layer>_<side>.rtd", index zero-padded to two digits.
std::string boundary_file_name(const BoundaryId& b);

/// Per-sample dims at every boundary, in network order.
std::vector<Dims> boundary_dims(Variant variant);

// --- kernels ----------------------------------------------------------------
// f32 storage, double accumulation. Sums run in a fixed order (channel, row,
// column for convolution; input index for linear) and the bias is added to
// the completed sum.

Tensor conv2d_valid(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride = 1);

/// Elementwise tanh. f32 results are kept strictly inside (-1, 1); f64
/// tensors are mapped in full double precision.
Tensor tanh_map(const Tensor& t);

/// 2x2 mean pooling with stride 2 over a C x H x W tensor.
Tensor avgpool2(const Tensor& t);

/// out[o] = b[o] + sum_d W[o, d] * v[d]; `v` may have any shape with D elements.
Tensor linear(const Tensor& v, const Tensor& w, const Tensor& b);

inline constexpr double kDropoutRate = 0.2;

/// Inverted dropout with an explicit keep mask (one flag per channel when
/// `channelwise`, else per element). Survivors are scaled by 1/(1-p).
Tensor dropout_apply_mask(const Tensor& t, double p, std::span<const bool> keep, bool channelwise);

/// Inverted dropout with a mask drawn from `rng`: a unit is dropped when
/// (rng() >> 11) * 2^-53 < p.
Tensor dropout_apply(const Tensor& t, double p, std::mt19937_64& rng, bool channelwise);

/// Generator for one dropout layer of one sample, derived from
/// (seed, sample index, dropout layer ordinal) through std::seed_seq.
std::mt19937_64 dropout_stream(std::uint64_t seed, std::uint64_t sample_index, std::size_t ordinal);

// --- network ----------------------------------------------------------------

struct ActivationTrace {
    Variant variant = Variant::Basic;
    CaptureMode mode = CaptureMode::Eval;
    std::optional<std::uint64_t> dropout_seed;
    std::vector<Tensor> boundaries;  // one per BoundaryId, stored once
};

struct ForwardResult {
    ActivationTrace trace;
    std::vector<float> logits;
};

/// Applies layer `layer` of the weights' variant to one sample.
/// `sample_index` selects the dropout stream in train-dropout mode.
Tensor apply_layer(const LeNetWeights& w, std::size_t layer, const Tensor& input, CaptureMode mode,
                   std::uint64_t dropout_seed = 0, std::uint64_t sample_index = 0);

/// Full forward pass of one 1x32x32 image, recording every boundary.
ForwardResult forward(const LeNetWeights& w, const Tensor& image, CaptureMode mode = CaptureMode::Eval,
                      std::optional<std::uint64_t> dropout_seed = std::nullopt, std::uint64_t sample_index = 0);

/// Applies one layer to a batch stored as [N, ...]. `sample_ids[n]` is the
/// dataset index of row n (dropout stream selection).
Tensor propagate(const LeNetWeights& w, std::size_t layer, const Tensor& batch, CaptureMode mode,
                 std::uint64_t dropout_seed, std::span<const std::uint64_t> sample_ids, std::size_t threads = 0);

/// Argmax of the logits; ties resolve to the lowest class id.
std::size_t classify(std::span<const float> logits);

/// Fraction of images whose eval-mode prediction differs from the label.
double end_to_end_error(const LeNetWeights& w, const LabeledPointSet& images, std::size_t threads = 0);

/// Eval-mode predictions for every image (rows of 1024 values).
std::vector<Label> predict_all(const LeNetWeights& w, const LabeledPointSet& images, std::size_t threads = 0);

}  // namespace repcx
