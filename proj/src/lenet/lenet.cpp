#include "repcx/lenet.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include "repcx/error.hpp"
#include "repcx/parallel.hpp"

namespace repcx {
namespace {

constexpr std::array<Layer, 11> kBasic{{
    {"conv1", LayerKind::Conv, Param::Conv1W, Param::Conv1B},
    {"tanh1", LayerKind::Tanh},
    {"pool1", LayerKind::Pool},
    {"conv2", LayerKind::Conv, Param::Conv2W, Param::Conv2B},
    {"tanh2", LayerKind::Tanh},
    {"pool2", LayerKind::Pool},
    {"conv3", LayerKind::Conv, Param::Conv3W, Param::Conv3B},
    {"tanh3", LayerKind::Tanh},
    {"linr1", LayerKind::Linear, Param::Linr1W, Param::Linr1B},
    {"tanh4", LayerKind::Tanh},
    {"linr2", LayerKind::Linear, Param::Linr2W, Param::Linr2B},
}};

constexpr std::array<Layer, 15> kDropout{{
    {"conv1", LayerKind::Conv, Param::Conv1W, Param::Conv1B},
    {.name = "drop1", .kind = LayerKind::Dropout, .channelwise = true},
    {"tanh1", LayerKind::Tanh},
    {"pool1", LayerKind::Pool},
    {"conv2", LayerKind::Conv, Param::Conv2W, Param::Conv2B},
    {.name = "drop2", .kind = LayerKind::Dropout, .channelwise = true},
    {"tanh2", LayerKind::Tanh},
    {"pool2", LayerKind::Pool},
    {"conv3", LayerKind::Conv, Param::Conv3W, Param::Conv3B},
    {.name = "drop3", .kind = LayerKind::Dropout, .channelwise = true},
    {"tanh3", LayerKind::Tanh},
    {"linr1", LayerKind::Linear, Param::Linr1W, Param::Linr1B},
    {.name = "drop4", .kind = LayerKind::Dropout},
    {"tanh4", LayerKind::Tanh},
    {"linr2", LayerKind::Linear, Param::Linr2W, Param::Linr2B},
}};

// Largest float below 1; f32 tanh saturates to exactly 1 without the clamp.
constexpr float kTanhBound = 0x1.fffffep-1f;

std::string dims_str(const Dims& d) {
    std::string s = "[";
    for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
    return s + "]";
}

void require_f32(const Tensor& t, std::string_view what) {
    if (t.dtype() != DType::F32)
        fail(ErrorCode::UnsupportedDtype, std::string(what) + " must be f32, got " + std::string(dtype_name(t.dtype())));
}

std::size_t dropout_ordinal(std::span<const Layer> layers, std::size_t layer) {
    std::size_t ordinal = 0;
    for (std::size_t i = 0; i < layer; ++i) ordinal += layers[i].kind == LayerKind::Dropout ? 1 : 0;
    return ordinal;
}

}  // namespace

std::string_view capture_mode_name(CaptureMode m) noexcept {
    return m == CaptureMode::Eval ? "eval" : "train-dropout";
}

CaptureMode parse_capture_mode(std::string_view name) {
    if (name == "eval") return CaptureMode::Eval;
    if (name == "train-dropout") return CaptureMode::TrainDropout;
    fail(ErrorCode::Validation, "unknown capture mode '" + std::string(name) + "'");
}

std::span<const Layer> network_layers(Variant variant) {
    if (variant == Variant::Basic) return kBasic;
    return kDropout;
}

std::string_view side_name(Side s) noexcept { return s == Side::Entry ? "entry" : "exit"; }

std::vector<BoundaryId> network_boundaries(Variant variant) {
    const auto layers = network_layers(variant);
    std::vector<BoundaryId> out;
    out.push_back({0, std::string(layers.front().name), Side::Entry});
    for (std::size_t i = 0; i < layers.size(); ++i) out.push_back({i + 1, std::string(layers[i].name), Side::Exit});
    return out;
}

std::string boundary_file_name(const BoundaryId& b) {
    std::string idx = std::to_string(b.index);
    if (idx.size() < 2) idx.insert(0, 2 - idx.size(), '0');
    return idx + "_" + b.layer_name + "_" + std::string(side_name(b.side)) + ".rtd";
}

std::vector<Dims> boundary_dims(Variant variant) {
    std::vector<Dims> out{{1, 32, 32}};
    Dims cur = out.front();
    for (const auto& layer : network_layers(variant)) {
        switch (layer.kind) {
            case LayerKind::Conv: {
                const auto& spec = lenet_param_specs()[static_cast<std::size_t>(layer.weight)];
                cur = {spec.shape[0], cur[1] - spec.shape[2] + 1, cur[2] - spec.shape[3] + 1};
                break;
            }
            case LayerKind::Pool: cur = {cur[0], cur[1] / 2, cur[2] / 2}; break;
            case LayerKind::Linear:
                cur = {lenet_param_specs()[static_cast<std::size_t>(layer.weight)].shape[0]};
                break;
            case LayerKind::Tanh:
                // The classifier head consumes the flattened feature vector.
                if (layer.name == "tanh3") cur = {element_count(cur)};
                break;
            case LayerKind::Dropout: break;
        }
        out.push_back(cur);
    }
    return out;
}

Tensor conv2d_valid(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride) {
    require_f32(input, "conv input");
    require_f32(kernel, "conv kernel");
    require_f32(bias, "conv bias");
    const auto& id = input.dims();
    const auto& kd = kernel.dims();
    if (id.size() != 3 || kd.size() != 4 || bias.rank() != 1 || kd[1] != id[0] || kd[2] != kd[3] ||
        bias.dims()[0] != kd[0] || stride == 0)
        fail(ErrorCode::Dimension, "conv2d: input " + dims_str(id) + ", kernel " + dims_str(kd) + ", bias " +
                                       dims_str(bias.dims()) + " are incompatible");
    const std::size_t channels = id[0], height = id[1], width = id[2];
    const std::size_t outs = kd[0], k = kd[2];
    if (height < k || width < k)
        fail(ErrorCode::Dimension, "conv2d: input " + dims_str(id) + " smaller than kernel " + std::to_string(k));
    const std::size_t oh = (height - k) / stride + 1, ow = (width - k) / stride + 1;

    const auto in = input.values<float>();
    const auto kw = kernel.values<float>();
    const auto b = bias.values<float>();
    std::vector<float> out(outs * oh * ow);
    std::vector<double> acc(oh * ow);
    for (std::size_t o = 0; o < outs; ++o) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double w = kw[((o * channels + c) * k + i) * k + j];
                    for (std::size_t y = 0; y < oh; ++y) {
                        const float* row = in.data() + (c * height + y * stride + i) * width + j;
                        double* a = acc.data() + y * ow;
                        for (std::size_t x = 0; x < ow; ++x) a[x] += static_cast<double>(row[x * stride]) * w;
                    }
                }
            }
        }
        for (std::size_t p = 0; p < oh * ow; ++p)
            out[o * oh * ow + p] = static_cast<float>(static_cast<double>(b[o]) + acc[p]);
    }
    return Tensor({outs, oh, ow}, std::move(out));
}

Tensor tanh_map(const Tensor& t) {
    if (t.dtype() == DType::F64) {
        const auto v = t.values<double>();
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
        return Tensor(t.dims(), std::move(out));
    }
    require_f32(t, "tanh input");
    const auto v = t.values<float>();
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = std::clamp(static_cast<float>(std::tanh(static_cast<double>(v[i]))), -kTanhBound, kTanhBound);
    return Tensor(t.dims(), std::move(out));
}

Tensor avgpool2(const Tensor& t) {
    require_f32(t, "pool input");
    const auto& d = t.dims();
    if (d.size() != 3 || d[1] % 2 != 0 || d[2] % 2 != 0)
        fail(ErrorCode::Dimension, "avgpool2 needs C x H x W with even H and W, got " + dims_str(d));
    const std::size_t channels = d[0], height = d[1], width = d[2];
    const std::size_t oh = height / 2, ow = width / 2;
    const auto in = t.values<float>();
    std::vector<float> out(channels * oh * ow);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                const float* top = in.data() + (c * height + 2 * y) * width + 2 * x;
                const float* bottom = top + width;
                const double sum = static_cast<double>(top[0]) + top[1] + bottom[0] + bottom[1];
                out[(c * oh + y) * ow + x] = static_cast<float>(sum * 0.25);
            }
    return Tensor({channels, oh, ow}, std::move(out));
}

Tensor linear(const Tensor& v, const Tensor& w, const Tensor& b) {
    require_f32(v, "linear input");
    require_f32(w, "linear weight");
    require_f32(b, "linear bias");
    if (w.rank() != 2 || b.rank() != 1 || b.dims()[0] != w.dims()[0] || v.size() != w.dims()[1])
        fail(ErrorCode::Dimension, "linear: input " + dims_str(v.dims()) + ", weight " + dims_str(w.dims()) +
                                       ", bias " + dims_str(b.dims()) + " are incompatible");
    const std::size_t outs = w.dims()[0], ins = w.dims()[1];
    const auto x = v.values<float>();
    const auto wv = w.values<float>();
    const auto bv = b.values<float>();
    std::vector<float> out(outs);
    for (std::size_t o = 0; o < outs; ++o) {
        double acc = 0.0;
        for (std::size_t d = 0; d < ins; ++d) acc += static_cast<double>(wv[o * ins + d]) * x[d];
        out[o] = static_cast<float>(static_cast<double>(bv[o]) + acc);
    }
    return Tensor({outs}, std::move(out));
}

Tensor dropout_apply_mask(const Tensor& t, double p, std::span<const bool> keep, bool channelwise) {
    require_f32(t, "dropout input");
    if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::Parameter, "dropout rate must lie in [0, 1), got " + std::to_string(p));
    if (channelwise && t.rank() < 1) fail(ErrorCode::Dimension, "channel dropout needs a channel axis");
    const std::size_t units = channelwise ? t.dims()[0] : t.size();
    if (keep.size() != units)
        fail(ErrorCode::Dimension, "dropout mask has " + std::to_string(keep.size()) + " entries, expected " +
                                       std::to_string(units));
    const std::size_t per_unit = units == 0 ? 0 : t.size() / units;
    const double scale = 1.0 / (1.0 - p);
    const auto in = t.values<float>();
    std::vector<float> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = keep[i / per_unit] ? static_cast<float>(static_cast<double>(in[i]) * scale) : 0.0f;
    return Tensor(t.dims(), std::move(out));
}

Tensor dropout_apply(const Tensor& t, double p, std::mt19937_64& rng, bool channelwise) {
    if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::Parameter, "dropout rate must lie in [0, 1), got " + std::to_string(p));
    const std::size_t units = channelwise ? (t.rank() > 0 ? t.dims()[0] : 0) : t.size();
    auto keep = std::make_unique<bool[]>(units);
    for (std::size_t i = 0; i < units; ++i) keep[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 >= p;
    return dropout_apply_mask(t, p, std::span<const bool>(keep.get(), units), channelwise);
}

std::mt19937_64 dropout_stream(std::uint64_t seed, std::uint64_t sample_index, std::size_t ordinal) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(sample_index), static_cast<std::uint32_t>(sample_index >> 32),
                      static_cast<std::uint32_t>(ordinal)};
    return std::mt19937_64(seq);
}

Tensor apply_layer(const LeNetWeights& w, std::size_t layer, const Tensor& input, CaptureMode mode,
                   std::uint64_t dropout_seed, std::uint64_t sample_index) {
    const auto layers = network_layers(w.variant());
    if (layer >= layers.size()) fail(ErrorCode::Parameter, "layer index " + std::to_string(layer) + " out of range");
    const auto expected = boundary_dims(w.variant())[layer];
    if (input.dims() != expected)
        fail(ErrorCode::Dimension, std::string(layers[layer].name) + " expects " + dims_str(expected) + ", got " +
                                       dims_str(input.dims()));
    const Layer& l = layers[layer];
    switch (l.kind) {
        case LayerKind::Conv: return conv2d_valid(input, w[l.weight], w[l.bias]);
        case LayerKind::Pool: return avgpool2(input);
        case LayerKind::Linear: return linear(input, w[l.weight], w[l.bias]);
        case LayerKind::Tanh: {
            Tensor out = tanh_map(input);
            return out.reshaped(boundary_dims(w.variant())[layer + 1]);
        }
        case LayerKind::Dropout: {
            if (mode == CaptureMode::Eval) return input;
            auto rng = dropout_stream(dropout_seed, sample_index, dropout_ordinal(layers, layer));
            return dropout_apply(input, kDropoutRate, rng, l.channelwise);
        }
    }
    fail(ErrorCode::Parameter, "unknown layer kind");
}

ForwardResult forward(const LeNetWeights& w, const Tensor& image, CaptureMode mode,
                      std::optional<std::uint64_t> dropout_seed, std::uint64_t sample_index) {
    if (mode == CaptureMode::TrainDropout) {
        if (w.variant() != Variant::Dropout)
            fail(ErrorCode::Validation, "train-dropout capture requires the dropout variant");
        if (!dropout_seed) fail(ErrorCode::Validation, "train-dropout capture requires a dropout seed");
    }
    ForwardResult result;
    result.trace.variant = w.variant();
    result.trace.mode = mode;
    result.trace.dropout_seed = dropout_seed;
    result.trace.boundaries.push_back(image);
    const auto layers = network_layers(w.variant());
    for (std::size_t i = 0; i < layers.size(); ++i)
        result.trace.boundaries.push_back(
            apply_layer(w, i, result.trace.boundaries.back(), mode, dropout_seed.value_or(0), sample_index));
    const auto logits = result.trace.boundaries.back().values<float>();
    result.logits.assign(logits.begin(), logits.end());
    return result;
}

Tensor propagate(const LeNetWeights& w, std::size_t layer, const Tensor& batch, CaptureMode mode,
                 std::uint64_t dropout_seed, std::span<const std::uint64_t> sample_ids, std::size_t threads) {
    require_f32(batch, "batch");
    const auto all_dims = boundary_dims(w.variant());
    if (layer >= all_dims.size() - 1) fail(ErrorCode::Parameter, "layer index out of range");
    const Dims& in_dims = all_dims[layer];
    const Dims& out_dims = all_dims[layer + 1];
    if (batch.rank() == 0) fail(ErrorCode::Dimension, "batch needs a leading sample axis");
    const std::size_t n = batch.dims()[0];
    if (sample_ids.size() != n) fail(ErrorCode::Dimension, "one sample id per batch row required");
    Dims expected{n};
    expected.insert(expected.end(), in_dims.begin(), in_dims.end());
    if (batch.dims() != expected)
        fail(ErrorCode::Dimension, "batch " + dims_str(batch.dims()) + " does not match " + dims_str(expected));

    const std::size_t in_size = element_count(in_dims), out_size = element_count(out_dims);
    const auto in = batch.values<float>();
    std::vector<float> out(n * out_size);
    parallel_for(n, threads, [&](std::size_t s) {
        Tensor sample(in_dims, std::vector<float>(in.begin() + static_cast<std::ptrdiff_t>(s * in_size),
                                                  in.begin() + static_cast<std::ptrdiff_t>((s + 1) * in_size)));
        const Tensor r = apply_layer(w, layer, sample, mode, dropout_seed, sample_ids[s]);
        const auto v = r.values<float>();
        std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(s * out_size));
    });
    Dims od{n};
    od.insert(od.end(), out_dims.begin(), out_dims.end());
    return Tensor(std::move(od), std::move(out));
}

std::size_t classify(std::span<const float> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

std::vector<Label> predict_all(const LeNetWeights& w, const LabeledPointSet& images, std::size_t threads) {
    if (images.dim() != 1024 && !images.empty())
        fail(ErrorCode::Dimension, "images must have 1024 values (1x32x32), got " + std::to_string(images.dim()));
    std::vector<Label> predicted(images.size());
    parallel_for(images.size(), threads, [&](std::size_t i) {
        const auto p = images.point(i);
        const Tensor image({1, 32, 32}, std::vector<float>(p.begin(), p.end()));
        predicted[i] = static_cast<Label>(classify(forward(w, image).logits));
    });
    return predicted;
}

double end_to_end_error(const LeNetWeights& w, const LabeledPointSet& images, std::size_t threads) {
    if (images.empty()) fail(ErrorCode::InsufficientData, "end-to-end error of an empty set");
    const auto predicted = predict_all(w, images, threads);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != images.label(i) ? 1 : 0;
    return static_cast<double>(wrong) / static_cast<double>(images.size());
}

}  // namespace repcx
