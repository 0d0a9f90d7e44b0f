#pragma once

#include <array>
#include <filesystem>
#include <string_view>

#include "repcx/tensor.hpp"

namespace repcx {

enum class Variant { Basic, Dropout };

std::string_view variant_name(Variant v) noexcept;
Variant parse_variant(std::string_view name);

/// Parameter slots in bundle order.
enum class Param : std::size_t {
    Conv1W, Conv1B, Conv2W, Conv2B, Conv3W, Conv3B, Linr1W, Linr1B, Linr2W, Linr2B,
};

inline constexpr std::size_t kParamCount = 10;

struct ParamSpec {
    std::string_view name;
    std::array<std::uint64_t, 4> shape;
    std::size_t rank;

    Dims dims() const { return Dims(shape.begin(), shape.begin() + static_cast<std::ptrdiff_t>(rank)); }
};

const std::array<ParamSpec, kParamCount>& lenet_param_specs() noexcept;

/// The ten f32 parameter tensors of LeNet-5 (optionally with dropout layers;
/// dropout has no parameters, so both variants share the same shapes).
class LeNetWeights {
public:
    /// Validates every shape and rejects non-finite values.
    LeNetWeights(std::array<Tensor, kParamCount> params, Variant variant);

    /// Zero weights of the right shapes.
    static LeNetWeights zeros(Variant variant);

    Variant variant() const noexcept { return variant_; }
    const Tensor& operator[](Param p) const noexcept { return params_[static_cast<std::size_t>(p)]; }
    std::span<const float> values(Param p) const { return (*this)[p].values<float>(); }
    const std::array<Tensor, kParamCount>& params() const noexcept { return params_; }

    friend bool operator==(const LeNetWeights&, const LeNetWeights&) = default;

private:
    std::array<Tensor, kParamCount> params_;
    Variant variant_;
};

/// Reads an LNW1 bundle directory (manifest.json + weights.bin).
LeNetWeights load_weights(const std::filesystem::path& dir);

/// Writes an LNW1 bundle, creating `dir` if needed.
void save_weights(const LeNetWeights& w, const std::filesystem::path& dir);

}  // namespace repcx
