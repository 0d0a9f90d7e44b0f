#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "repcx/error.hpp"

namespace repcx {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2, I64 = 3 };

std::string_view dtype_name(DType dtype) noexcept;
std::size_t dtype_size(DType dtype) noexcept;

using Dims = std::vector<std::uint64_t>;

std::uint64_t element_count(const Dims& dims) noexcept;

/// Dense row-major tensor. The element type is fixed at construction; the
/// payload always holds exactly element_count(dims) values.
class Tensor {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>,
                                 std::vector<std::uint8_t>, std::vector<std::int64_t>>;

    Tensor() : Tensor(Dims{0}, std::vector<float>{}) {}
    Tensor(Dims dims, std::vector<float> data);
    Tensor(Dims dims, std::vector<double> data);
    Tensor(Dims dims, std::vector<std::uint8_t> data);
    Tensor(Dims dims, std::vector<std::int64_t> data);

    /// Zero-filled tensor of the given type.
    static Tensor zeros(Dims dims, DType dtype);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept;
    DType dtype() const noexcept { return static_cast<DType>(storage_.index()); }

    template <typename T>
    std::span<const T> values() const {
        check_type<T>();
        return std::get<std::vector<T>>(storage_);
    }
    template <typename T>
    std::span<T> values() {
        check_type<T>();
        return std::get<std::vector<T>>(storage_);
    }

    const Storage& storage() const noexcept { return storage_; }

    /// Raw little-endian-on-host payload bytes.
    std::span<const std::byte> bytes() const noexcept;

    /// Same payload viewed under new dims; element counts must agree.
    Tensor reshaped(Dims dims) const;

    /// Value at flat offset `i`, widened to double.
    double at_flat(std::size_t i) const;

    /// Rejects NaN/Inf in floating payloads with a validation error.
    void require_finite(std::string_view what) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    template <typename T>
    void check_type() const {
        if (!std::holds_alternative<std::vector<T>>(storage_))
            fail(ErrorCode::UnsupportedDtype,
                 std::string("tensor holds ") + std::string(dtype_name(dtype())));
    }
    void validate() const;

    Dims dims_;
    Storage storage_;
};

/// Row-major linearization of a single sample's activation.
std::vector<float> flatten(const Tensor& t);

/// Rows of a [N, ...] tensor at `rows` (axis 0), in the given order.
Tensor take_rows(const Tensor& t, std::span<const std::size_t> rows);

/// Flat offset of `index` within `dims` under row-major order.
std::uint64_t flat_offset(const Dims& dims, std::span<const std::uint64_t> index);

}  // namespace repcx
