#include "repcx/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace repcx {

std::string_view error_tag(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Format: return "E_FORMAT";
        case ErrorCode::Validation: return "E_VALIDATION";
        case ErrorCode::UnsupportedDtype: return "E_DTYPE";
        case ErrorCode::Io: return "E_IO";
        case ErrorCode::Dimension: return "E_DIMENSION";
        case ErrorCode::InsufficientData: return "E_INSUFFICIENT_DATA";
        case ErrorCode::Parameter: return "E_PARAMETER";
    }
    return "E_UNKNOWN";
}

std::string_view dtype_name(DType dtype) noexcept {
    switch (dtype) {
        case DType::F32: return "f32";
        case DType::F64: return "f64";
        case DType::U8: return "u8";
        case DType::I64: return "i64";
    }
    return "?";
}

std::size_t dtype_size(DType dtype) noexcept {
    switch (dtype) {
        case DType::F32: return 4;
        case DType::F64: return 8;
        case DType::U8: return 1;
        case DType::I64: return 8;
    }
    return 0;
}

std::uint64_t element_count(const Dims& dims) noexcept {
    return std::accumulate(dims.begin(), dims.end(), std::uint64_t{1},
                           [](std::uint64_t a, std::uint64_t b) { return a * b; });
}

Tensor::Tensor(Dims dims, std::vector<float> data) : dims_(std::move(dims)), storage_(std::move(data)) { validate(); }
Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), storage_(std::move(data)) { validate(); }
Tensor::Tensor(Dims dims, std::vector<std::uint8_t> data) : dims_(std::move(dims)), storage_(std::move(data)) { validate(); }
Tensor::Tensor(Dims dims, std::vector<std::int64_t> data) : dims_(std::move(dims)), storage_(std::move(data)) { validate(); }

Tensor Tensor::zeros(Dims dims, DType dtype) {
    const auto n = static_cast<std::size_t>(element_count(dims));
    switch (dtype) {
        case DType::F32: return Tensor(std::move(dims), std::vector<float>(n));
        case DType::F64: return Tensor(std::move(dims), std::vector<double>(n));
        case DType::U8: return Tensor(std::move(dims), std::vector<std::uint8_t>(n));
        case DType::I64: return Tensor(std::move(dims), std::vector<std::int64_t>(n));
    }
    fail(ErrorCode::UnsupportedDtype, "unknown dtype");
}

void Tensor::validate() const {
    if (element_count(dims_) != size())
        fail(ErrorCode::Validation, "tensor dims hold " + std::to_string(element_count(dims_)) +
                                        " elements but payload has " + std::to_string(size()));
}

std::size_t Tensor::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, storage_);
}

std::span<const std::byte> Tensor::bytes() const noexcept {
    return std::visit([](const auto& v) { return std::as_bytes(std::span(v)); }, storage_);
}

Tensor Tensor::reshaped(Dims dims) const {
    if (element_count(dims) != size())
        fail(ErrorCode::Dimension, "cannot reshape " + std::to_string(size()) + " elements");
    Tensor out = *this;
    out.dims_ = std::move(dims);
    return out;
}

double Tensor::at_flat(std::size_t i) const {
    return std::visit([i](const auto& v) { return static_cast<double>(v.at(i)); }, storage_);
}

void Tensor::require_finite(std::string_view what) const {
    auto check = [&](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(static_cast<double>(v[i])))
                fail(ErrorCode::Validation, std::string(what) + ": non-finite value at offset " +
                                                std::to_string(i));
        }
    };
    if (auto* f = std::get_if<std::vector<float>>(&storage_)) check(*f);
    if (auto* d = std::get_if<std::vector<double>>(&storage_)) check(*d);
}

std::vector<float> flatten(const Tensor& t) {
    return std::visit(
        [](const auto& v) {
            std::vector<float> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
            return out;
        },
        t.storage());
}

Tensor take_rows(const Tensor& t, std::span<const std::size_t> rows) {
    if (t.rank() == 0) fail(ErrorCode::Dimension, "tensor needs a leading sample axis");
    const std::size_t n = t.dims()[0];
    const std::size_t row = n == 0 ? 0 : t.size() / n;
    Dims dims = t.dims();
    dims[0] = rows.size();
    return std::visit(
        [&](const auto& v) {
            using T = typename std::decay_t<decltype(v)>::value_type;
            std::vector<T> out;
            out.reserve(rows.size() * row);
            for (auto r : rows) {
                if (r >= n) fail(ErrorCode::Parameter, "row " + std::to_string(r) + " out of range");
                out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(r * row),
                           v.begin() + static_cast<std::ptrdiff_t>((r + 1) * row));
            }
            return Tensor(dims, std::move(out));
        },
        t.storage());
}

std::uint64_t flat_offset(const Dims& dims, std::span<const std::uint64_t> index) {
    if (index.size() != dims.size()) fail(ErrorCode::Dimension, "index rank mismatch");
    std::uint64_t offset = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        if (index[a] >= dims[a]) fail(ErrorCode::Dimension, "index out of range");
        offset = offset * dims[a] + index[a];
    }
    return offset;
}

}  // namespace repcx
