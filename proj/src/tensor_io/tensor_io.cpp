#include "repcx/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace repcx {
namespace {

namespace fs = std::filesystem;

constexpr std::array<char, 4> kRtdMagic{'R', 'T', 'D', '1'};
constexpr std::array<unsigned char, 6> kNpyMagic{0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::Io, "read failed: " + path.string());
    return bytes;
}

void write_file(const fs::path& path, const std::string& header, std::span<const std::byte> payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

template <typename T>
T byteswap_value(T v) {
    auto raw = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
}

template <typename T>
T read_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
    return v;
}

template <typename T>
T read_be(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::little) v = byteswap_value(v);
    return v;
}

template <typename T>
void append_le(std::string& out, T v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
void append_be(std::string& out, T v) {
    if constexpr (std::endian::native == std::endian::little) v = byteswap_value(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
std::vector<T> decode_le(const char* p, std::size_t count) {
    std::vector<T> out(count);
    if (count > 0) std::memcpy(out.data(), p, count * sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (auto& v : out) v = byteswap_value(v);
    return out;
}

Tensor decode_payload(DType dtype, Dims dims, const char* p, std::size_t count) {
    switch (dtype) {
        case DType::F32: return Tensor(std::move(dims), decode_le<float>(p, count));
        case DType::F64: return Tensor(std::move(dims), decode_le<double>(p, count));
        case DType::U8: return Tensor(std::move(dims), decode_le<std::uint8_t>(p, count));
        case DType::I64: return Tensor(std::move(dims), decode_le<std::int64_t>(p, count));
    }
    fail(ErrorCode::UnsupportedDtype, "unknown dtype");
}

// Payload bytes in little-endian order, regardless of host.
std::vector<std::byte> payload_le(const Tensor& t) {
    auto raw = t.bytes();
    std::vector<std::byte> out(raw.begin(), raw.end());
    if constexpr (std::endian::native == std::endian::big) {
        const std::size_t w = dtype_size(t.dtype());
        for (std::size_t i = 0; i + w <= out.size(); i += w) std::reverse(out.begin() + i, out.begin() + i + w);
    }
    return out;
}

std::uint64_t checked_payload_size(const Dims& dims, DType dtype, std::size_t available, const fs::path& path) {
    // Guard against overflow from hostile headers before multiplying out.
    std::uint64_t count = 1;
    for (auto d : dims) {
        if (d != 0 && count > available / d) {
            count = available + 1;
            break;
        }
        count *= d;
    }
    if (count * dtype_size(dtype) != available)
        fail(ErrorCode::Format, path.string() + ": payload holds " + std::to_string(available) +
                                    " bytes, header implies " + std::to_string(count) + " elements of " +
                                    std::string(dtype_name(dtype)));
    return count;
}

Tensor finish(Tensor t, const fs::path& path) {
    t.require_finite(path.string());
    return t;
}

// --- NPY header -------------------------------------------------------------

std::string npy_descr(DType dtype) {
    switch (dtype) {
        case DType::F32: return "<f4";
        case DType::F64: return "<f8";
        case DType::U8: return "|u1";
        case DType::I64: return "<i8";
    }
    return "";
}

std::string npy_shape_repr(const Dims& dims) {
    if (dims.empty()) return "()";
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) s += ", ";
        s += std::to_string(dims[i]);
    }
    if (dims.size() == 1) s += ",";
    return s + ")";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n')) s.remove_suffix(1);
    return s;
}

// Extracts the raw value text following 'key': in a numpy header dict.
std::string_view npy_field(std::string_view header, std::string_view key, const fs::path& path) {
    const std::string quoted = "'" + std::string(key) + "'";
    auto pos = header.find(quoted);
    if (pos == std::string_view::npos) fail(ErrorCode::Format, path.string() + ": npy header lacks " + quoted);
    pos = header.find(':', pos + quoted.size());
    if (pos == std::string_view::npos) fail(ErrorCode::Format, path.string() + ": malformed npy header");
    std::string_view rest = header.substr(pos + 1);
    rest = trim(rest);
    std::size_t end = 0;
    if (!rest.empty() && rest.front() == '(') {
        end = rest.find(')');
        if (end == std::string_view::npos) fail(ErrorCode::Format, path.string() + ": malformed npy shape");
        ++end;
    } else if (!rest.empty() && rest.front() == '\'') {
        end = rest.find('\'', 1);
        if (end == std::string_view::npos) fail(ErrorCode::Format, path.string() + ": malformed npy descr");
        ++end;
    } else {
        end = rest.find_first_of(",}");
        if (end == std::string_view::npos) fail(ErrorCode::Format, path.string() + ": malformed npy header");
    }
    return trim(rest.substr(0, end));
}

Dims parse_npy_shape(std::string_view text, const fs::path& path) {
    Dims dims;
    text.remove_prefix(1);
    text.remove_suffix(1);
    while (!text.empty()) {
        auto comma = text.find(',');
        auto item = trim(text.substr(0, comma));
        if (!item.empty()) {
            std::uint64_t v = 0;
            for (char c : item) {
                if (c < '0' || c > '9') fail(ErrorCode::Format, path.string() + ": bad npy shape entry");
                v = v * 10 + static_cast<std::uint64_t>(c - '0');
            }
            dims.push_back(v);
        }
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return dims;
}

}  // namespace

TensorFormat detect_format(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::array<char, 6> head{};
    in.read(head.data(), head.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got >= 4 && std::equal(kRtdMagic.begin(), kRtdMagic.end(), head.begin())) return TensorFormat::Rtd;
    if (got >= 6 && std::memcmp(head.data(), kNpyMagic.data(), 6) == 0) return TensorFormat::Npy;
    if (got >= 4 && head[0] == 0 && head[1] == 0 && head[3] >= 1) return TensorFormat::Idx;
    fail(ErrorCode::Format, path.string() + ": unrecognized tensor file (no RTD/NPY/IDX magic)");
}

Tensor load_tensor(const fs::path& path) {
    switch (detect_format(path)) {
        case TensorFormat::Rtd: return load_rtd(path);
        case TensorFormat::Npy: return load_npy(path);
        case TensorFormat::Idx: return load_idx(path);
    }
    fail(ErrorCode::Format, path.string());
}

void save_tensor(const Tensor& t, const fs::path& path) { save_rtd(t, path); }

void save_tensor_as(const Tensor& t, const fs::path& path, TensorFormat format) {
    switch (format) {
        case TensorFormat::Rtd: save_rtd(t, path); return;
        case TensorFormat::Npy: save_npy(t, path); return;
        case TensorFormat::Idx: save_idx(t, path); return;
    }
}

// RTD: "RTD1" | u32 ndim | ndim x u64 dims | u8 dtype | payload, all LE.
Tensor load_rtd(const fs::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 9 || !std::equal(kRtdMagic.begin(), kRtdMagic.end(), bytes.begin()))
        fail(ErrorCode::Format, path.string() + ": missing RTD1 magic");
    const auto ndim = read_le<std::uint32_t>(bytes.data() + 4);
    const std::size_t header = 8 + std::size_t{ndim} * 8 + 1;
    if (ndim > 32 || bytes.size() < header) fail(ErrorCode::Format, path.string() + ": truncated RTD header");
    Dims dims(ndim);
    for (std::uint32_t a = 0; a < ndim; ++a) dims[a] = read_le<std::uint64_t>(bytes.data() + 8 + 8 * a);
    const auto code = static_cast<std::uint8_t>(bytes[header - 1]);
    if (code > 3) fail(ErrorCode::UnsupportedDtype, path.string() + ": RTD dtype code " + std::to_string(code));
    const auto dtype = static_cast<DType>(code);
    const auto count = checked_payload_size(dims, dtype, bytes.size() - header, path);
    return finish(decode_payload(dtype, std::move(dims), bytes.data() + header, count), path);
}

void save_rtd(const Tensor& t, const fs::path& path) {
    std::string header(kRtdMagic.begin(), kRtdMagic.end());
    append_le<std::uint32_t>(header, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.dims()) append_le<std::uint64_t>(header, d);
    header.push_back(static_cast<char>(t.dtype()));
    write_file(path, header, payload_le(t));
}

Tensor load_npy(const fs::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kNpyMagic.data(), 6) != 0)
        fail(ErrorCode::Format, path.string() + ": missing NPY magic");
    if (bytes[6] != 1 || bytes[7] != 0)
        fail(ErrorCode::Format, path.string() + ": only NPY version 1.0 is supported");
    const std::size_t hlen = read_le<std::uint16_t>(bytes.data() + 8);
    if (bytes.size() < 10 + hlen) fail(ErrorCode::Format, path.string() + ": truncated NPY header");
    const std::string_view header(bytes.data() + 10, hlen);

    const auto descr = npy_field(header, "descr", path);
    DType dtype;
    if (descr == "'<f4'") dtype = DType::F32;
    else if (descr == "'<f8'") dtype = DType::F64;
    else if (descr == "'<i8'") dtype = DType::I64;
    else if (descr == "'|u1'") dtype = DType::U8;
    else fail(ErrorCode::UnsupportedDtype, path.string() + ": unsupported npy dtype " + std::string(descr));

    const auto order = npy_field(header, "fortran_order", path);
    if (order == "True") fail(ErrorCode::Format, path.string() + ": Fortran-order arrays are not supported");
    if (order != "False") fail(ErrorCode::Format, path.string() + ": malformed fortran_order");

    const auto shape_text = npy_field(header, "shape", path);
    if (shape_text.empty() || shape_text.front() != '(')
        fail(ErrorCode::Format, path.string() + ": malformed npy shape");
    Dims dims = parse_npy_shape(shape_text, path);

    const std::size_t offset = 10 + hlen;
    const auto count = checked_payload_size(dims, dtype, bytes.size() - offset, path);
    return finish(decode_payload(dtype, std::move(dims), bytes.data() + offset, count), path);
}

void save_npy(const Tensor& t, const fs::path& path) {
    // Mirrors numpy.lib.format: sorted dict keys, growth padding on axis 0,
    // then space padding so the payload starts on a 64-byte boundary.
    constexpr std::size_t kAlign = 64;
    constexpr std::size_t kGrowthDigits = 21;
    std::string dict = "{'descr': '" + npy_descr(t.dtype()) + "', 'fortran_order': False, 'shape': " +
                       npy_shape_repr(t.dims()) + ", }";
    if (!t.dims().empty()) dict.append(kGrowthDigits - std::to_string(t.dims().front()).size(), ' ');
    const std::size_t pad = kAlign - ((6 + 2 + 2 + dict.size() + 1) % kAlign);
    dict.append(pad, ' ');
    dict.push_back('\n');

    std::string header(kNpyMagic.begin(), kNpyMagic.end());
    header.push_back(1);
    header.push_back(0);
    append_le<std::uint16_t>(header, static_cast<std::uint16_t>(dict.size()));
    header += dict;
    write_file(path, header, payload_le(t));
}

Tensor load_idx(const fs::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 4 || bytes[0] != 0 || bytes[1] != 0)
        fail(ErrorCode::Format, path.string() + ": missing IDX magic");
    if (static_cast<std::uint8_t>(bytes[2]) != 0x08)
        fail(ErrorCode::UnsupportedDtype, path.string() + ": only unsigned-byte IDX payloads are supported");
    const std::size_t ndim = static_cast<std::uint8_t>(bytes[3]);
    const std::size_t header = 4 + 4 * ndim;
    if (ndim == 0 || bytes.size() < header) fail(ErrorCode::Format, path.string() + ": truncated IDX header");
    Dims dims(ndim);
    for (std::size_t a = 0; a < ndim; ++a) dims[a] = read_be<std::uint32_t>(bytes.data() + 4 + 4 * a);
    const auto count = checked_payload_size(dims, DType::U8, bytes.size() - header, path);
    return decode_payload(DType::U8, std::move(dims), bytes.data() + header, count);
}

void save_idx(const Tensor& t, const fs::path& path) {
    if (t.dtype() != DType::U8) fail(ErrorCode::UnsupportedDtype, "IDX output requires u8 tensors");
    if (t.rank() == 0 || t.rank() > 255) fail(ErrorCode::Dimension, "IDX output requires rank 1..255");
    std::string header{0, 0, 0x08, static_cast<char>(t.rank())};
    for (auto d : t.dims()) append_be<std::uint32_t>(header, static_cast<std::uint32_t>(d));
    write_file(path, header, t.bytes());
}

std::vector<Label> labels_from_tensor(const Tensor& t) {
    std::vector<Label> out(t.size());
    if (t.dtype() == DType::I64) {
        auto v = t.values<std::int64_t>();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < 0 || v[i] > std::numeric_limits<Label>::max())
                fail(ErrorCode::Validation, "label " + std::to_string(v[i]) + " at " + std::to_string(i) +
                                                " outside the supported range");
            out[i] = static_cast<Label>(v[i]);
        }
    } else if (t.dtype() == DType::U8) {
        auto v = t.values<std::uint8_t>();
        std::copy(v.begin(), v.end(), out.begin());
    } else {
        fail(ErrorCode::UnsupportedDtype, "labels must be i64 or u8, got " + std::string(dtype_name(t.dtype())));
    }
    return out;
}

Tensor labels_to_tensor(std::span<const Label> labels) {
    return Tensor(Dims{labels.size()}, std::vector<std::int64_t>(labels.begin(), labels.end()));
}

std::vector<float> pad_and_scale_mnist(const Tensor& images) {
    const auto& d = images.dims();
    if (images.dtype() != DType::U8 || d.size() != 3 || d[1] != 28 || d[2] != 28)
        fail(ErrorCode::Validation, "expected u8 images shaped [N, 28, 28]");
    const std::size_t n = d[0];
    auto src = images.values<std::uint8_t>();
    std::vector<float> out(n * 32 * 32, 0.0f);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c)
                out[s * 1024 + (r + 2) * 32 + (c + 2)] = static_cast<float>(src[s * 784 + r * 28 + c]) / 255.0f;
    return out;
}

LabeledPointSet load_mnist_idx(const fs::path& images, const fs::path& labels) {
    const auto image_bytes = read_file(images);
    if (image_bytes.size() < 4 || read_be<std::uint32_t>(image_bytes.data()) != kIdxImages)
        fail(ErrorCode::Format, images.string() + ": IDX image magic 0x00000803 expected");
    const auto label_bytes = read_file(labels);
    if (label_bytes.size() < 4 || read_be<std::uint32_t>(label_bytes.data()) != kIdxLabels)
        fail(ErrorCode::Format, labels.string() + ": IDX label magic 0x00000801 expected");

    const Tensor img = load_idx(images);
    const Tensor lab = load_idx(labels);
    if (img.dims().front() != lab.dims().front())
        fail(ErrorCode::Validation, "image count " + std::to_string(img.dims().front()) +
                                        " does not match label count " + std::to_string(lab.dims().front()));
    return LabeledPointSet(pad_and_scale_mnist(img), 1024, labels_from_tensor(lab), 10);
}

LabeledPointSet point_set_from_tensors(const Tensor& samples, const Tensor& labels, std::size_t num_classes) {
    if (samples.rank() == 0) fail(ErrorCode::Dimension, "sample tensor needs a leading sample axis");
    const std::size_t n = samples.dims().front();
    auto label_values = labels_from_tensor(labels);
    if (label_values.size() != n)
        fail(ErrorCode::Validation, "sample count " + std::to_string(n) + " does not match label count " +
                                        std::to_string(label_values.size()));
    const std::size_t dim = n == 0 ? static_cast<std::size_t>(element_count(
                                         Dims(samples.dims().begin() + 1, samples.dims().end())))
                                   : samples.size() / n;
    return LabeledPointSet(flatten(samples), dim, std::move(label_values), num_classes);
}

LabeledPointSet load_image_set(const fs::path& images, const fs::path& labels) {
    if (detect_format(images) == TensorFormat::Idx) return load_mnist_idx(images, labels);
    const Tensor img = load_tensor(images);
    const auto& d = img.dims();
    const bool ok = (d.size() == 4 && d[1] == 1 && d[2] == 32 && d[3] == 32) ||
                    (d.size() == 3 && d[1] == 32 && d[2] == 32) || (d.size() == 2 && d[1] == 1024);
    if (!ok) fail(ErrorCode::Dimension, images.string() + ": images must be [N,1,32,32], [N,32,32] or [N,1024]");
    return point_set_from_tensors(img, load_tensor(labels), 10);
}

}  // namespace repcx
