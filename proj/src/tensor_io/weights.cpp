#include "repcx/weights.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

namespace repcx {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kBundleFormat = "LNW1";

const std::array<ParamSpec, kParamCount> kSpecs{{
    {"conv1.w", {6, 1, 5, 5}, 4},
    {"conv1.b", {6}, 1},
    {"conv2.w", {16, 6, 5, 5}, 4},
    {"conv2.b", {16}, 1},
    {"conv3.w", {120, 16, 5, 5}, 4},
    {"conv3.b", {120}, 1},
    {"linr1.w", {84, 120}, 2},
    {"linr1.b", {84}, 1},
    {"linr2.w", {10, 84}, 2},
    {"linr2.b", {10}, 1},
}};

std::string dims_str(const Dims& d) {
    std::string s = "[";
    for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
    return s + "]";
}

}  // namespace

std::string_view variant_name(Variant v) noexcept { return v == Variant::Basic ? "basic" : "dropout"; }

Variant parse_variant(std::string_view name) {
    if (name == "basic") return Variant::Basic;
    if (name == "dropout") return Variant::Dropout;
    fail(ErrorCode::Validation, "unknown network variant '" + std::string(name) + "'");
}

const std::array<ParamSpec, kParamCount>& lenet_param_specs() noexcept { return kSpecs; }

LeNetWeights::LeNetWeights(std::array<Tensor, kParamCount> params, Variant variant)
    : params_(std::move(params)), variant_(variant) {
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto& spec = kSpecs[i];
        if (params_[i].dtype() != DType::F32)
            fail(ErrorCode::Validation, std::string(spec.name) + ": expected f32 parameters");
        if (params_[i].dims() != spec.dims())
            fail(ErrorCode::Validation, std::string(spec.name) + ": shape " + dims_str(params_[i].dims()) +
                                            " does not match " + dims_str(spec.dims()));
        params_[i].require_finite(spec.name);
    }
}

LeNetWeights LeNetWeights::zeros(Variant variant) {
    std::array<Tensor, kParamCount> params;
    for (std::size_t i = 0; i < kParamCount; ++i) params[i] = Tensor::zeros(kSpecs[i].dims(), DType::F32);
    return LeNetWeights(std::move(params), variant);
}

LeNetWeights load_weights(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) fail(ErrorCode::Io, "cannot open " + manifest_path.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, manifest_path.string() + ": " + e.what());
    }
    if (!manifest.is_object() || manifest.value("format", std::string{}) != kBundleFormat)
        fail(ErrorCode::Format, manifest_path.string() + ": format must be \"LNW1\"");
    if (!manifest.contains("variant") || !manifest["variant"].is_string())
        fail(ErrorCode::Validation, manifest_path.string() + ": missing variant");
    const Variant variant = parse_variant(manifest["variant"].get<std::string>());
    if (!manifest.contains("params") || !manifest["params"].is_array())
        fail(ErrorCode::Validation, manifest_path.string() + ": missing params list");

    const auto bin_path = dir / "weights.bin";
    std::ifstream bf(bin_path, std::ios::binary);
    if (!bf) fail(ErrorCode::Io, "cannot open " + bin_path.string());
    const std::vector<char> blob((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

    std::array<Tensor, kParamCount> params;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto& spec = kSpecs[i];
        const json* entry = nullptr;
        for (const auto& p : manifest["params"])
            if (p.is_object() && p.value("name", std::string{}) == spec.name) entry = &p;
        if (entry == nullptr) fail(ErrorCode::Validation, "bundle is missing parameter " + std::string(spec.name));

        Dims shape;
        std::uint64_t offset = 0;
        try {
            shape = (*entry).at("shape").get<Dims>();
            offset = (*entry).at("offset_bytes").get<std::uint64_t>();
        } catch (const json::exception&) {
            fail(ErrorCode::Validation, std::string(spec.name) + ": malformed shape/offset_bytes");
        }
        if (shape != spec.dims())
            fail(ErrorCode::Validation, std::string(spec.name) + ": shape " + dims_str(shape) +
                                            " does not match " + dims_str(spec.dims()));
        const std::size_t count = element_count(shape);
        if (offset > blob.size() || blob.size() - offset < count * 4)
            fail(ErrorCode::Format, std::string(spec.name) + ": payload extends past end of weights.bin");
        std::vector<float> values(count);
        const auto* src = reinterpret_cast<const unsigned char*>(blob.data() + offset);
        for (std::size_t k = 0; k < count; ++k) {
            const auto* b = src + 4 * k;
            const std::uint32_t bits = std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                                       std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
            values[k] = std::bit_cast<float>(bits);
        }
        params[i] = Tensor(std::move(shape), std::move(values));
    }
    return LeNetWeights(std::move(params), variant);
}

void save_weights(const LeNetWeights& w, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

    json params = json::array();
    std::string blob;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto& t = w.params()[i];
        params.push_back({{"name", kSpecs[i].name}, {"shape", t.dims()}, {"offset_bytes", blob.size()}});
        for (float v : t.values<float>()) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
        }
    }
    const json manifest = {{"format", kBundleFormat}, {"variant", variant_name(w.variant())}, {"params", params}};

    std::ofstream mf(dir / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    std::ofstream bf(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!mf || !bf) fail(ErrorCode::Io, "failed writing bundle " + dir.string());
}

}  // namespace repcx
