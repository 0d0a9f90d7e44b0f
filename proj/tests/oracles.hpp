// Naive reference implementations used only by tests. They deliberately share
// no code with the library: plain loops, no blocking, no expansion tricks.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

namespace oracle {

using HighPrecision = boost::multiprecision::cpp_dec_float_50;

struct Points {
    std::vector<float> values;  // n x dim
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<std::int32_t> labels;

    const float* row(std::size_t i) const { return values.data() + i * dim; }
};

inline double sqdist(const float* a, const float* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
        s += d * d;
    }
    return s;
}

inline HighPrecision sqdist_exact(const float* a, const float* b, std::size_t dim) {
    HighPrecision s = 0;
    for (std::size_t k = 0; k < dim; ++k) {
        HighPrecision d = HighPrecision(a[k]) - HighPrecision(b[k]);
        s += d * d;
    }
    return s;
}

/// O(N^2 D) nearest other point, lowest index on ties.
inline std::vector<std::size_t> neighbors(const Points& p) {
    std::vector<std::size_t> out(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < p.n; ++j) {
            if (j == i) continue;
            const double d = sqdist(p.row(i), p.row(j), p.dim);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        out[i] = best_j;
    }
    return out;
}

inline double loo_error(const Points& p) {
    const auto nn = neighbors(p);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < p.n; ++i) wrong += p.labels[nn[i]] != p.labels[i];
    return static_cast<double>(wrong) / static_cast<double>(p.n);
}

inline Points slice(const Points& p, std::size_t begin, std::size_t count) {
    Points s;
    s.n = count;
    s.dim = p.dim;
    s.values.assign(p.values.begin() + static_cast<std::ptrdiff_t>(begin * p.dim),
                    p.values.begin() + static_cast<std::ptrdiff_t>((begin + count) * p.dim));
    s.labels.assign(p.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    p.labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return s;
}

/// Mean of per-subset LOO errors over floor(n/m) contiguous subsets.
inline double subset_mean(const Points& p, std::size_t m) {
    if (p.n <= m) return loo_error(p);
    double sum = 0.0;
    const std::size_t count = p.n / m;
    for (std::size_t s = 0; s < count; ++s) sum += loo_error(slice(p, s * m, m));
    return sum / static_cast<double>(count);
}

enum class Shape { Uniform, Clustered, IntegerGrid, Duplicates, FarOffset };

/// Random labelled points of several geometries, including ones full of
/// exact distance ties and ones far from the origin.
inline Points random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, int classes, Shape shape) {
    Points p;
    p.n = n;
    p.dim = dim;
    p.values.resize(n * dim);
    p.labels.resize(n);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::uniform_int_distribution<int> small(0, 3);
    std::vector<float> centers(static_cast<std::size_t>(classes) * dim);
    for (auto& c : centers) c = unit(rng) * 4.0f;
    for (std::size_t i = 0; i < n; ++i) {
        p.labels[i] = label(rng);
        for (std::size_t k = 0; k < dim; ++k) {
            float v = 0.0f;
            switch (shape) {
                case Shape::Uniform: v = unit(rng); break;
                case Shape::Clustered: v = centers[static_cast<std::size_t>(p.labels[i]) * dim + k] + unit(rng); break;
                case Shape::IntegerGrid: v = static_cast<float>(small(rng)); break;
                case Shape::Duplicates: v = unit(rng); break;
                case Shape::FarOffset: v = 1000.0f + unit(rng) * 0.01f; break;
            }
            p.values[i * dim + k] = v;
        }
    }
    if (shape == Shape::Duplicates && n > 2) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t r = 0; r < n / 3; ++r) {
            const std::size_t src = pick(rng), dst = pick(rng);
            std::copy_n(p.values.begin() + static_cast<std::ptrdiff_t>(src * dim), dim,
                        p.values.begin() + static_cast<std::ptrdiff_t>(dst * dim));
        }
    }
    return p;
}

// --- network kernels ---------------------------------------------------------

/// out[o][y][x] = bias[o] + sum over (c, i, j) in that order.
inline std::vector<float> conv2d(const std::vector<float>& in, std::size_t c_in, std::size_t h, std::size_t w,
                                 const std::vector<float>& kernel, std::size_t c_out, std::size_t k,
                                 const std::vector<float>& bias, std::size_t stride) {
    const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
    std::vector<float> out(c_out * oh * ow);
    for (std::size_t o = 0; o < c_out; ++o)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (std::size_t c = 0; c < c_in; ++c)
                    for (std::size_t i = 0; i < k; ++i)
                        for (std::size_t j = 0; j < k; ++j)
                            acc += static_cast<double>(in[(c * h + y * stride + i) * w + x * stride + j]) *
                                   static_cast<double>(kernel[((o * c_in + c) * k + i) * k + j]);
                out[(o * oh + y) * ow + x] = static_cast<float>(static_cast<double>(bias[o]) + acc);
            }
    return out;
}

inline std::vector<float> avgpool2(const std::vector<float>& in, std::size_t c, std::size_t h, std::size_t w) {
    std::vector<float> out(c * (h / 2) * (w / 2));
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h / 2; ++y)
            for (std::size_t x = 0; x < w / 2; ++x) {
                auto at = [&](std::size_t yy, std::size_t xx) {
                    return static_cast<double>(in[(ch * h + yy) * w + xx]);
                };
                const double s = at(2 * y, 2 * x) + at(2 * y, 2 * x + 1) + at(2 * y + 1, 2 * x) + at(2 * y + 1, 2 * x + 1);
                out[(ch * (h / 2) + y) * (w / 2) + x] = static_cast<float>(s / 4.0);
            }
    return out;
}

inline std::vector<float> linear(const std::vector<float>& v, const std::vector<float>& w, std::size_t outs,
                                 const std::vector<float>& b) {
    const std::size_t ins = v.size();
    std::vector<float> out(outs);
    for (std::size_t o = 0; o < outs; ++o) {
        double acc = 0.0;
        for (std::size_t d = 0; d < ins; ++d) acc += static_cast<double>(w[o * ins + d]) * static_cast<double>(v[d]);
        out[o] = static_cast<float>(static_cast<double>(b[o]) + acc);
    }
    return out;
}

inline double tanh_exact(double x) {
    return static_cast<double>(boost::multiprecision::tanh(HighPrecision(x)));
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::FILE* f = std::fopen(p.string().c_str(), "rb");
    std::vector<std::uint8_t> out;
    if (!f) return out;
    int c;
    while ((c = std::fgetc(f)) != EOF) out.push_back(static_cast<std::uint8_t>(c));
    std::fclose(f);
    return out;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("repcx_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
