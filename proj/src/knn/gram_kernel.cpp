#include "gram_kernel.hpp"

#include <algorithm>
#include <cstring>

namespace repcx::detail {
namespace {

using Vec = double __attribute__((vector_size(kLanes * sizeof(double))));

inline Vec load(const double* p) {
    Vec v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline double hsum(Vec v) {
    double s = 0.0;
    for (std::size_t l = 0; l < kLanes; ++l) s += v[l];
    return s;
}

constexpr std::size_t kDepth = 256;  // doubles per row chunk kept hot in L1

// 4x4 tile of partial dot products over [0, len).
inline void tile(const double* q, const double* c, std::size_t stride, std::size_t len, double* out,
                 std::size_t ld) {
    Vec acc[kTile][kTile] = {};
    for (std::size_t k = 0; k < len; k += kLanes) {
        const Vec a0 = load(q + k), a1 = load(q + stride + k), a2 = load(q + 2 * stride + k),
                  a3 = load(q + 3 * stride + k);
        const Vec b[kTile] = {load(c + k), load(c + stride + k), load(c + 2 * stride + k),
                              load(c + 3 * stride + k)};
        for (std::size_t j = 0; j < kTile; ++j) {
            acc[0][j] += a0 * b[j];
            acc[1][j] += a1 * b[j];
            acc[2][j] += a2 * b[j];
            acc[3][j] += a3 * b[j];
        }
    }
    for (std::size_t i = 0; i < kTile; ++i)
        for (std::size_t j = 0; j < kTile; ++j) out[i * ld + j] += hsum(acc[i][j]);
}

}  // namespace

void gram_block(const double* q, std::size_t q_rows, const double* c, std::size_t c_rows,
                std::size_t stride, double* out) {
    std::fill(out, out + q_rows * c_rows, 0.0);
    for (std::size_t k0 = 0; k0 < stride; k0 += kDepth) {
        const std::size_t len = std::min(kDepth, stride - k0);
        for (std::size_t i = 0; i < q_rows; i += kTile)
            for (std::size_t j = 0; j < c_rows; j += kTile)
                tile(q + i * stride + k0, c + j * stride + k0, stride, len, out + i * c_rows + j, c_rows);
    }
}

}  // namespace repcx::detail
