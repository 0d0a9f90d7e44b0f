#pragma once

#include <cstddef>

namespace repcx::detail {

inline constexpr std::size_t kTile = 4;   // rows per register tile, both operands
inline constexpr std::size_t kLanes = 8;  // doubles per vector; row stride is a multiple

/// out[r * c_rows + c] = dot(q row r, c row c) for r < q_rows, c < c_rows.
/// Both row counts must be multiples of kTile, `stride` a multiple of kLanes,
/// and rows zero-padded up to `stride`. Summation order is unspecified.
void gram_block(const double* q, std::size_t q_rows, const double* c, std::size_t c_rows,
                std::size_t stride, double* out);

}  // namespace repcx::detail
