#pragma once

#include <cstddef>
#include <cstdint>

#include "lstmkf/matrix.hpp"

namespace lstmkf {

/// Random (semi-)orthogonal matrix: thin QR of a seeded standard-normal
/// matrix, with column signs flipped so that diag(R) is positive. For
/// rows >= cols the columns are orthonormal; otherwise the rows are.
Matrix init_orthogonal(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Entries drawn uniformly from [-bound, bound]. Throws if bound <= 0.
Matrix init_uniform(std::size_t rows, std::size_t cols, double bound, std::uint64_t seed);

/// Glorot/Xavier uniform: bound = sqrt(6 / (rows + cols)).
Matrix init_xavier(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace lstmkf
