#pragma once

#include "rails/matrix_core.hpp"

#include <cstdint>
#include <random>

namespace rails {

using Rng = std::mt19937_64;

/// Fills column by column, so the stream consumed is fixed by the shape.
inline Dense random_gaussian(Index rows, Index cols, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Dense m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

inline Dense random_gaussian(Index rows, Index cols, std::uint64_t seed)
{
    Rng rng(seed);
    return random_gaussian(rows, cols, rng);
}

} // namespace rails
