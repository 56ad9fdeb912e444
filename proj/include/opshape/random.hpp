#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace opshape {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, identical on every
/// standard library (unlike std::uniform_real_distribution).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Samples an index from a (normalized) probability vector.
inline int sample_index(std::span<const double> probs, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) {
            continue;
        }
        last_positive = static_cast<int>(i);
        cumulative += probs[i];
        if (u < cumulative) {
            return static_cast<int>(i);
        }
    }
    return last_positive;
}

}  // namespace opshape
