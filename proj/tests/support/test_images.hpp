// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "stegano/image.hpp"

namespace stegano::fixtures {

inline PixelGrid random_grid(std::size_t w, std::size_t h, std::mt19937_64& rng) {
    PixelGrid g(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& p : g.pixels()) p = static_cast<std::uint8_t>(d(rng));
    return g;
}

/// Piecewise-flat image with mild noise on a few pixels: lots of zero prediction errors.
inline PixelGrid smooth_grid(std::size_t w, std::size_t h, std::mt19937_64& rng) {
    PixelGrid g(w, h);
    std::uniform_int_distribution<int> base(40, 215);
    std::uniform_int_distribution<int> tile(6, 18);
    const int tw = tile(rng);
    const int th = tile(rng);
    const int b0 = base(rng);
    const int gx = std::uniform_int_distribution<int>(-6, 6)(rng);
    const int gy = std::uniform_int_distribution<int>(-6, 6)(rng);
    std::bernoulli_distribution speck(0.04);
    std::uniform_int_distribution<int> jitter(-3, 3);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            int v = b0 + gx * static_cast<int>(c / static_cast<std::size_t>(tw)) +
                    gy * static_cast<int>(r / static_cast<std::size_t>(th));
            if (speck(rng)) v += jitter(rng);
            g(r, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
        }
    }
    return g;
}

inline Planes smooth_planes(std::size_t channels, std::size_t w, std::size_t h, std::mt19937_64& rng) {
    Planes p;
    for (std::size_t c = 0; c < channels; ++c) p.push_back(smooth_grid(w, h, rng));
    return p;
}

}  // namespace stegano::fixtures
