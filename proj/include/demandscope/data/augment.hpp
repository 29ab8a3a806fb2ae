#pragma once

#include <cmath>

#include "demandscope/rng.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::data {

// Composition order is fixed: flips, then k*90 degree rotation, then zoom
// with center crop back to the original size.
struct AugmentPlan {
    bool hflip = false;
    bool vflip = false;
    int rot90 = 0;       // clockwise quarter turns
    double zoom = 1.0;   // in [1.0, 1.15]
};

inline AugmentPlan random_augment_plan(Rng& rng) {
    AugmentPlan p;
    p.hflip = rng.bernoulli(0.5);
    p.vflip = rng.bernoulli(0.5);
    p.rot90 = static_cast<int>(rng.below(4));
    p.zoom = rng.uniform(1.0, 1.15);
    return p;
}

namespace detail {

// Maps an output pixel through the inverse transform chain to continuous
// source coordinates. Identity plan produces exact integer coordinates.
inline void source_coords(const AugmentPlan& p, int size, int y, int x, double& sy, double& sx) {
    const double c = (size - 1) * 0.5;
    double by = c + (y - c) / p.zoom;
    double bx = c + (x - c) / p.zoom;
    for (int k = 0; k < (p.rot90 & 3); ++k) {
        const double ay = (size - 1) - bx;
        const double ax = by;
        by = ay;
        bx = ax;
    }
    if (p.vflip) by = (size - 1) - by;
    if (p.hflip) bx = (size - 1) - bx;
    sy = by;
    sx = bx;
}

}  // namespace detail

// Bilinear resampling for image channels.
template <typename T>
Tensor<T> apply_augment(const Tensor<T>& chw, const AugmentPlan& p) {
    const int C = chw.shape[0], H = chw.shape[1], W = chw.shape[2];
    if (H != W) throw ShapeMismatch("augment expects square patches");
    Tensor<T> out(chw.shape);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sy, sx;
            detail::source_coords(p, H, y, x, sy, sx);
            int y0 = static_cast<int>(std::floor(sy));
            int x0 = static_cast<int>(std::floor(sx));
            const double fy = sy - y0;
            const double fx = sx - x0;
            const auto clamp = [&](int v) { return v < 0 ? 0 : (v >= H ? H - 1 : v); };
            const int y0c = clamp(y0), y1c = clamp(y0 + 1);
            const int x0c = clamp(x0), x1c = clamp(x0 + 1);
            for (int ch = 0; ch < C; ++ch) {
                const T* plane = chw.v.data() + static_cast<size_t>(ch) * H * W;
                const double v00 = plane[static_cast<size_t>(y0c) * W + x0c];
                const double v01 = plane[static_cast<size_t>(y0c) * W + x1c];
                const double v10 = plane[static_cast<size_t>(y1c) * W + x0c];
                const double v11 = plane[static_cast<size_t>(y1c) * W + x1c];
                const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
                out.v[(static_cast<size_t>(ch) * H + y) * W + x] = static_cast<T>(v);
            }
        }
    return out;
}

// Nearest-neighbor variant so binary masks stay binary under the same plan.
template <typename T>
Tensor<T> apply_augment_nearest(const Tensor<T>& chw, const AugmentPlan& p) {
    const int C = chw.shape[0], H = chw.shape[1], W = chw.shape[2];
    if (H != W) throw ShapeMismatch("augment expects square patches");
    Tensor<T> out(chw.shape);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sy, sx;
            detail::source_coords(p, H, y, x, sy, sx);
            int yi = static_cast<int>(std::lround(sy));
            int xi = static_cast<int>(std::lround(sx));
            yi = yi < 0 ? 0 : (yi >= H ? H - 1 : yi);
            xi = xi < 0 ? 0 : (xi >= W ? W - 1 : xi);
            for (int ch = 0; ch < C; ++ch)
                out.v[(static_cast<size_t>(ch) * H + y) * W + x] =
                    chw.v[(static_cast<size_t>(ch) * H + yi) * W + xi];
        }
    return out;
}

template <typename T>
Tensor<T> augment(const Tensor<T>& chw, Rng& rng) {
    return apply_augment(chw, random_augment_plan(rng));
}

}  // namespace demandscope::data
