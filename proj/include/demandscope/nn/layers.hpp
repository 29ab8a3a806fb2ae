#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "demandscope/nn/params.hpp"
#include "demandscope/nn/spec.hpp"
#include "demandscope/rng.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::nn {

inline int& thread_count() {
    static int n = 1;
    return n;
}

inline void set_threads(int n) {
    thread_count() = std::max(1, n);
#ifdef _OPENMP
    omp_set_num_threads(std::max(1, n));
#endif
}

// Static-schedule parallel loop. Every iteration writes disjoint memory and
// accumulates in its own fixed order, so results are identical for any thread
// count.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
    if (thread_count() <= 1 || n < 2) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) fn(i);
#else
    for (int64_t i = 0; i < n; ++i) fn(i);
#endif
}

// ---------------------------------------------------------------------------
// conv2d, stride 1, same padding, kernel 1 or 3. im2col + a tiled kernel.
// ---------------------------------------------------------------------------

// col is [K x P] with K = C*k*k, P = H*W, row-contiguous over pixels.
template <typename T>
void im2col(const T* x, int C, int H, int W, int kernel, std::vector<T>& col) {
    const int P = H * W;
    const int kk = kernel * kernel;
    col.assign(static_cast<size_t>(C) * kk * P, T(0));
    if (kernel == 1) {
        std::memcpy(col.data(), x, sizeof(T) * static_cast<size_t>(C) * P);
        return;
    }
    const int r = kernel / 2;
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * P;
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                T* row = col.data() + (static_cast<size_t>(c) * kk +
                                       static_cast<size_t>(dy + r) * kernel + (dx + r)) *
                                          P;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(W, W - dx);
                    if (x1 > x0)
                        std::memcpy(row + static_cast<size_t>(y) * W + x0,
                                    xc + static_cast<size_t>(sy) * W + x0 + dx,
                                    sizeof(T) * static_cast<size_t>(x1 - x0));
                }
            }
        }
    }
}

// y[M x P] = w[M x K] * col[K x P] + bias. Parallel over pixel tiles; each
// output element accumulates over K sequentially.
template <typename T>
void gemm_w_col(const T* w, const T* bias, const T* col, int M, int K, int P, T* y) {
    constexpr int kTile = 256;
    const int n_tiles = (P + kTile - 1) / kTile;
    parallel_for(n_tiles, [&](int64_t t) {
        const int p0 = static_cast<int>(t) * kTile;
        const int pn = std::min(kTile, P - p0);
        T acc[kTile];
        for (int m = 0; m < M; ++m) {
            const T bm = bias ? bias[m] : T(0);
            for (int p = 0; p < pn; ++p) acc[p] = bm;
            const T* wrow = w + static_cast<size_t>(m) * K;
            for (int k = 0; k < K; ++k) {
                const T wv = wrow[k];
                const T* crow = col + static_cast<size_t>(k) * P + p0;
#pragma omp simd
                for (int p = 0; p < pn; ++p) acc[p] += wv * crow[p];
            }
            std::memcpy(y + static_cast<size_t>(m) * P + p0, acc, sizeof(T) * pn);
        }
    });
}

struct ConvScratch {
    // one col buffer per scalar type; reused across layers/samples
    std::vector<float> col_f;
    std::vector<double> col_d;
    std::vector<float> col2_f;
    std::vector<double> col2_d;

    template <typename T>
    std::vector<T>& col();
    template <typename T>
    std::vector<T>& col2();
};

template <>
inline std::vector<float>& ConvScratch::col<float>() { return col_f; }
template <>
inline std::vector<double>& ConvScratch::col<double>() { return col_d; }
template <>
inline std::vector<float>& ConvScratch::col2<float>() { return col2_f; }
template <>
inline std::vector<double>& ConvScratch::col2<double>() { return col2_d; }

// Forward for one sample: x[C,H,W] -> y[O,H,W].
template <typename T>
void conv2d_forward(const T* x, int C, int H, int W, const T* w, const T* b, int O, int kernel,
                    T* y, ConvScratch& scratch) {
    auto& col = scratch.col<T>();
    im2col(x, C, H, W, kernel, col);
    gemm_w_col(w, b, col.data(), O, C * kernel * kernel, H * W, y);
}

// Accumulates dw/db for one sample and writes dx.
// dw[m][k] += dot(dy[m], col[k]); dx = conv(dy, w flipped and transposed).
template <typename T>
void conv2d_backward(const T* x, const T* dy, int C, int H, int W, const T* w, int O, int kernel,
                     T* dw, T* db, T* dx, ConvScratch& scratch) {
    const int P = H * W;
    const int K = C * kernel * kernel;
    auto& col = scratch.col<T>();
    im2col(x, C, H, W, kernel, col);
    // dw: parallel over (m,k) pairs, each a sequential dot over pixels
    parallel_for(static_cast<int64_t>(O) * K, [&](int64_t mk) {
        const int m = static_cast<int>(mk / K);
        const int k = static_cast<int>(mk % K);
        const T* a = dy + static_cast<size_t>(m) * P;
        const T* c = col.data() + static_cast<size_t>(k) * P;
        T s = 0;
#pragma omp simd reduction(+ : s)
        for (int p = 0; p < P; ++p) s += a[p] * c[p];
        dw[static_cast<size_t>(m) * K + k] += s;
    });
    if (db) {
        for (int m = 0; m < O; ++m) {
            const T* a = dy + static_cast<size_t>(m) * P;
            T s = 0;
#pragma omp simd reduction(+ : s)
            for (int p = 0; p < P; ++p) s += a[p];
            db[m] += s;
        }
    }
    if (dx) {
        // flipped kernel, swapped in/out channels: wf[c][o][ky][kx] = w[o][c][k-1-ky][k-1-kx]
        std::vector<T> wf(static_cast<size_t>(C) * O * kernel * kernel);
        const int kk = kernel * kernel;
        for (int o = 0; o < O; ++o)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < kk; ++t)
                    wf[(static_cast<size_t>(c) * O + o) * kk + (kk - 1 - t)] =
                        w[(static_cast<size_t>(o) * C + c) * kk + t];
        auto& col2 = scratch.col2<T>();
        im2col(dy, O, H, W, kernel, col2);
        gemm_w_col(wf.data(), static_cast<const T*>(nullptr), col2.data(), C, O * kk, P, dx);
    }
}

// ---------------------------------------------------------------------------
// elementwise and pooling layers (single sample, contiguous buffers)
// ---------------------------------------------------------------------------

template <typename T>
void relu_forward(const T* x, int64_t n, T* y) {
    parallel_for((n + 65535) / 65536, [&](int64_t b) {
        const int64_t i0 = b * 65536, i1 = std::min(n, i0 + 65536);
        for (int64_t i = i0; i < i1; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    });
}

template <typename T>
void relu_backward(const T* y, const T* dy, int64_t n, T* dx) {
    for (int64_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void sigmoid_forward(const T* x, int64_t n, T* y) {
    for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* y, const T* dy, int64_t n, T* dx) {
    for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
void maxpool2_forward(const T* x, int C, int H, int W, T* y) {
    const int Ho = H / 2, Wo = W / 2;
    parallel_for(C, [&](int64_t c) {
        const T* xc = x + c * static_cast<size_t>(H) * W;
        T* yc = y + c * static_cast<size_t>(Ho) * Wo;
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                const T* p = xc + static_cast<size_t>(2 * oy) * W + 2 * ox;
                T best = p[0];
                if (p[1] > best) best = p[1];
                if (p[W] > best) best = p[W];
                if (p[W + 1] > best) best = p[W + 1];
                yc[static_cast<size_t>(oy) * Wo + ox] = best;
            }
    });
}

// Routes the gradient to the first window element equal to the max
// (fixed scan order breaks ties).
template <typename T>
void maxpool2_backward(const T* x, const T* y, const T* dy, int C, int H, int W, T* dx) {
    const int Ho = H / 2, Wo = W / 2;
    std::fill(dx, dx + static_cast<size_t>(C) * H * W, T(0));
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * H * W;
        const T* yc = y + static_cast<size_t>(c) * Ho * Wo;
        const T* dyc = dy + static_cast<size_t>(c) * Ho * Wo;
        T* dxc = dx + static_cast<size_t>(c) * H * W;
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                const T m = yc[static_cast<size_t>(oy) * Wo + ox];
                const T g = dyc[static_cast<size_t>(oy) * Wo + ox];
                const size_t base = static_cast<size_t>(2 * oy) * W + 2 * ox;
                if (xc[base] == m) { dxc[base] += g; continue; }
                if (xc[base + 1] == m) { dxc[base + 1] += g; continue; }
                if (xc[base + W] == m) { dxc[base + W] += g; continue; }
                dxc[base + W + 1] += g;
            }
    }
}

template <typename T>
void upsample2_forward(const T* x, int C, int H, int W, T* y) {
    const int Ho = H * 2, Wo = W * 2;
    parallel_for(C, [&](int64_t c) {
        const T* xc = x + c * static_cast<size_t>(H) * W;
        T* yc = y + c * static_cast<size_t>(Ho) * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
            const T* row = xc + static_cast<size_t>(oy / 2) * W;
            T* orow = yc + static_cast<size_t>(oy) * Wo;
            for (int ox = 0; ox < Wo; ++ox) orow[ox] = row[ox / 2];
        }
    });
}

template <typename T>
void upsample2_backward(const T* dy, int C, int H, int W, T* dx) {
    // H,W are the *input* dims
    const int Wo = W * 2;
    for (int c = 0; c < C; ++c) {
        const T* dyc = dy + static_cast<size_t>(c) * (H * 2) * Wo;
        T* dxc = dx + static_cast<size_t>(c) * H * W;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const T* p = dyc + static_cast<size_t>(2 * y) * Wo + 2 * x;
                dxc[static_cast<size_t>(y) * W + x] = p[0] + p[1] + p[Wo] + p[Wo + 1];
            }
    }
}

template <typename T>
void global_maxpool_forward(const T* x, int C, int HW, T* y) {
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * HW;
        T best = xc[0];
        for (int i = 1; i < HW; ++i)
            if (xc[i] > best) best = xc[i];
        y[c] = best;
    }
}

template <typename T>
void global_maxpool_backward(const T* x, const T* y, const T* dy, int C, int HW, T* dx) {
    std::fill(dx, dx + static_cast<size_t>(C) * HW, T(0));
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<size_t>(c) * HW;
        for (int i = 0; i < HW; ++i)
            if (xc[i] == y[c]) {
                dx[static_cast<size_t>(c) * HW + i] = dy[c];
                break;
            }
    }
}

// dense over a batch: x[N,I] w[O,I] b[O] -> y[N,O]
template <typename T>
void dense_forward(const T* x, int N, int I, const T* w, const T* b, int O, T* y) {
    parallel_for(N, [&](int64_t n) {
        const T* xn = x + n * static_cast<size_t>(I);
        T* yn = y + n * static_cast<size_t>(O);
        for (int o = 0; o < O; ++o) {
            const T* wo = w + static_cast<size_t>(o) * I;
            T s = b[o];
#pragma omp simd reduction(+ : s)
            for (int i = 0; i < I; ++i) s += xn[i] * wo[i];
            yn[o] = s;
        }
    });
}

template <typename T>
void dense_backward(const T* x, const T* dy, int N, int I, const T* w, int O, T* dw, T* db,
                    T* dx) {
    for (int o = 0; o < O; ++o) {
        T* dwo = dw + static_cast<size_t>(o) * I;
        T sb = 0;
        for (int n = 0; n < N; ++n) {
            const T g = dy[static_cast<size_t>(n) * O + o];
            sb += g;
            const T* xn = x + static_cast<size_t>(n) * I;
#pragma omp simd
            for (int i = 0; i < I; ++i) dwo[i] += g * xn[i];
        }
        db[o] += sb;
    }
    if (dx) {
        for (int n = 0; n < N; ++n) {
            const T* dyn = dy + static_cast<size_t>(n) * O;
            T* dxn = dx + static_cast<size_t>(n) * I;
            for (int i = 0; i < I; ++i) {
                T s = 0;
                for (int o = 0; o < O; ++o) s += dyn[o] * w[static_cast<size_t>(o) * I + i];
                dxn[i] = s;
            }
        }
    }
}

// Inverted dropout; the mask is regenerated from the same key in backward so
// nothing needs to be stored.
template <typename T>
void dropout_forward(const T* x, int64_t n, double rate, uint64_t key, bool train, T* y) {
    if (!train || rate == 0.0) {
        if (y != x) std::memcpy(y, x, sizeof(T) * n);
        return;
    }
    Rng rng(key);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < n; ++i) y[i] = rng.uniform() < rate ? T(0) : x[i] * scale;
}

template <typename T>
void dropout_backward(const T* dy, int64_t n, double rate, uint64_t key, bool train, T* dx) {
    if (!train || rate == 0.0) {
        std::memcpy(dx, dy, sizeof(T) * n);
        return;
    }
    Rng rng(key);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < n; ++i) dx[i] = rng.uniform() < rate ? T(0) : dy[i] * scale;
}

// row-wise softmax over [N,D]
template <typename T>
void softmax_forward(const T* x, int N, int D, T* y) {
    for (int n = 0; n < N; ++n) {
        const T* xn = x + static_cast<size_t>(n) * D;
        T* yn = y + static_cast<size_t>(n) * D;
        T mx = xn[0];
        for (int d = 1; d < D; ++d) mx = std::max(mx, xn[d]);
        T sum = 0;
        for (int d = 0; d < D; ++d) {
            yn[d] = std::exp(xn[d] - mx);
            sum += yn[d];
        }
        for (int d = 0; d < D; ++d) yn[d] /= sum;
    }
}

template <typename T>
void softmax_backward(const T* y, const T* dy, int N, int D, T* dx) {
    for (int n = 0; n < N; ++n) {
        const T* yn = y + static_cast<size_t>(n) * D;
        const T* dyn = dy + static_cast<size_t>(n) * D;
        T* dxn = dx + static_cast<size_t>(n) * D;
        T dot = 0;
        for (int d = 0; d < D; ++d) dot += yn[d] * dyn[d];
        for (int d = 0; d < D; ++d) dxn[d] = yn[d] * (dyn[d] - dot);
    }
}

}  // namespace demandscope::nn
