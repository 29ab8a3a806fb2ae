#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "demandscope/nn/network.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::eval {

// Non-negative class-activation map at the network's input resolution;
// max-normalized to 1 unless identically zero.
struct Heatmap {
    int size = 0;
    std::vector<float> v;  // size*size, row-major

    float at(int y, int x) const { return v[static_cast<size_t>(y) * size + x]; }
};

namespace detail {

// Half-pixel-aligned bilinear resize of a single-channel map.
inline std::vector<float> bilinear_resize(const std::vector<float>& src, int sh, int sw, int dh,
                                          int dw) {
    std::vector<float> dst(static_cast<size_t>(dh) * dw);
    const double ry = static_cast<double>(sh) / dh;
    const double rx = static_cast<double>(sw) / dw;
    for (int y = 0; y < dh; ++y) {
        double sy = (y + 0.5) * ry - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            double sx = (x + 0.5) * rx - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            const double top = (1 - fx) * src[static_cast<size_t>(y0) * sw + x0] +
                               fx * src[static_cast<size_t>(y0) * sw + x1];
            const double bot = (1 - fx) * src[static_cast<size_t>(y1) * sw + x0] +
                               fx * src[static_cast<size_t>(y1) * sw + x1];
            dst[static_cast<size_t>(y) * dw + x] = static_cast<float>((1 - fy) * top + fy * bot);
        }
    }
    return dst;
}

}  // namespace detail

// Channel weights are the spatial means of d(target logit)/d(feature map);
// the map is relu(sum_k w_k A_k) upsampled to the input resolution. `x` is
// the already-normalized input with a leading batch dim of 1; `feature_layer`
// names the retained activation (the encoder's final feature map) and
// `logit_layer` the pre-softmax dense output.
template <typename T>
Heatmap grad_cam(const nn::Network<T>& net, const nn::ParameterStore<T>& ps, const Tensor<T>& x,
                 int target_class, int feature_layer, int logit_layer) {
    if (x.ndim() != 4 || x.shape[0] != 1)
        throw ShapeMismatch("grad_cam expects a single [1,C,H,W] input");
    const int n_layers = static_cast<int>(net.spec().layers.size());
    if (feature_layer < 0 || logit_layer <= feature_layer || logit_layer >= n_layers)
        throw InvalidConfig("grad_cam: need 0 <= feature_layer < logit_layer < layer count");

    const nn::FwdContext ctx{false, 0};
    auto acts = net.forward(x, ps, ctx);

    const Tensor<T>& logits = acts.acts[static_cast<size_t>(logit_layer)];
    if (logits.ndim() != 2)
        throw ShapeMismatch("grad_cam: logit layer output must be [1,K]");
    if (target_class < 0 || target_class >= logits.shape[1])
        throw InvalidConfig("grad_cam: target class out of range");
    Tensor<T> dout(logits.shape);
    dout.at2(0, target_class) = T(1);

    Tensor<T> da = net.backward(acts, std::move(dout), ps, nullptr, ctx, logit_layer,
                                feature_layer);
    const Tensor<T>& a = acts.acts[static_cast<size_t>(feature_layer)];
    if (a.ndim() != 4) throw ShapeMismatch("grad_cam: feature layer must be spatial");
    const int ch = a.shape[1], fh = a.shape[2], fw = a.shape[3];
    const int64_t plane = static_cast<int64_t>(fh) * fw;

    std::vector<float> cam(static_cast<size_t>(plane), 0.0f);
    for (int k = 0; k < ch; ++k) {
        const T* ak = a.v.data() + static_cast<int64_t>(k) * plane;
        const T* dk = da.v.data() + static_cast<int64_t>(k) * plane;
        double wk = 0;
        for (int64_t i = 0; i < plane; ++i) wk += static_cast<double>(dk[i]);
        wk /= static_cast<double>(plane);
        for (int64_t i = 0; i < plane; ++i)
            cam[static_cast<size_t>(i)] += static_cast<float>(wk * static_cast<double>(ak[i]));
    }
    for (auto& v : cam) v = std::max(0.0f, v);

    Heatmap out;
    out.size = x.shape[2];
    out.v = detail::bilinear_resize(cam, fh, fw, out.size, out.size);
    float peak = 0;
    for (float v : out.v) peak = std::max(peak, v);
    if (peak > 0)
        for (auto& v : out.v) v /= peak;
    return out;
}

// Mean heatmap value inside vs outside a binary footprint mask.
struct FootprintActivation {
    double inside_mean = 0;
    double outside_mean = 0;
};

inline FootprintActivation footprint_activation(const Heatmap& h,
                                                const std::vector<uint8_t>& mask) {
    if (mask.size() != h.v.size()) throw ShapeMismatch("footprint_activation: size mismatch");
    double in_sum = 0, out_sum = 0;
    int64_t in_n = 0, out_n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            in_sum += h.v[i];
            ++in_n;
        } else {
            out_sum += h.v[i];
            ++out_n;
        }
    }
    FootprintActivation fa;
    if (in_n > 0) fa.inside_mean = in_sum / static_cast<double>(in_n);
    if (out_n > 0) fa.outside_mean = out_sum / static_cast<double>(out_n);
    return fa;
}

}  // namespace demandscope::eval
