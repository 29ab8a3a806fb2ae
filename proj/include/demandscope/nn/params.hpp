#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "demandscope/nn/spec.hpp"
#include "demandscope/rng.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::nn {

template <typename T>
struct ParamArray {
    std::string name;
    std::vector<int> shape;
    std::vector<T> w;       // values
    std::vector<T> m, v;    // Adam moments

    int64_t size() const { return static_cast<int64_t>(w.size()); }
};

// All trainable arrays of a network plus optimizer state. Array order follows
// layer declaration order; that order is the checkpoint wire order.
template <typename T>
struct ParameterStore {
    std::vector<ParamArray<T>> arrays;
    int64_t step = 0;

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& a : arrays) n += a.size();
        return n;
    }

    ParamArray<T>* find(const std::string& name) {
        for (auto& a : arrays)
            if (a.name == name) return &a;
        return nullptr;
    }

    template <typename U>
    ParameterStore<U> cast() const {
        ParameterStore<U> out;
        out.step = step;
        for (const auto& a : arrays) {
            ParamArray<U> b;
            b.name = a.name;
            b.shape = a.shape;
            b.w.assign(a.w.begin(), a.w.end());
            b.m.assign(a.m.begin(), a.m.end());
            b.v.assign(a.v.begin(), a.v.end());
            out.arrays.push_back(std::move(b));
        }
        return out;
    }
};

// Gradients mirror the store's arrays by index.
template <typename T>
struct Gradients {
    std::vector<std::vector<T>> g;

    void zero_like(const ParameterStore<T>& store) {
        g.assign(store.arrays.size(), {});
        for (size_t i = 0; i < store.arrays.size(); ++i)
            g[i].assign(store.arrays[i].w.size(), T(0));
    }
};

inline std::string param_layer_name(size_t layer_index, LayerKind kind) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "L%02zu.%s", layer_index,
                  kind == LayerKind::Conv2d ? "conv" : "dense");
    return buf;
}

// He-style fan-in-scaled uniform init; biases start at zero. Each layer draws
// from its own derived stream so the init does not depend on layer count.
template <typename T>
ParameterStore<T> init_params(const NetworkSpec& spec, uint64_t seed) {
    infer_shapes(spec);
    ParameterStore<T> store;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& l = spec.layers[i];
        if (l.kind != LayerKind::Conv2d && l.kind != LayerKind::Dense) continue;
        const std::string base = param_layer_name(i, l.kind);
        int64_t fan_in, n_w;
        std::vector<int> wshape, bshape;
        if (l.kind == LayerKind::Conv2d) {
            fan_in = static_cast<int64_t>(l.in_ch) * l.kernel * l.kernel;
            n_w = static_cast<int64_t>(l.out_ch) * fan_in;
            wshape = {l.out_ch, l.in_ch, l.kernel, l.kernel};
            bshape = {l.out_ch};
        } else {
            fan_in = l.in_dim;
            n_w = static_cast<int64_t>(l.out_dim) * l.in_dim;
            wshape = {l.out_dim, l.in_dim};
            bshape = {l.out_dim};
        }
        Rng rng(derive_seed(seed, 0x1417u, i));
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        ParamArray<T> w;
        w.name = base + ".weight";
        w.shape = wshape;
        w.w.resize(n_w);
        for (auto& x : w.w) x = static_cast<T>(rng.uniform(-limit, limit));
        w.m.assign(n_w, T(0));
        w.v.assign(n_w, T(0));

        ParamArray<T> b;
        b.name = base + ".bias";
        b.shape = bshape;
        b.w.assign(bshape[0], T(0));
        b.m.assign(bshape[0], T(0));
        b.v.assign(bshape[0], T(0));

        store.arrays.push_back(std::move(w));
        store.arrays.push_back(std::move(b));
    }
    return store;
}

}  // namespace demandscope::nn
