#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "demandscope/common.hpp"

namespace demandscope::nn {

enum class LayerKind {
    Conv2d,         // 3x3 or 1x1, stride 1, same padding
    Relu,
    MaxPool2,       // 2x2, stride 2
    UpsampleNearest2,
    GlobalMaxPool,  // [C,H,W] -> [C]
    Dense,
    Dropout,        // inverted scaling at train time
    Softmax,        // row-wise over the feature dim
    Sigmoid,
};

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::UpsampleNearest2: return "upsample2";
        case LayerKind::GlobalMaxPool: return "global_maxpool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Sigmoid: return "sigmoid";
    }
    return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
    for (LayerKind k : {LayerKind::Conv2d, LayerKind::Relu, LayerKind::MaxPool2,
                        LayerKind::UpsampleNearest2, LayerKind::GlobalMaxPool, LayerKind::Dense,
                        LayerKind::Dropout, LayerKind::Softmax, LayerKind::Sigmoid})
        if (s == layer_kind_name(k)) return k;
    throw ParseError("unknown layer kind '" + s + "'");
}

struct LayerDesc {
    LayerKind kind = LayerKind::Relu;
    int in_ch = 0, out_ch = 0, kernel = 3;  // conv2d
    int in_dim = 0, out_dim = 0;            // dense
    double rate = 0.0;                      // dropout

    static LayerDesc conv2d(int in_ch, int out_ch, int kernel = 3) {
        LayerDesc d;
        d.kind = LayerKind::Conv2d;
        d.in_ch = in_ch;
        d.out_ch = out_ch;
        d.kernel = kernel;
        return d;
    }
    static LayerDesc relu() { return {LayerKind::Relu}; }
    static LayerDesc maxpool2() { return {LayerKind::MaxPool2}; }
    static LayerDesc upsample2() { return {LayerKind::UpsampleNearest2}; }
    static LayerDesc global_maxpool() { return {LayerKind::GlobalMaxPool}; }
    static LayerDesc dense(int in_dim, int out_dim) {
        LayerDesc d;
        d.kind = LayerKind::Dense;
        d.in_dim = in_dim;
        d.out_dim = out_dim;
        return d;
    }
    static LayerDesc dropout(double rate) {
        LayerDesc d;
        d.kind = LayerKind::Dropout;
        d.rate = rate;
        return d;
    }
    static LayerDesc softmax() { return {LayerKind::Softmax}; }
    static LayerDesc sigmoid() { return {LayerKind::Sigmoid}; }
};

// Per-sample activation shape: {C,H,W} spatial or {D} flat.
using ActShape = std::vector<int>;

struct NetworkSpec {
    ActShape input;  // {C,H,W} or {D}
    std::vector<LayerDesc> layers;
};

// Walks the layer list and returns every layer's output shape (per sample).
// Throws ShapeMismatch/InvalidConfig on an inconsistent spec.
inline std::vector<ActShape> infer_shapes(const NetworkSpec& spec) {
    std::vector<ActShape> out;
    ActShape cur = spec.input;
    if (cur.size() != 3 && cur.size() != 1) throw InvalidConfig("input shape must be {C,H,W} or {D}");
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& l = spec.layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + ")";
        switch (l.kind) {
            case LayerKind::Conv2d:
                if (cur.size() != 3) throw ShapeMismatch(where + ": needs spatial input");
                if (cur[0] != l.in_ch)
                    throw ShapeMismatch(where + ": in_ch " + std::to_string(l.in_ch) +
                                        " vs incoming " + std::to_string(cur[0]));
                if (l.kernel != 3 && l.kernel != 1) throw InvalidConfig(where + ": kernel must be 1 or 3");
                cur = {l.out_ch, cur[1], cur[2]};
                break;
            case LayerKind::Relu:
            case LayerKind::Sigmoid:
                break;
            case LayerKind::Softmax:
                if (cur.size() != 1) throw ShapeMismatch(where + ": needs flat input");
                break;
            case LayerKind::MaxPool2:
                if (cur.size() != 3) throw ShapeMismatch(where + ": needs spatial input");
                if (cur[1] % 2 != 0 || cur[2] % 2 != 0)
                    throw InvalidConfig(where + ": odd spatial dim");
                cur = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            case LayerKind::UpsampleNearest2:
                if (cur.size() != 3) throw ShapeMismatch(where + ": needs spatial input");
                cur = {cur[0], cur[1] * 2, cur[2] * 2};
                break;
            case LayerKind::GlobalMaxPool:
                if (cur.size() != 3) throw ShapeMismatch(where + ": needs spatial input");
                cur = {cur[0]};
                break;
            case LayerKind::Dense:
                if (cur.size() != 1) throw ShapeMismatch(where + ": needs flat input");
                if (cur[0] != l.in_dim)
                    throw ShapeMismatch(where + ": in_dim " + std::to_string(l.in_dim) +
                                        " vs incoming " + std::to_string(cur[0]));
                cur = {l.out_dim};
                break;
            case LayerKind::Dropout:
                if (l.rate < 0.0 || l.rate >= 1.0) throw InvalidConfig(where + ": rate must be in [0,1)");
                break;
        }
        out.push_back(cur);
    }
    return out;
}

inline int64_t layer_param_count(const LayerDesc& l) {
    switch (l.kind) {
        case LayerKind::Conv2d:
            return static_cast<int64_t>(l.out_ch) * l.in_ch * l.kernel * l.kernel + l.out_ch;
        case LayerKind::Dense:
            return static_cast<int64_t>(l.out_dim) * l.in_dim + l.out_dim;
        default:
            return 0;
    }
}

// Exact trainable parameter total (weights + biases); additive over layers.
inline int64_t param_count(const NetworkSpec& spec) {
    infer_shapes(spec);  // validates
    int64_t n = 0;
    for (const auto& l : spec.layers) n += layer_param_count(l);
    return n;
}

inline nlohmann::json spec_to_json(const NetworkSpec& spec) {
    nlohmann::json j;
    j["input"] = spec.input;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        nlohmann::json jl;
        jl["kind"] = layer_kind_name(l.kind);
        switch (l.kind) {
            case LayerKind::Conv2d:
                jl["in_ch"] = l.in_ch;
                jl["out_ch"] = l.out_ch;
                jl["kernel"] = l.kernel;
                break;
            case LayerKind::Dense:
                jl["in_dim"] = l.in_dim;
                jl["out_dim"] = l.out_dim;
                break;
            case LayerKind::Dropout:
                jl["rate"] = l.rate;
                break;
            default:
                break;
        }
        layers.push_back(jl);
    }
    j["layers"] = layers;
    return j;
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    spec.input = j.at("input").get<std::vector<int>>();
    for (const auto& jl : j.at("layers")) {
        LayerDesc l;
        l.kind = layer_kind_from_name(jl.at("kind").get<std::string>());
        switch (l.kind) {
            case LayerKind::Conv2d:
                l.in_ch = jl.at("in_ch").get<int>();
                l.out_ch = jl.at("out_ch").get<int>();
                l.kernel = jl.at("kernel").get<int>();
                break;
            case LayerKind::Dense:
                l.in_dim = jl.at("in_dim").get<int>();
                l.out_dim = jl.at("out_dim").get<int>();
                break;
            case LayerKind::Dropout:
                l.rate = jl.at("rate").get<double>();
                break;
            default:
                break;
        }
        spec.layers.push_back(l);
    }
    infer_shapes(spec);
    return spec;
}

// FNV-1a over the canonical JSON dump; identifies a spec inside checkpoints.
inline uint64_t spec_hash(const NetworkSpec& spec) {
    std::string s = spec_to_json(spec).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace demandscope::nn
