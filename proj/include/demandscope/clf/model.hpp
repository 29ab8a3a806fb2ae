#pragma once

#include <string>

#include "demandscope/nn/network.hpp"
#include "demandscope/nn/spec.hpp"
#include "demandscope/seg/model.hpp"

namespace demandscope::clf {

// Phase-2 head: pooled encoder features through dropout into a two-way dense
// softmax. The encoder is the segmenter's, taken whole and kept trainable.
struct ClassifierConfig {
    seg::EncoderConfig encoder;
    double dropout_rate = 0.25;
    int n_classes = 2;
};

inline nn::NetworkSpec build_classifier(const ClassifierConfig& cfg) {
    if (cfg.encoder.in_channels != 3)
        throw InvalidConfig("classifier encoder takes rgb input");
    if (cfg.n_classes < 2) throw InvalidConfig("classifier needs at least two classes");
    nn::NetworkSpec spec = seg::build_encoder(cfg.encoder);
    spec.layers.push_back(nn::LayerDesc::global_maxpool());
    spec.layers.push_back(nn::LayerDesc::dropout(cfg.dropout_rate));
    spec.layers.push_back(nn::LayerDesc::dense(cfg.encoder.filters, cfg.n_classes));
    spec.layers.push_back(nn::LayerDesc::softmax());
    return spec;
}

// Encoder feature map feeding the head; class-activation maps read here.
inline int classifier_feature_layer(const ClassifierConfig& cfg) {
    return seg::encoder_output_layer(cfg.encoder);
}

// Pre-softmax dense output.
inline int classifier_logit_layer(const ClassifierConfig& cfg) {
    return seg::encoder_layer_count(cfg.encoder) + 2;
}

namespace detail {

// Parameter names are "L<index>.<kind>.<weight|bias>".
inline int layer_index_of(const std::string& param_name) {
    if (param_name.size() < 2 || param_name[0] != 'L') return -1;
    size_t pos = 1;
    int idx = 0;
    while (pos < param_name.size() && param_name[pos] >= '0' && param_name[pos] <= '9') {
        idx = idx * 10 + (param_name[pos] - '0');
        ++pos;
    }
    return pos > 1 && pos < param_name.size() && param_name[pos] == '.' ? idx : -1;
}

}  // namespace detail

// Head weights are freshly seeded; every encoder array is copied bit for bit
// from the segmentation checkpoint. A checkpoint trained on a different
// encoder geometry fails loudly rather than half-loading.
inline nn::ParameterStore<float> init_from_segmentation(const ClassifierConfig& cfg,
                                                        const nn::ParameterStore<float>& seg_ps,
                                                        uint64_t seed) {
    const nn::NetworkSpec spec = build_classifier(cfg);
    nn::Network<float> net(spec);
    nn::ParameterStore<float> ps = net.init(seed);
    const int n_encoder_layers = seg::encoder_layer_count(cfg.encoder);
    for (auto& arr : ps.arrays) {
        const int layer = detail::layer_index_of(arr.name);
        if (layer < 0 || layer >= n_encoder_layers) continue;
        const nn::ParamArray<float>* src = nullptr;
        for (const auto& a : seg_ps.arrays)
            if (a.name == arr.name) {
                src = &a;
                break;
            }
        if (!src)
            throw ShapeMismatch("segmentation checkpoint lacks encoder array " + arr.name);
        if (src->shape != arr.shape)
            throw ShapeMismatch("encoder array " + arr.name + " has a different shape in the checkpoint");
        arr.w = src->w;
    }
    return ps;
}

}  // namespace demandscope::clf
