#pragma once

#include "demandscope/common.hpp"
#include "demandscope/nn/spec.hpp"

namespace demandscope::seg {

// Encoder: `stages` blocks of [convs_per_stage x (conv 3x3 + relu)] followed
// by a 2x2 maxpool each. Defaults give 20 convs, a 4x4x64 output, and 703,424
// parameters.
struct EncoderConfig {
    int stages = 5;
    int convs_per_stage = 4;
    int filters = 64;
    int in_channels = 3;  // 4 for the pointer-conditioned variant
    int input_size = kPatchSize;
};

inline void validate(const EncoderConfig& c) {
    if (c.stages < 1 || c.convs_per_stage < 1 || c.filters < 1 || c.in_channels < 1)
        throw InvalidConfig("encoder config fields must be positive");
    int size = c.input_size;
    for (int s = 0; s < c.stages; ++s) {
        if (size % 2 != 0)
            throw InvalidConfig("input size " + std::to_string(c.input_size) +
                                " is not divisible by 2^" + std::to_string(c.stages));
        size /= 2;
    }
}

inline nn::NetworkSpec build_encoder(const EncoderConfig& c) {
    validate(c);
    nn::NetworkSpec spec;
    spec.input = {c.in_channels, c.input_size, c.input_size};
    int in_ch = c.in_channels;
    for (int s = 0; s < c.stages; ++s) {
        for (int k = 0; k < c.convs_per_stage; ++k) {
            spec.layers.push_back(nn::LayerDesc::conv2d(in_ch, c.filters));
            spec.layers.push_back(nn::LayerDesc::relu());
            in_ch = c.filters;
        }
        spec.layers.push_back(nn::LayerDesc::maxpool2());
    }
    return spec;
}

inline int encoder_layer_count(const EncoderConfig& c) {
    return c.stages * (2 * c.convs_per_stage + 1);
}

// Index of the encoder's final feature map (the last maxpool output); the
// classification head attaches here and class-activation maps read from here.
inline int encoder_output_layer(const EncoderConfig& c) { return encoder_layer_count(c) - 1; }

// Decoder mirrors the encoder with nearest-neighbor upsampling and carries no
// skip connections; a 1x1 conv plus sigmoid produces the mask.
inline nn::NetworkSpec build_segmenter(const EncoderConfig& c) {
    nn::NetworkSpec spec = build_encoder(c);
    for (int s = 0; s < c.stages; ++s) {
        spec.layers.push_back(nn::LayerDesc::upsample2());
        spec.layers.push_back(nn::LayerDesc::conv2d(c.filters, c.filters));
        spec.layers.push_back(nn::LayerDesc::relu());
    }
    spec.layers.push_back(nn::LayerDesc::conv2d(c.filters, 1, 1));
    spec.layers.push_back(nn::LayerDesc::sigmoid());
    return spec;
}

}  // namespace demandscope::seg
