#pragma once

#include <cmath>

#include "demandscope/data/normalize.hpp"
#include "demandscope/nn/network.hpp"
#include "demandscope/seg/model.hpp"

namespace demandscope::seg {

struct PointIndicator {
    int row = 0;
    int col = 0;
};

constexpr double kPointerSigma = 2.0;

// Gaussian bump with peak 1 at the indicated pixel, strictly decreasing with
// distance; written into `plane` (size x size).
template <typename T>
void pointer_channel_into(T* plane, int size, PointIndicator pt, double sigma = kPointerSigma) {
    if (pt.row < 0 || pt.row >= size || pt.col < 0 || pt.col >= size)
        throw OutOfBounds("point indicator outside the patch");
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d2 = static_cast<double>(y - pt.row) * (y - pt.row) +
                              static_cast<double>(x - pt.col) * (x - pt.col);
            plane[static_cast<size_t>(y) * size + x] = static_cast<T>(std::exp(-d2 * inv));
        }
}

// Normalized RGB channels plus the pointer bump: the 4-channel input of the
// pointer-conditioned segmenter.
inline Tensor<float> make_pointer_input(const data::ImagePatch& patch,
                                        const data::ChannelStats& st, PointIndicator pt) {
    const int s = patch.size;
    Tensor<float> rgb = data::normalize_patch(patch, st);
    Tensor<float> out({4, s, s});
    std::copy(rgb.v.begin(), rgb.v.end(), out.v.begin());
    pointer_channel_into(out.v.data() + static_cast<size_t>(3) * s * s, s, pt);
    return out;
}

// Mask of the single indicated building. Throws EmptyMask when no pixel
// clears the threshold; callers fall back to a 3x3 neighborhood around the
// point.
struct EmptyMask : Error {
    explicit EmptyMask(const std::string& msg) : Error("EmptyMask: " + msg) {}
};

inline std::vector<uint8_t> pointer_segment(const nn::Network<float>& net,
                                            const nn::ParameterStore<float>& ps,
                                            const data::ChannelStats& st,
                                            const data::ImagePatch& patch, PointIndicator pt,
                                            double threshold = 0.5) {
    if (net.spec().input[0] != 4)
        throw InvalidConfig("pointer_segment needs a 4-channel checkpoint");
    Tensor<float> x = make_pointer_input(patch, st, pt);
    x.shape.insert(x.shape.begin(), 1);
    auto acts = net.forward(std::move(x), ps);
    const Tensor<float>& pred = acts.acts.back();
    std::vector<uint8_t> mask(static_cast<size_t>(patch.size) * patch.size, 0);
    bool any = false;
    for (size_t i = 0; i < mask.size(); ++i) {
        mask[i] = pred.v[i] > threshold ? 1 : 0;
        any = any || mask[i];
    }
    if (!any)
        throw EmptyMask("no pixel above " + std::to_string(threshold) + " at (" +
                        std::to_string(pt.row) + "," + std::to_string(pt.col) + ")");
    return mask;
}

// 3x3 neighborhood fallback mask used when the segmenter declines the point.
inline std::vector<uint8_t> neighborhood_mask(int size, PointIndicator pt) {
    std::vector<uint8_t> mask(static_cast<size_t>(size) * size, 0);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int y = pt.row + dy, x = pt.col + dx;
            if (y >= 0 && y < size && x >= 0 && x < size)
                mask[static_cast<size_t>(y) * size + x] = 1;
        }
    return mask;
}

}  // namespace demandscope::seg
