#pragma once

#include <cstdint>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::seg {

// Intersection over union after binarizing the prediction; two empty masks
// count as a perfect match.
template <typename T>
double iou(const T* pred, const uint8_t* truth, int64_t n, double threshold = 0.5) {
    int64_t inter = 0, uni = 0;
    for (int64_t i = 0; i < n; ++i) {
        const bool p = static_cast<double>(pred[i]) > threshold;
        const bool t = truth[i] != 0;
        inter += p && t;
        uni += p || t;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

template <typename T>
double iou(const Tensor<T>& pred, const std::vector<uint8_t>& truth, double threshold = 0.5) {
    if (pred.size() != static_cast<int64_t>(truth.size()))
        throw ShapeMismatch("iou: mask sizes differ");
    return iou(pred.v.data(), truth.data(), pred.size(), threshold);
}

inline double iou_binary(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("iou: mask sizes differ");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += a[i] && b[i];
        uni += a[i] || b[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace demandscope::seg
