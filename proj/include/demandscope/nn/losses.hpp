#pragma once

#include <cmath>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::nn {

template <typename T>
struct LossValue {
    double value = 0.0;
    Tensor<T> grad;   // w.r.t. the network output the loss was computed on
    int clamped = 0;  // probabilities that hit the log clamp
};

constexpr double kProbClamp = 1e-12;

// Sum over the batch of -log p(true class); mean reduction optional.
template <typename T>
LossValue<T> nll_loss(const Tensor<T>& probs, const std::vector<int>& labels, bool mean = false) {
    if (probs.ndim() != 2 || static_cast<size_t>(probs.shape[0]) != labels.size())
        throw ShapeMismatch("nll_loss: probs [N,K] and N labels required");
    const int n = probs.shape[0];
    const int k = probs.shape[1];
    LossValue<T> out;
    out.grad = Tensor<T>(probs.shape);
    const double scale = mean ? 1.0 / n : 1.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k) throw ShapeMismatch("nll_loss: label out of range");
        double p = static_cast<double>(probs.at2(i, y));
        if (p < kProbClamp) {
            p = kProbClamp;
            ++out.clamped;
        }
        out.value += -std::log(p) * scale;
        out.grad.at2(i, y) = static_cast<T>(-scale / p);
    }
    return out;
}

// Running sums for Eq-style soft IoU over any number of chunks; lets the
// training loop compute one batch-global loss from micro-batches.
struct JaccardStats {
    double inter = 0.0;     // sum of u*uhat
    double sum_true = 0.0;  // sum of u
    double sum_pred = 0.0;  // sum of uhat

    template <typename T>
    void accumulate(const Tensor<T>& pred, const Tensor<T>& truth) {
        if (!same_shape(pred.shape, truth.shape))
            throw ShapeMismatch("jaccard: pred/true shapes differ");
        for (int64_t i = 0; i < pred.size(); ++i) {
            const double u = static_cast<double>(truth.v[static_cast<size_t>(i)]);
            const double uh = static_cast<double>(pred.v[static_cast<size_t>(i)]);
            inter += u * uh;
            sum_true += u;
            sum_pred += uh;
        }
    }

    double loss(double eps) const {
        const double uni = sum_true + sum_pred - inter;
        return 1.0 - (inter + eps) / (uni + eps);
    }

    // dL/duhat_j = -(u_j*(U+eps) - (I+eps)*(1-u_j)) / (U+eps)^2
    template <typename T>
    void grad_into(const Tensor<T>& truth, double eps, Tensor<T>& grad) const {
        const double uni = sum_true + sum_pred - inter;
        const double d = uni + eps;
        const double num = inter + eps;
        grad = Tensor<T>(truth.shape);
        for (int64_t i = 0; i < truth.size(); ++i) {
            const double u = static_cast<double>(truth.v[static_cast<size_t>(i)]);
            grad.v[static_cast<size_t>(i)] = static_cast<T>(-(u * d - num * (1.0 - u)) / (d * d));
        }
    }
};

// 1 - (sum(u*uhat)+eps)/(sum(u)+sum(uhat)-sum(u*uhat)+eps), summed over every
// pixel of the batch.
template <typename T>
LossValue<T> jaccard_loss(const Tensor<T>& pred, const Tensor<T>& truth, double eps = 1e-6) {
    JaccardStats st;
    st.accumulate(pred, truth);
    LossValue<T> out;
    out.value = st.loss(eps);
    st.grad_into(truth, eps, out.grad);
    return out;
}

}  // namespace demandscope::nn
