#pragma once

#include <cmath>

#include "demandscope/nn/params.hpp"

namespace demandscope::nn {

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction; moment state lives in the store.
template <typename T>
void adam_step(ParameterStore<T>& ps, const Gradients<T>& grads, const AdamConfig& cfg = {}) {
    if (grads.g.size() != ps.arrays.size())
        throw ShapeMismatch("adam_step: gradient/parameter array count mismatch");
    ps.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(ps.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(ps.step));
    for (size_t a = 0; a < ps.arrays.size(); ++a) {
        auto& arr = ps.arrays[a];
        const auto& g = grads.g[a];
        if (g.size() != arr.w.size())
            throw ShapeMismatch("adam_step: gradient size mismatch in " + arr.name);
        for (size_t i = 0; i < arr.w.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            if (!std::isfinite(gi)) throw NonFiniteGradient("adam_step: " + arr.name);
            const double m = cfg.beta1 * static_cast<double>(arr.m[i]) + (1.0 - cfg.beta1) * gi;
            const double v =
                cfg.beta2 * static_cast<double>(arr.v[i]) + (1.0 - cfg.beta2) * gi * gi;
            arr.m[i] = static_cast<T>(m);
            arr.v[i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            arr.w[i] = static_cast<T>(static_cast<double>(arr.w[i]) -
                                      cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace demandscope::nn
