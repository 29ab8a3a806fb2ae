#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "demandscope/nn/losses.hpp"
#include "demandscope/nn/network.hpp"
#include "demandscope/rng.hpp"

namespace demandscope::nn {

enum class CheckLoss {
    WeightedSum,    // L = sum(c .* y) with fixed random c; exercises any output shape
    NllOnProbs,     // softmax tail expected
    JaccardOnPred,  // sigmoid tail expected
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t n_checked = 0;
    int64_t n_kink_skipped = 0;
    std::string worst;

    bool pass(double tol = 1e-4) const { return n_checked > 0 && max_rel_err <= tol; }
};

namespace detail {
inline double rel_err(double a, double b) {
    const double scale = std::max({1e-6, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}
}  // namespace detail

// Central finite differences against the analytic backward pass, double
// precision, eval mode. Coordinates sitting on a relu/maxpool kink are
// detected by their exploded curvature estimate and resampled.
inline GradCheckReport grad_check(const NetworkSpec& spec, uint64_t seed,
                                  CheckLoss loss_kind = CheckLoss::WeightedSum,
                                  int per_array = 25, bool check_input = true, int batch = 2) {
    Network<double> net(spec);
    ParameterStore<double> ps = net.init(derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));

    Tensor<double> x(with_batch(batch, spec.input));
    for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);

    const ActShape out_shape = net.output_shape();

    std::vector<int> labels(static_cast<size_t>(batch));
    Tensor<double> truth, weights;
    if (loss_kind == CheckLoss::NllOnProbs) {
        for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<uint64_t>(out_shape[0])));
    } else if (loss_kind == CheckLoss::JaccardOnPred) {
        truth = Tensor<double>(with_batch(batch, out_shape));
        for (auto& v : truth.v) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else {
        weights = Tensor<double>(with_batch(batch, out_shape));
        for (auto& v : weights.v) v = rng.uniform(-1.0, 1.0);
    }

    auto loss_of = [&](const Tensor<double>& out) -> LossValue<double> {
        switch (loss_kind) {
            case CheckLoss::NllOnProbs:
                return nll_loss(out, labels);
            case CheckLoss::JaccardOnPred:
                return jaccard_loss(out, truth);
            case CheckLoss::WeightedSum: {
                LossValue<double> lv;
                lv.grad = weights;
                for (int64_t i = 0; i < out.size(); ++i)
                    lv.value += weights.v[static_cast<size_t>(i)] * out.v[static_cast<size_t>(i)];
                return lv;
            }
        }
        throw InvalidConfig("unreachable");
    };

    auto eval = [&]() {
        auto acts = net.forward(x, ps);
        return loss_of(acts.acts.back()).value;
    };

    // analytic gradients
    auto acts = net.forward(x, ps);
    LossValue<double> lv = loss_of(acts.acts.back());
    Gradients<double> grads;
    grads.zero_like(ps);
    Tensor<double> dx_analytic =
        net.backward(acts, lv.grad, ps, &grads, {}, -1, -1, check_input);
    const double l0 = lv.value;

    GradCheckReport rep;
    auto check_coord = [&](double& w, double analytic, const std::string& desc) {
        const double h = 1e-5 * (1.0 + std::abs(w));
        const double w0 = w;
        w = w0 + h;
        const double lp = eval();
        w = w0 - h;
        const double lm = eval();
        w = w0;
        const double fd = (lp - lm) / (2.0 * h);
        // The centered second difference is ~h^2*f'' at smooth points but
        // ~h*|slope jump| across a relu/maxpool kink; a huge value flags the
        // coordinate as kink-contaminated.
        const double curv = std::abs(lp + lm - 2.0 * l0);
        if (curv > 1e3 * h * h * (1.0 + std::abs(fd))) {
            ++rep.n_kink_skipped;
            return;
        }
        const double e = detail::rel_err(analytic, fd);
        ++rep.n_checked;
        if (e > rep.max_rel_err) {
            rep.max_rel_err = e;
            rep.worst = desc + " analytic=" + std::to_string(analytic) +
                        " fd=" + std::to_string(fd);
        }
    };

    Rng pick(derive_seed(seed, 3));
    for (size_t a = 0; a < ps.arrays.size(); ++a) {
        auto& arr = ps.arrays[a];
        const int64_t n = arr.size();
        const int k = static_cast<int>(std::min<int64_t>(per_array, n));
        for (int t = 0; t < k; ++t) {
            const size_t i = static_cast<size_t>(pick.below(static_cast<uint64_t>(n)));
            check_coord(arr.w[i], grads.g[a][i], arr.name + "[" + std::to_string(i) + "]");
        }
    }
    if (check_input) {
        const int k = static_cast<int>(std::min<int64_t>(per_array, x.size()));
        for (int t = 0; t < k; ++t) {
            const size_t i = static_cast<size_t>(pick.below(static_cast<uint64_t>(x.size())));
            check_coord(x.v[i], dx_analytic.v[i], "input[" + std::to_string(i) + "]");
        }
    }
    return rep;
}

}  // namespace demandscope::nn
