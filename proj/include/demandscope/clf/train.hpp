#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/augment.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/eval/metrics.hpp"
#include "demandscope/nn/adam.hpp"
#include "demandscope/nn/losses.hpp"
#include "demandscope/nn/network.hpp"
#include "demandscope/rng.hpp"

namespace demandscope::clf {

inline int label_to_int(TierLabel t) {
    if (t == TierLabel::Low) return 0;
    if (t == TierLabel::High) return 1;
    throw InvalidConfig("mid-tier label in a binary training set");
}

inline TierLabel int_to_label(int i) { return i == 0 ? TierLabel::Low : TierLabel::High; }

struct NllTrainConfig {
    int epochs = 100;
    double lr = 1e-5;
    int batch = 64;
    uint64_t seed = 0;
    bool augment = true;  // spatial inputs only; flat features pass through
    std::string history_csv;
};

struct HistoryRow {
    int epoch = 0;
    std::string split;  // "train" or "val"
    double loss = 0;    // mean per-sample negative log-likelihood
    double f1 = 0;
    std::optional<double> auc;
};

struct NllTrainResult {
    nn::ParameterStore<float> best_params;
    double best_val_f1 = -1;
    int best_epoch = -1;
    eval::EvalReport best_val_report;
    std::vector<HistoryRow> history;
};

namespace detail {

// One batched tensor from per-sample tensors (shapes all equal).
inline Tensor<float> stack(const std::vector<Tensor<float>>& xs, const std::vector<size_t>& idx,
                           size_t begin, size_t end) {
    const Tensor<float>& first = xs[idx[begin]];
    std::vector<int> shape = first.shape;
    shape.insert(shape.begin(), static_cast<int>(end - begin));
    Tensor<float> out(shape);
    const int64_t per = first.size();
    for (size_t i = begin; i < end; ++i)
        std::copy(xs[idx[i]].v.begin(), xs[idx[i]].v.end(),
                  out.v.begin() + static_cast<int64_t>(i - begin) * per);
    return out;
}

struct SplitEval {
    double mean_loss = 0;
    eval::EvalReport report;
    std::vector<eval::Prediction> predictions;
};

// Eval-mode forward in batches; loss is the per-sample mean NLL.
inline SplitEval evaluate_split(const nn::Network<float>& net,
                                const nn::ParameterStore<float>& ps,
                                const std::vector<Tensor<float>>& xs, const std::vector<int>& ys,
                                int batch) {
    SplitEval out;
    if (xs.empty()) return out;
    std::vector<size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::vector<TierLabel> labels;
    double loss_sum = 0;
    for (size_t b0 = 0; b0 < xs.size(); b0 += static_cast<size_t>(batch)) {
        const size_t b1 = std::min(xs.size(), b0 + static_cast<size_t>(batch));
        Tensor<float> x = stack(xs, idx, b0, b1);
        auto acts = net.forward(std::move(x), ps);
        const Tensor<float>& probs = acts.acts.back();
        std::vector<int> by(ys.begin() + static_cast<int64_t>(b0),
                            ys.begin() + static_cast<int64_t>(b1));
        loss_sum += nn::nll_loss(probs, by).value;
        for (size_t i = b0; i < b1; ++i) {
            const auto r = static_cast<int>(i - b0);
            out.predictions.push_back(eval::make_prediction(
                std::to_string(i), probs.at2(r, 0), probs.at2(r, 1)));
            labels.push_back(int_to_label(ys[i]));
        }
    }
    out.mean_loss = loss_sum / static_cast<double>(xs.size());
    out.report = eval::evaluate(out.predictions, labels);
    return out;
}

}  // namespace detail

// Minibatch NLL training of any chain network ending in softmax. Inputs are
// clean normalized tensors; augmentation (when on and the input is spatial)
// redraws a plan per sample per epoch. The best checkpoint is picked by
// validation macro F1, with the train set standing in when no validation set
// is given.
inline NllTrainResult train_softmax_net(const nn::NetworkSpec& spec,
                                        const std::vector<Tensor<float>>& train_x,
                                        const std::vector<int>& train_y,
                                        const std::vector<Tensor<float>>& val_x,
                                        const std::vector<int>& val_y,
                                        const NllTrainConfig& cfg = {},
                                        const nn::ParameterStore<float>* init_from = nullptr) {
    if (train_x.empty()) throw InvalidConfig("train_softmax_net: empty training set");
    if (train_x.size() != train_y.size() || val_x.size() != val_y.size())
        throw ShapeMismatch("train_softmax_net: input/label count mismatch");
    if (cfg.batch < 1) throw InvalidConfig("train_softmax_net: batch must be positive");
    nn::Network<float> net(spec);
    nn::ParameterStore<float> ps = init_from ? *init_from : net.init(cfg.seed);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    nn::Gradients<float> grads;

    const bool spatial = spec.input.size() == 3;
    const std::vector<Tensor<float>>& sel_x = val_x.empty() ? train_x : val_x;
    const std::vector<int>& sel_y = val_x.empty() ? train_y : val_y;

    NllTrainResult res;
    uint64_t step = 0;
    std::vector<size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, 0xc1a5u, static_cast<uint64_t>(epoch)));
        erng.shuffle(order);
        double loss_sum = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch)) {
            const size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(cfg.batch));
            Tensor<float> x;
            if (cfg.augment && spatial) {
                std::vector<Tensor<float>> aug;
                aug.reserve(b1 - b0);
                std::vector<size_t> local(b1 - b0);
                std::iota(local.begin(), local.end(), size_t{0});
                for (size_t i = b0; i < b1; ++i)
                    aug.push_back(
                        data::apply_augment(train_x[order[i]], data::random_augment_plan(erng)));
                x = detail::stack(aug, local, 0, aug.size());
            } else {
                x = detail::stack(train_x, order, b0, b1);
            }
            std::vector<int> by;
            by.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) by.push_back(train_y[order[i]]);

            const nn::FwdContext ctx{true, derive_seed(cfg.seed, 0xd407u, step)};
            auto acts = net.forward(std::move(x), ps, ctx);
            auto loss = nn::nll_loss(acts.acts.back(), by);
            if (!std::isfinite(loss.value))
                throw Divergence("classification loss is not finite at epoch " +
                                 std::to_string(epoch));
            loss_sum += loss.value;
            grads.zero_like(ps);
            net.backward(acts, std::move(loss.grad), ps, &grads, ctx);
            nn::adam_step(ps, grads, adam);
            ++step;
        }

        detail::SplitEval tr = detail::evaluate_split(net, ps, train_x, train_y, cfg.batch);
        detail::SplitEval se = detail::evaluate_split(net, ps, sel_x, sel_y, cfg.batch);
        res.history.push_back({epoch, "train", loss_sum / static_cast<double>(train_x.size()),
                               tr.report.macro_f1, tr.report.auc});
        res.history.push_back({epoch, "val", se.mean_loss, se.report.macro_f1, se.report.auc});
        if (se.report.macro_f1 > res.best_val_f1) {
            res.best_val_f1 = se.report.macro_f1;
            res.best_epoch = epoch;
            res.best_params = ps;
            res.best_val_report = se.report;
        }
    }

    if (cfg.epochs == 0) {
        detail::SplitEval se = detail::evaluate_split(net, ps, sel_x, sel_y, cfg.batch);
        res.best_params = ps;
        res.best_epoch = 0;
        res.best_val_f1 = se.report.macro_f1;
        res.best_val_report = se.report;
    }

    if (!cfg.history_csv.empty()) {
        data::CsvWriter w(cfg.history_csv);
        w.row({"epoch", "split", "loss", "f1", "auc"});
        for (const auto& h : res.history)
            w.row({std::to_string(h.epoch), h.split, data::num(h.loss), data::num(h.f1),
                   h.auc ? data::num(*h.auc) : ""});
        w.close();
    }
    return res;
}

}  // namespace demandscope::clf
