#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "demandscope/data/augment.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/data/normalize.hpp"
#include "demandscope/nn/adam.hpp"
#include "demandscope/nn/losses.hpp"
#include "demandscope/nn/network.hpp"
#include "demandscope/rng.hpp"
#include "demandscope/seg/iou.hpp"
#include "demandscope/seg/pointer.hpp"

namespace demandscope::seg {

struct SegExample {
    data::ImagePatch patch;
    std::vector<uint8_t> mask;      // patch.size^2 values in {0,1}
    PointIndicator point{-1, -1};   // consumed only by 4-channel specs
};

struct SegTrainConfig {
    int epochs = 30;
    double lr = 1e-5;
    int batch = 64;
    uint64_t seed = 0;
    bool augment = true;
    double min_coverage = 0.0;  // train patches below this footprint fraction are dropped
    double eps = 1e-6;
    std::string history_csv;  // per-epoch log written here when non-empty
};

struct SegEpochStats {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double val_iou = 0;
};

struct SegTrainResult {
    nn::ParameterStore<float> best_params;
    data::ChannelStats stats;
    double best_val_iou = -1;
    int best_epoch = -1;
    std::vector<SegEpochStats> history;
};

namespace detail {

inline double coverage(const std::vector<uint8_t>& mask) {
    int64_t on = 0;
    for (uint8_t v : mask) on += v;
    return mask.empty() ? 0.0 : static_cast<double>(on) / static_cast<double>(mask.size());
}

inline Tensor<float> seg_input(const SegExample& ex, const data::ChannelStats& st,
                               int in_channels) {
    if (in_channels == 4) return make_pointer_input(ex.patch, st, ex.point);
    return data::normalize_patch(ex.patch, st);
}

inline Tensor<float> mask_tensor(const SegExample& ex) {
    const int s = ex.patch.size;
    Tensor<float> m({1, s, s});
    for (size_t i = 0; i < ex.mask.size(); ++i) m.v[i] = static_cast<float>(ex.mask[i]);
    return m;
}

// Adapter so channel statistics can be computed straight off seg examples.
struct PatchesOf {
    const std::vector<const SegExample*>& v;
    struct It {
        const SegExample* const* p;
        const data::ImagePatch& operator*() const { return (*p)->patch; }
        It& operator++() {
            ++p;
            return *this;
        }
        bool operator!=(const It& o) const { return p != o.p; }
    };
    It begin() const { return {v.data()}; }
    It end() const { return {v.data() + v.size()}; }
};

}  // namespace detail

struct SegEvalResult {
    double loss = 0;
    double mean_iou = 0;
};

// Batch-global Jaccard loss plus mean per-sample IOU over a whole set.
inline SegEvalResult evaluate_segmenter(const nn::Network<float>& net,
                                        const nn::ParameterStore<float>& ps,
                                        const data::ChannelStats& st,
                                        const std::vector<SegExample>& set, double eps = 1e-6) {
    SegEvalResult out;
    if (set.empty()) return out;
    nn::JaccardStats js;
    double iou_sum = 0;
    const int in_ch = net.spec().input[0];
    for (const auto& ex : set) {
        Tensor<float> x = detail::seg_input(ex, st, in_ch);
        x.shape.insert(x.shape.begin(), 1);
        auto acts = net.forward(std::move(x), ps);
        const Tensor<float>& pred = acts.acts.back();
        Tensor<float> m = detail::mask_tensor(ex);
        m.shape.insert(m.shape.begin(), 1);
        js.accumulate(pred, m);
        iou_sum += iou(pred.v.data(), ex.mask.data(), pred.size());
    }
    out.loss = js.loss(eps);
    out.mean_iou = iou_sum / static_cast<double>(set.size());
    return out;
}

// Two passes per batch: the first collects the batch-global Jaccard sums, the
// second recomputes activations per sample and backpropagates its slice of
// the shared gradient. Best checkpoint is chosen by validation IOU; an empty
// validation set makes the train set double as the selection set.
inline SegTrainResult train_segmenter(const nn::NetworkSpec& spec,
                                      const std::vector<SegExample>& train,
                                      const std::vector<SegExample>& val,
                                      const SegTrainConfig& cfg = {},
                                      const nn::ParameterStore<float>* init_from = nullptr) {
    if (train.empty()) throw InvalidConfig("train_segmenter: empty training set");
    if (cfg.batch < 1) throw InvalidConfig("train_segmenter: batch must be positive");
    nn::Network<float> net(spec);
    const int in_ch = spec.input[0];

    std::vector<const SegExample*> pool;
    for (const auto& e : train)
        if (detail::coverage(e.mask) >= cfg.min_coverage) pool.push_back(&e);
    if (pool.empty()) throw InvalidConfig("train_segmenter: coverage filter removed every patch");

    SegTrainResult res;
    res.stats = data::compute_channel_stats(detail::PatchesOf{pool});

    nn::ParameterStore<float> ps = init_from ? *init_from : net.init(cfg.seed);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    nn::Gradients<float> grads;

    const std::vector<SegExample>& selection = val.empty() ? train : val;
    uint64_t step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, 0x5e90u, static_cast<uint64_t>(epoch)));
        std::vector<size_t> order(pool.size());
        std::iota(order.begin(), order.end(), size_t{0});
        erng.shuffle(order);

        double loss_sum = 0;
        int n_batches = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch)) {
            const size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(cfg.batch));
            std::vector<Tensor<float>> xs, ms;
            xs.reserve(b1 - b0);
            ms.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) {
                const SegExample& ex = *pool[order[i]];
                Tensor<float> x = detail::seg_input(ex, res.stats, in_ch);
                Tensor<float> m = detail::mask_tensor(ex);
                if (cfg.augment) {
                    const data::AugmentPlan plan = data::random_augment_plan(erng);
                    x = data::apply_augment(x, plan);
                    m = data::apply_augment_nearest(m, plan);
                }
                x.shape.insert(x.shape.begin(), 1);
                m.shape.insert(m.shape.begin(), 1);
                xs.push_back(std::move(x));
                ms.push_back(std::move(m));
            }

            const nn::FwdContext ctx{true, derive_seed(cfg.seed, 0xd407u, step)};
            nn::JaccardStats js;
            for (size_t k = 0; k < xs.size(); ++k) {
                auto acts = net.forward(xs[k], ps, ctx);
                js.accumulate(acts.acts.back(), ms[k]);
            }
            const double batch_loss = js.loss(cfg.eps);
            if (!std::isfinite(batch_loss))
                throw Divergence("segmentation loss is not finite at epoch " +
                                 std::to_string(epoch));
            loss_sum += batch_loss;
            ++n_batches;

            grads.zero_like(ps);
            for (size_t k = 0; k < xs.size(); ++k) {
                auto acts = net.forward(xs[k], ps, ctx);
                Tensor<float> g;
                js.grad_into(ms[k], cfg.eps, g);
                net.backward(acts, std::move(g), ps, &grads, ctx);
            }
            nn::adam_step(ps, grads, adam);
            ++step;
        }

        const SegEvalResult ev = evaluate_segmenter(net, ps, res.stats, selection, cfg.eps);
        SegEpochStats row;
        row.epoch = epoch;
        row.train_loss = loss_sum / std::max(1, n_batches);
        row.val_loss = ev.loss;
        row.val_iou = ev.mean_iou;
        res.history.push_back(row);
        if (ev.mean_iou > res.best_val_iou) {
            res.best_val_iou = ev.mean_iou;
            res.best_epoch = epoch;
            res.best_params = ps;
        }
    }

    if (cfg.epochs == 0) {
        res.best_params = ps;
        res.best_epoch = 0;
        res.best_val_iou = evaluate_segmenter(net, ps, res.stats, selection, cfg.eps).mean_iou;
    }

    if (!cfg.history_csv.empty()) {
        data::CsvWriter w(cfg.history_csv);
        w.row({"epoch", "train_loss", "val_loss", "val_iou"});
        for (const auto& h : res.history)
            w.row({std::to_string(h.epoch), data::num(h.train_loss), data::num(h.val_loss),
                   data::num(h.val_iou)});
        w.close();
    }
    return res;
}

// Continues training from an existing checkpoint at the same learning rate;
// zero epochs returns the weights untouched.
inline SegTrainResult finetune_pointer(const nn::NetworkSpec& spec,
                                       const nn::ParameterStore<float>& base,
                                       const std::vector<SegExample>& train,
                                       const std::vector<SegExample>& val,
                                       const SegTrainConfig& cfg = {}) {
    return train_segmenter(spec, train, val, cfg, &base);
}

}  // namespace demandscope::seg
