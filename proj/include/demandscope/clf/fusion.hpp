#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "demandscope/baselines/mlp.hpp"
#include "demandscope/clf/model.hpp"
#include "demandscope/clf/train.hpp"
#include "demandscope/nn/checkpoint.hpp"
#include "demandscope/seg/model.hpp"

namespace demandscope::clf {

// Image encoder and tabular trunk meet in a late-fusion head: pooled encoder
// features (filters wide) concatenated with the 16-wide trunk output feed one
// dense layer and a softmax. Zeroing the head weights of the tabular columns
// makes the model a pure function of the image.
struct FusionConfig {
    seg::EncoderConfig encoder;
    int tabular_dim = 18;  // 17 census fractions + nightlight radiance
    double dropout_rate = 0.25;
    int n_classes = 2;
};

struct FusionSpec {
    nn::NetworkSpec image;    // encoder + global max pool + dropout -> [filters]
    nn::NetworkSpec tabular;  // mlp trunk -> [16]
    nn::NetworkSpec head;     // dense(filters+16 -> n_classes) + softmax
};

inline FusionSpec build_fusion(const FusionConfig& cfg) {
    if (cfg.encoder.in_channels != 3)
        throw InvalidConfig("fusion image branch expects 3-channel patches");
    if (cfg.tabular_dim < 1) throw InvalidConfig("fusion tabular dim must be positive");
    if (cfg.n_classes < 2) throw InvalidConfig("fusion needs at least two classes");
    FusionSpec fs;
    fs.image = seg::build_encoder(cfg.encoder);
    fs.image.layers.push_back(nn::LayerDesc::global_maxpool());
    fs.image.layers.push_back(nn::LayerDesc::dropout(cfg.dropout_rate));
    fs.tabular = baselines::build_mlp_trunk(cfg.tabular_dim, cfg.dropout_rate);
    const int fused = cfg.encoder.filters + 16;
    fs.head.input = {fused};
    fs.head.layers.push_back(nn::LayerDesc::dense(fused, cfg.n_classes));
    fs.head.layers.push_back(nn::LayerDesc::softmax());
    return fs;
}

struct FusionParams {
    nn::ParameterStore<float> image;
    nn::ParameterStore<float> tabular;
    nn::ParameterStore<float> head;
};

inline FusionParams init_fusion(const FusionSpec& fs, uint64_t seed) {
    FusionParams p;
    p.image = nn::init_params<float>(fs.image, derive_seed(seed, 0xf051u, 0));
    p.tabular = nn::init_params<float>(fs.tabular, derive_seed(seed, 0xf051u, 1));
    p.head = nn::init_params<float>(fs.head, derive_seed(seed, 0xf051u, 2));
    return p;
}

namespace detail {

inline void copy_named_arrays(nn::ParameterStore<float>& dst,
                              const nn::ParameterStore<float>& src, const char* what) {
    for (auto& arr : dst.arrays) {
        const nn::ParamArray<float>* s = nullptr;
        for (const auto& cand : src.arrays)
            if (cand.name == arr.name) {
                s = &cand;
                break;
            }
        if (!s) throw ShapeMismatch(std::string(what) + " checkpoint lacks array " + arr.name);
        if (s->shape != arr.shape)
            throw ShapeMismatch(std::string(what) + " array " + arr.name + " has wrong shape");
        arr.w = s->w;
    }
}

}  // namespace detail

// Branch weights lifted from pretraining; the head always starts random. The
// image branch takes the segmentation encoder, the tabular branch optionally
// takes an already-trained MLP trunk (its layer names are a prefix of the
// full MLP's, so arrays match by name).
inline FusionParams init_fusion_pretrained(const FusionSpec& fs,
                                           const nn::ParameterStore<float>& seg_params,
                                           const nn::ParameterStore<float>* mlp_params,
                                           uint64_t seed) {
    FusionParams p = init_fusion(fs, seed);
    detail::copy_named_arrays(p.image, seg_params, "segmentation");
    if (mlp_params) detail::copy_named_arrays(p.tabular, *mlp_params, "mlp");
    return p;
}

struct FusionNets {
    nn::Network<float> image;
    nn::Network<float> tabular;
    nn::Network<float> head;
    explicit FusionNets(const FusionSpec& fs) : image(fs.image), tabular(fs.tabular), head(fs.head) {}
};

namespace detail {

inline Tensor<float> concat_cols(const Tensor<float>& a, const Tensor<float>& b) {
    const int n = a.shape[0];
    const int ca = a.shape[1], cb = b.shape[1];
    Tensor<float> out({n, ca + cb});
    for (int i = 0; i < n; ++i) {
        std::copy_n(a.v.begin() + static_cast<int64_t>(i) * ca, ca,
                    out.v.begin() + static_cast<int64_t>(i) * (ca + cb));
        std::copy_n(b.v.begin() + static_cast<int64_t>(i) * cb, cb,
                    out.v.begin() + static_cast<int64_t>(i) * (ca + cb) + ca);
    }
    return out;
}

inline std::pair<Tensor<float>, Tensor<float>> split_cols(const Tensor<float>& x, int ca) {
    const int n = x.shape[0];
    const int cb = x.shape[1] - ca;
    Tensor<float> a({n, ca}), b({n, cb});
    for (int i = 0; i < n; ++i) {
        std::copy_n(x.v.begin() + static_cast<int64_t>(i) * (ca + cb), ca,
                    a.v.begin() + static_cast<int64_t>(i) * ca);
        std::copy_n(x.v.begin() + static_cast<int64_t>(i) * (ca + cb) + ca, cb,
                    b.v.begin() + static_cast<int64_t>(i) * cb);
    }
    return {std::move(a), std::move(b)};
}

struct FusionActs {
    nn::Activations<float> image;
    nn::Activations<float> tabular;
    nn::Activations<float> head;
};

inline FusionActs fusion_forward(const FusionNets& nets, const FusionParams& p,
                                 Tensor<float> x_img, Tensor<float> x_tab,
                                 const nn::FwdContext& img_ctx = {},
                                 const nn::FwdContext& tab_ctx = {}) {
    FusionActs a;
    a.image = nets.image.forward(std::move(x_img), p.image, img_ctx);
    a.tabular = nets.tabular.forward(std::move(x_tab), p.tabular, tab_ctx);
    Tensor<float> fused = concat_cols(a.image.acts.back(), a.tabular.acts.back());
    a.head = nets.head.forward(std::move(fused), p.head);
    return a;
}

}  // namespace detail

// Eval-mode class probabilities for one batch of raw inputs [N,3,S,S] and
// [N,tabular_dim], already normalized.
inline Tensor<float> fusion_probs(const FusionNets& nets, const FusionParams& p,
                                  Tensor<float> x_img, Tensor<float> x_tab) {
    return detail::fusion_forward(nets, p, std::move(x_img), std::move(x_tab))
        .head.acts.back();
}

struct FusionStats {
    data::ChannelStats image;
    data::FeatureStats tabular;
};

struct FusionTrainResult {
    FusionParams best_params;
    FusionStats stats;
    double best_val_f1 = -1;
    int best_epoch = -1;
    eval::EvalReport best_val_report;
    std::vector<HistoryRow> history;
};

namespace detail {

struct FusionSplitEval {
    double mean_loss = 0;
    eval::EvalReport report;
};

inline FusionSplitEval fusion_evaluate(const FusionNets& nets, const FusionParams& p,
                                       const std::vector<Tensor<float>>& img,
                                       const std::vector<Tensor<float>>& tab,
                                       const std::vector<int>& ys, int batch) {
    FusionSplitEval out;
    if (img.empty()) return out;
    std::vector<size_t> idx(img.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::vector<eval::Prediction> preds;
    std::vector<TierLabel> labels;
    double loss_sum = 0;
    for (size_t b0 = 0; b0 < img.size(); b0 += static_cast<size_t>(batch)) {
        const size_t b1 = std::min(img.size(), b0 + static_cast<size_t>(batch));
        Tensor<float> probs = fusion_probs(nets, p, stack(img, idx, b0, b1),
                                           stack(tab, idx, b0, b1));
        std::vector<int> by(ys.begin() + static_cast<int64_t>(b0),
                            ys.begin() + static_cast<int64_t>(b1));
        loss_sum += nn::nll_loss(probs, by).value;
        for (size_t i = b0; i < b1; ++i) {
            const auto r = static_cast<int>(i - b0);
            preds.push_back(eval::make_prediction(std::to_string(i), probs.at2(r, 0),
                                                  probs.at2(r, 1)));
            labels.push_back(int_to_label(ys[i]));
        }
    }
    out.mean_loss = loss_sum / static_cast<double>(img.size());
    out.report = eval::evaluate(preds, labels);
    return out;
}

}  // namespace detail

// Joint fine-tune of both branches and the head under one NLL objective.
// The head's input gradient is split column-wise and pushed down each branch;
// all three stores take an optimizer step every minibatch.
inline FusionTrainResult train_fusion(const FusionSpec& fs, FusionParams init,
                                      const std::vector<Tensor<float>>& train_img,
                                      const std::vector<Tensor<float>>& train_tab,
                                      const std::vector<int>& train_y,
                                      const std::vector<Tensor<float>>& val_img,
                                      const std::vector<Tensor<float>>& val_tab,
                                      const std::vector<int>& val_y,
                                      const NllTrainConfig& cfg = {}) {
    if (train_img.empty()) throw InvalidConfig("train_fusion: empty training set");
    if (train_img.size() != train_tab.size() || train_img.size() != train_y.size() ||
        val_img.size() != val_tab.size() || val_img.size() != val_y.size())
        throw ShapeMismatch("train_fusion: input/label count mismatch");
    if (cfg.batch < 1) throw InvalidConfig("train_fusion: batch must be positive");

    FusionNets nets(fs);
    FusionParams p = std::move(init);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    nn::Gradients<float> g_img, g_tab, g_head;
    const int img_width = fs.head.input[0] - 16;

    const auto& sel_img = val_img.empty() ? train_img : val_img;
    const auto& sel_tab = val_img.empty() ? train_tab : val_tab;
    const auto& sel_y = val_img.empty() ? train_y : val_y;

    FusionTrainResult res;
    uint64_t step = 0;
    std::vector<size_t> order(train_img.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, 0xc1a5u, static_cast<uint64_t>(epoch)));
        erng.shuffle(order);
        double loss_sum = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch)) {
            const size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(cfg.batch));
            Tensor<float> xi;
            if (cfg.augment) {
                std::vector<Tensor<float>> aug;
                aug.reserve(b1 - b0);
                std::vector<size_t> local(b1 - b0);
                std::iota(local.begin(), local.end(), size_t{0});
                for (size_t i = b0; i < b1; ++i)
                    aug.push_back(data::apply_augment(train_img[order[i]],
                                                      data::random_augment_plan(erng)));
                xi = detail::stack(aug, local, 0, aug.size());
            } else {
                xi = detail::stack(train_img, order, b0, b1);
            }
            Tensor<float> xt = detail::stack(train_tab, order, b0, b1);
            std::vector<int> by;
            by.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) by.push_back(train_y[order[i]]);

            const nn::FwdContext img_ctx{true, derive_seed(cfg.seed, 0xd407u, step)};
            const nn::FwdContext tab_ctx{true, derive_seed(cfg.seed, 0x7ab0u, step)};
            auto acts = detail::fusion_forward(nets, p, std::move(xi), std::move(xt),
                                               img_ctx, tab_ctx);
            auto loss = nn::nll_loss(acts.head.acts.back(), by);
            if (!std::isfinite(loss.value))
                throw Divergence("fusion loss is not finite at epoch " + std::to_string(epoch));
            loss_sum += loss.value;

            g_img.zero_like(p.image);
            g_tab.zero_like(p.tabular);
            g_head.zero_like(p.head);
            Tensor<float> dcat = nets.head.backward(acts.head, std::move(loss.grad), p.head,
                                                    &g_head, {}, -1, -1, true);
            auto [d_img, d_tab] = detail::split_cols(dcat, img_width);
            nets.image.backward(acts.image, std::move(d_img), p.image, &g_img, img_ctx);
            nets.tabular.backward(acts.tabular, std::move(d_tab), p.tabular, &g_tab, tab_ctx);
            nn::adam_step(p.image, g_img, adam);
            nn::adam_step(p.tabular, g_tab, adam);
            nn::adam_step(p.head, g_head, adam);
            ++step;
        }

        detail::FusionSplitEval tr =
            detail::fusion_evaluate(nets, p, train_img, train_tab, train_y, cfg.batch);
        detail::FusionSplitEval se =
            detail::fusion_evaluate(nets, p, sel_img, sel_tab, sel_y, cfg.batch);
        res.history.push_back({epoch, "train", loss_sum / static_cast<double>(train_img.size()),
                               tr.report.macro_f1, tr.report.auc});
        res.history.push_back({epoch, "val", se.mean_loss, se.report.macro_f1, se.report.auc});
        if (se.report.macro_f1 > res.best_val_f1) {
            res.best_val_f1 = se.report.macro_f1;
            res.best_epoch = epoch;
            res.best_params = p;
            res.best_val_report = se.report;
        }
    }

    if (cfg.epochs == 0) {
        detail::FusionSplitEval se =
            detail::fusion_evaluate(nets, p, sel_img, sel_tab, sel_y, cfg.batch);
        res.best_params = p;
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

namespace detail {

struct FusionInputs {
    std::vector<data::ImagePatch> patches;
    std::vector<std::vector<double>> raw_tab;
    std::vector<int> labels;
    std::vector<std::string> ids;
    int skipped = 0;
};

inline FusionInputs collect_fusion_inputs(const std::vector<data::Sample>& samples) {
    FusionInputs in;
    for (const auto& s : samples) {
        if (s.label == TierLabel::ExcludedMid) continue;
        if (!s.census || !s.nightlight) {
            ++in.skipped;
            continue;
        }
        std::vector<double> row(s.census->begin(), s.census->end());
        row.push_back(*s.nightlight);
        in.raw_tab.push_back(std::move(row));
        in.labels.push_back(label_to_int(s.label));
        in.ids.push_back(s.building_id);
        in.patches.push_back(s.patch);
    }
    return in;
}

}  // namespace detail

// End-to-end fusion training from samples: normalization statistics come from
// the training split only, then the joint loop runs on tensors. Samples
// missing census or nightlight covariates are dropped.
inline FusionTrainResult train_fusion_classifier(
    const FusionConfig& cfg, const std::vector<data::Sample>& train,
    const std::vector<data::Sample>& val, const NllTrainConfig& tc,
    const nn::ParameterStore<float>* seg_init = nullptr,
    const nn::ParameterStore<float>* mlp_init = nullptr) {
    const FusionSpec fs = build_fusion(cfg);
    detail::FusionInputs ti = detail::collect_fusion_inputs(train);
    detail::FusionInputs vi = detail::collect_fusion_inputs(val);
    if (ti.patches.empty()) throw InvalidConfig("fusion training set is empty");

    FusionStats stats;
    stats.image = data::compute_channel_stats(ti.patches);
    stats.tabular = data::compute_feature_stats(ti.raw_tab);
    auto to_img = [&stats](const std::vector<data::ImagePatch>& ps) {
        std::vector<Tensor<float>> xs;
        xs.reserve(ps.size());
        for (const auto& p : ps) xs.push_back(data::normalize_patch(p, stats.image));
        return xs;
    };
    auto to_tab = [&stats](const std::vector<std::vector<double>>& rows) {
        return baselines::detail::feature_tensors(rows, stats.tabular);
    };

    FusionParams p0 = init_fusion(fs, tc.seed);
    if (seg_init) detail::copy_named_arrays(p0.image, *seg_init, "segmentation");
    if (mlp_init) detail::copy_named_arrays(p0.tabular, *mlp_init, "mlp");
    FusionTrainResult res =
        train_fusion(fs, std::move(p0), to_img(ti.patches), to_tab(ti.raw_tab), ti.labels,
                     to_img(vi.patches), to_tab(vi.raw_tab), vi.labels, tc);
    res.stats = stats;
    return res;
}

// Probability pair for one household.
inline std::array<double, 2> fusion_predict_one(const FusionNets& nets, const FusionParams& p,
                                                const FusionStats& st,
                                                const data::ImagePatch& patch,
                                                const std::vector<double>& features) {
    Tensor<float> xi = data::normalize_patch(patch, st.image);
    xi.shape.insert(xi.shape.begin(), 1);
    const std::vector<double> z = data::normalize_features(features, st.tabular);
    Tensor<float> xt({1, static_cast<int>(z.size())});
    for (size_t i = 0; i < z.size(); ++i) xt.v[i] = static_cast<float>(z[i]);
    Tensor<float> probs = fusion_probs(nets, p, std::move(xi), std::move(xt));
    return {static_cast<double>(probs.v[0]), static_cast<double>(probs.v[1])};
}

inline void save_fusion_checkpoint(const std::string& prefix, const FusionSpec& fs,
                                   const FusionParams& p) {
    nn::save_checkpoint(prefix + ".image.ckpt", fs.image, p.image);
    nn::save_checkpoint(prefix + ".tabular.ckpt", fs.tabular, p.tabular);
    nn::save_checkpoint(prefix + ".head.ckpt", fs.head, p.head);
}

struct FusionCheckpoint {
    FusionSpec spec;
    FusionParams params;
};

inline FusionCheckpoint load_fusion_checkpoint(const std::string& prefix) {
    FusionCheckpoint c;
    auto img = nn::load_checkpoint<float>(prefix + ".image.ckpt");
    auto tab = nn::load_checkpoint<float>(prefix + ".tabular.ckpt");
    auto head = nn::load_checkpoint<float>(prefix + ".head.ckpt");
    c.spec.image = std::move(img.spec);
    c.spec.tabular = std::move(tab.spec);
    c.spec.head = std::move(head.spec);
    c.params.image = std::move(img.params);
    c.params.tabular = std::move(tab.params);
    c.params.head = std::move(head.params);
    return c;
}

}  // namespace demandscope::clf
