#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "demandscope/clf/model.hpp"
#include "demandscope/clf/train.hpp"
#include "demandscope/data/normalize.hpp"
#include "demandscope/data/samples.hpp"
#include "demandscope/data/split.hpp"
#include "demandscope/eval/metrics.hpp"

namespace demandscope::clf {

struct ClassifierTrainResult {
    nn::ParameterStore<float> best_params;
    data::ChannelStats stats;
    double best_val_f1 = -1;
    int best_epoch = -1;
    eval::EvalReport best_val_report;
    std::vector<HistoryRow> history;
};

namespace detail {

inline std::vector<Tensor<float>> sample_tensors(const std::vector<data::Sample>& samples,
                                                 const data::ChannelStats& st) {
    std::vector<Tensor<float>> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(data::normalize_patch(s.patch, st));
    return xs;
}

inline std::vector<int> sample_labels(const std::vector<data::Sample>& samples) {
    std::vector<int> ys;
    ys.reserve(samples.size());
    for (const auto& s : samples) ys.push_back(label_to_int(s.label));
    return ys;
}

}  // namespace detail

inline ClassifierTrainResult train_classifier(const ClassifierConfig& cfg,
                                              const std::vector<data::Sample>& train,
                                              const std::vector<data::Sample>& val,
                                              const NllTrainConfig& tc = {},
                                              const nn::ParameterStore<float>* init_from =
                                                  nullptr) {
    if (train.empty()) throw InvalidConfig("train_classifier: empty training set");
    ClassifierTrainResult out;
    std::vector<data::ImagePatch> patches;  // stats come from train patches only
    patches.reserve(train.size());
    for (const auto& s : train) patches.push_back(s.patch);
    out.stats = data::compute_channel_stats(patches);

    const nn::NetworkSpec spec = build_classifier(cfg);
    NllTrainResult r = train_softmax_net(spec, detail::sample_tensors(train, out.stats),
                                         detail::sample_labels(train),
                                         detail::sample_tensors(val, out.stats),
                                         detail::sample_labels(val), tc, init_from);
    out.best_params = std::move(r.best_params);
    out.best_val_f1 = r.best_val_f1;
    out.best_epoch = r.best_epoch;
    out.best_val_report = r.best_val_report;
    out.history = std::move(r.history);
    return out;
}

inline eval::Prediction predict_one(const nn::Network<float>& net,
                                    const nn::ParameterStore<float>& ps,
                                    const data::ChannelStats& st, const data::ImagePatch& patch,
                                    const std::string& building_id = "") {
    Tensor<float> x = data::normalize_patch(patch, st);
    x.shape.insert(x.shape.begin(), 1);
    auto acts = net.forward(std::move(x), ps);
    const Tensor<float>& probs = acts.acts.back();
    return eval::make_prediction(building_id, probs.at2(0, 0), probs.at2(0, 1));
}

inline std::vector<eval::Prediction> predict_samples(const nn::Network<float>& net,
                                                     const nn::ParameterStore<float>& ps,
                                                     const data::ChannelStats& st,
                                                     const std::vector<data::Sample>& samples) {
    std::vector<eval::Prediction> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict_one(net, ps, st, s.patch, s.building_id));
    return out;
}

inline void write_predictions_csv(const std::string& path,
                                  const std::vector<eval::Prediction>& preds) {
    data::CsvWriter w(path);
    w.row({"building_id", "p_low", "p_high", "pred_class"});
    for (const auto& p : preds)
        w.row({p.building_id, data::num(p.p_low), data::num(p.p_high), tier_name(p.pred)});
    w.close();
}

// Mid-band households re-binned at the alternate threshold (all High for the
// default 30) and scored like any other set; empty input is an empty report.
inline eval::EvalReport evaluate_hard_set(const nn::Network<float>& net,
                                          const nn::ParameterStore<float>& ps,
                                          const data::ChannelStats& st,
                                          const std::vector<data::Sample>& mid_samples,
                                          double thres = 30.0) {
    std::vector<eval::Prediction> preds;
    std::vector<TierLabel> labels;
    for (const auto& s : mid_samples) {
        preds.push_back(predict_one(net, ps, st, s.patch, s.building_id));
        labels.push_back(eval::relabel_at_threshold(s.stable_kwh, thres));
    }
    return eval::evaluate(preds, labels);
}

struct LowDataRow {
    double fraction = 0;
    std::string init;  // "random" or "pretrained"
    int n_train = 0;
    double macro_f1 = 0;
    std::optional<double> auc;
};

// Cumulative label-stratified subsets: each class is shuffled once and every
// fraction takes a prefix, so smaller subsets are contained in larger ones.
inline std::vector<std::vector<data::Sample>> nested_subsets(
    const std::vector<data::Sample>& train, const std::vector<double>& fractions,
    uint64_t seed) {
    std::vector<size_t> by_tier[2];
    for (size_t i = 0; i < train.size(); ++i)
        by_tier[static_cast<size_t>(label_to_int(train[i].label))].push_back(i);
    for (int t = 0; t < 2; ++t) {
        Rng rng(derive_seed(seed, 0x10da7u, static_cast<uint64_t>(t)));
        rng.shuffle(by_tier[t]);
    }
    std::vector<std::vector<data::Sample>> out;
    for (double f : fractions) {
        if (f <= 0.0 || f > 1.0) throw InvalidConfig("low-data fraction outside (0,1]");
        std::vector<size_t> keep;
        for (int t = 0; t < 2; ++t) {
            const auto n = static_cast<size_t>(by_tier[t].size());
            size_t take = static_cast<size_t>(std::lround(f * static_cast<double>(n)));
            take = std::clamp<size_t>(take, n == 0 ? 0 : 1, n);
            keep.insert(keep.end(), by_tier[t].begin(),
                        by_tier[t].begin() + static_cast<int64_t>(take));
        }
        std::vector<data::Sample> subset;
        subset.reserve(keep.size());
        for (size_t i : keep) subset.push_back(train[i]);
        std::sort(subset.begin(), subset.end(),
                  [](const data::Sample& a, const data::Sample& b) {
                      return a.building_id < b.building_id;
                  });
        out.push_back(std::move(subset));
    }
    return out;
}

// One row per (fraction, init arm). `pretrained` is a classifier-shaped store
// (from init_from_segmentation); null drops that arm.
inline std::vector<LowDataRow> low_data_curve(const ClassifierConfig& cfg,
                                              const std::vector<data::Sample>& train,
                                              const std::vector<data::Sample>& val,
                                              const NllTrainConfig& tc,
                                              const nn::ParameterStore<float>* pretrained,
                                              const std::vector<double>& fractions = {
                                                  0.05, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    NllTrainConfig row_tc = tc;
    row_tc.history_csv.clear();
    const auto subsets = nested_subsets(train, fractions, tc.seed);
    std::vector<LowDataRow> rows;
    for (size_t i = 0; i < fractions.size(); ++i) {
        for (const char* arm : {"random", "pretrained"}) {
            const bool is_pre = std::string(arm) == "pretrained";
            if (is_pre && !pretrained) continue;
            ClassifierTrainResult r =
                train_classifier(cfg, subsets[i], val, row_tc, is_pre ? pretrained : nullptr);
            LowDataRow row;
            row.fraction = fractions[i];
            row.init = arm;
            row.n_train = static_cast<int>(subsets[i].size());
            row.macro_f1 = r.best_val_f1;
            row.auc = r.best_val_report.auc;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_low_data_csv(const std::string& path, const std::vector<LowDataRow>& rows) {
    data::CsvWriter w(path);
    w.row({"fraction", "init", "n_train", "macro_f1", "auc"});
    for (const auto& r : rows)
        w.row({data::num(r.fraction), r.init, std::to_string(r.n_train), data::num(r.macro_f1),
               r.auc ? data::num(*r.auc) : ""});
    w.close();
}

}  // namespace demandscope::clf
