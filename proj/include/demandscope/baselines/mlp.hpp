#pragma once

#include <string>
#include <vector>

#include "demandscope/clf/train.hpp"
#include "demandscope/data/census.hpp"
#include "demandscope/data/normalize.hpp"
#include "demandscope/data/samples.hpp"
#include "demandscope/nn/spec.hpp"

namespace demandscope::baselines {

// Three hidden layers of 64/32/16 with dropout after each; the trunk stops at
// the 16-wide penultimate activation so the fusion model can graft onto it.
inline nn::NetworkSpec build_mlp_trunk(int in_dim, double dropout_rate = 0.25) {
    if (in_dim < 1) throw InvalidConfig("mlp input dim must be positive");
    nn::NetworkSpec spec;
    spec.input = {in_dim};
    const int widths[] = {64, 32, 16};
    int prev = in_dim;
    for (int w : widths) {
        spec.layers.push_back(nn::LayerDesc::dense(prev, w));
        spec.layers.push_back(nn::LayerDesc::relu());
        spec.layers.push_back(nn::LayerDesc::dropout(dropout_rate));
        prev = w;
    }
    return spec;
}

inline nn::NetworkSpec build_mlp(int in_dim, double dropout_rate = 0.25, int n_classes = 2) {
    nn::NetworkSpec spec = build_mlp_trunk(in_dim, dropout_rate);
    spec.layers.push_back(nn::LayerDesc::dense(16, n_classes));
    spec.layers.push_back(nn::LayerDesc::softmax());
    return spec;
}

// Rows of named tabular features with binary labels; rows that lack a needed
// column are dropped at build time and counted.
struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // 0 = Low, 1 = High
    std::vector<std::string> feature_names;
    int skipped = 0;
};

// feature_set: a census group name from census_groups(), "census:all",
// "viirs", or "all" (census:all + viirs).
inline FeatureMatrix build_feature_matrix(const std::vector<data::Sample>& samples,
                                          const std::string& feature_set) {
    FeatureMatrix m;
    bool want_viirs = false;
    int census_first = -1, census_count = 0;
    if (feature_set == "viirs") {
        want_viirs = true;
        m.feature_names = {"nightlight"};
    } else if (feature_set == "census:all" || feature_set == "all") {
        census_first = 0;
        census_count = data::kCensusDim;
        for (const char* n : data::census_indicator_names()) m.feature_names.push_back(n);
        if (feature_set == "all") {
            want_viirs = true;
            m.feature_names.push_back("nightlight");
        }
    } else {
        for (const auto& g : data::census_groups())
            if (feature_set == g.name) {
                census_first = g.first;
                census_count = g.count;
                for (int i = 0; i < g.count; ++i)
                    m.feature_names.push_back(data::census_indicator_names()[
                        static_cast<size_t>(g.first + i)]);
            }
        if (census_count == 0)
            throw InvalidConfig("unknown feature set '" + feature_set + "'");
    }

    for (const auto& s : samples) {
        if (s.label == TierLabel::ExcludedMid) continue;
        if (census_count > 0 && !s.census) {
            ++m.skipped;
            continue;
        }
        if (want_viirs && !s.nightlight) {
            ++m.skipped;
            continue;
        }
        std::vector<double> row;
        for (int i = 0; i < census_count; ++i)
            row.push_back((*s.census)[static_cast<size_t>(census_first + i)]);
        if (want_viirs) row.push_back(*s.nightlight);
        m.ids.push_back(s.building_id);
        m.rows.push_back(std::move(row));
        m.labels.push_back(clf::label_to_int(s.label));
    }
    return m;
}

struct MlpTrainResult {
    nn::ParameterStore<float> best_params;
    data::FeatureStats stats;
    double best_val_f1 = -1;
    int best_epoch = -1;
    eval::EvalReport best_val_report;
    std::vector<clf::HistoryRow> history;
};

namespace detail {

inline std::vector<Tensor<float>> feature_tensors(const std::vector<std::vector<double>>& rows,
                                                  const data::FeatureStats& st) {
    std::vector<Tensor<float>> xs;
    xs.reserve(rows.size());
    for (const auto& r : rows) {
        const std::vector<double> z = data::normalize_features(r, st);
        Tensor<float> t({static_cast<int>(z.size())});
        for (size_t i = 0; i < z.size(); ++i) t.v[i] = static_cast<float>(z[i]);
        xs.push_back(std::move(t));
    }
    return xs;
}

}  // namespace detail

// Tabular counterpart of the image classifier: z-scored features with train
// statistics, twenty epochs by default, best checkpoint by validation F1.
inline MlpTrainResult train_tabular_mlp(const std::vector<std::vector<double>>& train_rows,
                                        const std::vector<int>& train_labels,
                                        const std::vector<std::vector<double>>& val_rows,
                                        const std::vector<int>& val_labels,
                                        clf::NllTrainConfig cfg = {},
                                        double dropout_rate = 0.25) {
    if (train_rows.empty()) throw InvalidConfig("train_tabular_mlp: empty training set");
    MlpTrainResult out;
    out.stats = data::compute_feature_stats(train_rows);
    const nn::NetworkSpec spec =
        build_mlp(static_cast<int>(train_rows[0].size()), dropout_rate);
    clf::NllTrainResult r = clf::train_softmax_net(
        spec, detail::feature_tensors(train_rows, out.stats), train_labels,
        detail::feature_tensors(val_rows, out.stats), val_labels, cfg);
    out.best_params = std::move(r.best_params);
    out.best_val_f1 = r.best_val_f1;
    out.best_epoch = r.best_epoch;
    out.best_val_report = r.best_val_report;
    out.history = std::move(r.history);
    return out;
}

inline clf::NllTrainConfig mlp_train_defaults() {
    clf::NllTrainConfig cfg;
    cfg.epochs = 20;
    return cfg;
}

}  // namespace demandscope::baselines
