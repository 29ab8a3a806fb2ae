#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "demandscope/common.hpp"

namespace demandscope::eval {

// Every set handed to evaluate() had both classes unless this fires.
struct SingleClassSet : Error {
    explicit SingleClassSet(const std::string& msg) : Error("SingleClassSet: " + msg) {}
};

struct Prediction {
    std::string building_id;
    double p_low = 0;
    double p_high = 0;
    TierLabel pred = TierLabel::Low;  // argmax of the pair
};

inline Prediction make_prediction(std::string building_id, double p_low, double p_high) {
    Prediction p;
    p.building_id = std::move(building_id);
    p.p_low = p_low;
    p.p_high = p_high;
    p.pred = p_high > p_low ? TierLabel::High : TierLabel::Low;
    return p;
}

// Low is the negative class, High the positive one. Rates are conditioned on
// the true class, so tn+fp and tp+fn each sum to one where defined.
struct EvalReport {
    int64_t tn = 0, tp = 0, fp = 0, fn = 0;
    double tn_rate = 0, tp_rate = 0, fp_rate = 0, fn_rate = 0;
    double macro_f1 = 0;
    std::optional<double> auc;
    int64_t n_low = 0, n_high = 0;
};

// Rank statistic over the positive-class score with half credit for ties;
// equals the probability a random High outranks a random Low.
inline double auc_rank(const std::vector<double>& p_high, const std::vector<TierLabel>& labels) {
    if (p_high.size() != labels.size()) throw ShapeMismatch("auc: score/label count mismatch");
    std::vector<double> neg;
    std::vector<double> pos;
    for (size_t i = 0; i < labels.size(); ++i)
        (labels[i] == TierLabel::High ? pos : neg).push_back(p_high[i]);
    if (pos.empty() || neg.empty()) throw SingleClassSet("auc needs both classes");
    std::sort(neg.begin(), neg.end());
    double credit = 0;
    for (double s : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        const auto hi = std::upper_bound(lo, neg.end(), s);
        credit += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double f1_from_counts(int64_t true_pos, int64_t false_pos, int64_t false_neg) {
    const int64_t denom = 2 * true_pos + false_pos + false_neg;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(true_pos) / static_cast<double>(denom);
}

inline EvalReport evaluate(const std::vector<Prediction>& predictions,
                           const std::vector<TierLabel>& labels) {
    if (predictions.size() != labels.size())
        throw ShapeMismatch("evaluate: prediction/label count mismatch");
    EvalReport r;
    std::vector<double> scores;
    scores.reserve(predictions.size());
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i] == TierLabel::ExcludedMid)
            throw InvalidConfig("evaluate: mid-tier label in a binary set");
        const bool truth_high = labels[i] == TierLabel::High;
        const bool pred_high = predictions[i].pred == TierLabel::High;
        if (truth_high) {
            ++r.n_high;
            ++(pred_high ? r.tp : r.fn);
        } else {
            ++r.n_low;
            ++(pred_high ? r.fp : r.tn);
        }
        scores.push_back(predictions[i].p_high);
    }
    if (r.n_low > 0) {
        r.tn_rate = static_cast<double>(r.tn) / static_cast<double>(r.n_low);
        r.fp_rate = static_cast<double>(r.fp) / static_cast<double>(r.n_low);
    }
    if (r.n_high > 0) {
        r.tp_rate = static_cast<double>(r.tp) / static_cast<double>(r.n_high);
        r.fn_rate = static_cast<double>(r.fn) / static_cast<double>(r.n_high);
    }
    // per-class F1; for Low the "positives" are the true-Low predictions
    const double f1_low = f1_from_counts(r.tn, r.fn, r.fp);
    const double f1_high = f1_from_counts(r.tp, r.fp, r.fn);
    r.macro_f1 = 0.5 * (f1_low + f1_high);
    if (r.n_low > 0 && r.n_high > 0) r.auc = auc_rank(scores, labels);
    return r;
}

// Mid-band households re-binned at the alternate threshold: reported kWh at
// or below `thres` counts Low, above counts High.
inline TierLabel relabel_at_threshold(double kwh, double thres = 30.0) {
    return kwh <= thres ? TierLabel::Low : TierLabel::High;
}

}  // namespace demandscope::eval
