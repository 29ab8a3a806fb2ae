#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/data/split.hpp"
#include "demandscope/eval/metrics.hpp"

namespace demandscope::baselines {

struct NoHistory : Error {
    explicit NoHistory(const std::string& msg) : Error("NoHistory: " + msg) {}
};

struct HistoryCell {
    double mean_kwh = 0;
    int n = 0;
};

// Per-constituency connection records, queried as leave-future-out means: the
// mean for year t covers connections strictly before t, so a household never
// feeds its own prediction year.
struct ConstituencyHistory {
    std::map<std::string, std::vector<std::pair<int, double>>> by_constituency;
    std::vector<std::pair<int, double>> national;

    HistoryCell at(const std::string& constituency_id, int year) const {
        const auto it = by_constituency.find(constituency_id);
        if (it == by_constituency.end())
            throw NoHistory("constituency " + constituency_id + " has no connections");
        return mean_before(it->second, year,
                           constituency_id + " before " + std::to_string(year));
    }

    HistoryCell national_at(int year) const {
        return mean_before(national, year, "any constituency before " + std::to_string(year));
    }

  private:
    static HistoryCell mean_before(const std::vector<std::pair<int, double>>& entries, int year,
                                   const std::string& what) {
        HistoryCell c;
        double sum = 0;
        for (const auto& [y, kwh] : entries) {
            if (y >= year) break;  // sorted by year
            sum += kwh;
            ++c.n;
        }
        if (c.n == 0) throw NoHistory("no connections in " + what);
        c.mean_kwh = sum / c.n;
        return c;
    }
};

inline ConstituencyHistory build_history(const std::vector<data::Sample>& samples) {
    ConstituencyHistory h;
    for (const auto& s : samples) {
        h.by_constituency[s.constituency_id].push_back({s.connection_year, s.stable_kwh});
        h.national.push_back({s.connection_year, s.stable_kwh});
    }
    auto by_year = [](const std::pair<int, double>& a, const std::pair<int, double>& b) {
        return a.first < b.first;
    };
    for (auto& [cid, entries] : h.by_constituency)
        std::stable_sort(entries.begin(), entries.end(), by_year);
    std::stable_sort(h.national.begin(), h.national.end(), by_year);
    return h;
}

struct ModelAPrediction {
    TierLabel label = TierLabel::Low;
    double mean_kwh = 0;
    int n = 0;
    bool national_fallback = false;
};

// High iff the historical mean strictly exceeds the threshold. A constituency
// with no earlier connections borrows the national mean for that year; if the
// year has no earlier connections anywhere the prediction is refused.
inline ModelAPrediction model_a_predict(const ConstituencyHistory& h,
                                        const std::string& constituency_id, int year,
                                        double thres = 30.0) {
    ModelAPrediction p;
    HistoryCell cell;
    try {
        cell = h.at(constituency_id, year);
    } catch (const NoHistory&) {
        cell = h.national_at(year);
        p.national_fallback = true;
    }
    p.mean_kwh = cell.mean_kwh;
    p.n = cell.n;
    p.label = cell.mean_kwh > thres ? TierLabel::High : TierLabel::Low;
    return p;
}

struct ModelAEvaluation {
    eval::EvalReport report;
    std::vector<eval::Prediction> predictions;
    std::vector<std::string> skipped_ids;  // first-ever connections, nothing to average
    int n_fallback = 0;
};

// Scores Model A over binary-labeled samples; households with no usable
// history anywhere (the global first adopters) are listed, not scored.
inline ModelAEvaluation model_a_evaluate(const ConstituencyHistory& h,
                                         const std::vector<data::Sample>& samples,
                                         double thres = 30.0) {
    ModelAEvaluation out;
    std::vector<TierLabel> truth;
    for (const auto& s : samples) {
        if (s.label == TierLabel::ExcludedMid) continue;
        ModelAPrediction p;
        try {
            p = model_a_predict(h, s.constituency_id, s.connection_year, thres);
        } catch (const NoHistory&) {
            out.skipped_ids.push_back(s.building_id);
            continue;
        }
        if (p.national_fallback) ++out.n_fallback;
        const double hard = p.label == TierLabel::High ? 1.0 : 0.0;
        out.predictions.push_back(eval::make_prediction(s.building_id, 1.0 - hard, hard));
        truth.push_back(s.label);
    }
    if (!out.predictions.empty()) out.report = eval::evaluate(out.predictions, truth);
    return out;
}

struct ModelAReportRow {
    std::string constituency_id;
    int year = 0;
    double mean_kwh = 0;
    int n = 0;
    TierLabel predicted = TierLabel::Low;
    bool national_fallback = false;
};

// One row per (constituency, connection year) seen in the samples, in sorted
// order; rows with no usable history are omitted.
inline std::vector<ModelAReportRow> model_a_report(const ConstituencyHistory& h,
                                                   const std::vector<data::Sample>& samples,
                                                   double thres = 30.0) {
    std::set<std::pair<std::string, int>> keys;
    for (const auto& s : samples) keys.insert({s.constituency_id, s.connection_year});
    std::vector<ModelAReportRow> rows;
    for (const auto& [cid, year] : keys) {
        ModelAPrediction p;
        try {
            p = model_a_predict(h, cid, year, thres);
        } catch (const NoHistory&) {
            continue;
        }
        rows.push_back({cid, year, p.mean_kwh, p.n, p.label, p.national_fallback});
    }
    return rows;
}

inline void write_model_a_csv(const std::string& path,
                              const std::vector<ModelAReportRow>& rows) {
    data::CsvWriter w(path);
    w.row({"constituency_id", "year", "mean_kwh", "n", "predicted_class"});
    for (const auto& r : rows)
        w.row({r.constituency_id, std::to_string(r.year), data::num(r.mean_kwh),
               std::to_string(r.n), tier_name(r.predicted)});
    w.close();
}

}  // namespace demandscope::baselines
