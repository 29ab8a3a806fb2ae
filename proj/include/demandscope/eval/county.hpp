#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/eval/metrics.hpp"
#include "demandscope/rng.hpp"

namespace demandscope::eval {

// r = sum w(x-xm)(y-ym) / sqrt(sum w(x-xm)^2 * sum w(y-ym)^2), means weighted.
inline double weighted_pearson(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size())
        throw ShapeMismatch("weighted_pearson: input length mismatch");
    if (x.size() < 3) throw InvalidConfig("weighted_pearson needs at least 3 points");
    double wsum = 0, xm = 0, ym = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (w[i] <= 0) throw InvalidConfig("weighted_pearson: weights must be positive");
        wsum += w[i];
        xm += w[i] * x[i];
        ym += w[i] * y[i];
    }
    xm /= wsum;
    ym /= wsum;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - xm, dy = y[i] - ym;
        sxy += w[i] * dx * dy;
        sxx += w[i] * dx * dx;
        syy += w[i] * dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("weighted_pearson: constant input");
    return sxy / std::sqrt(sxx * syy);
}

// Two-sided permutation test on the pairing: y is shuffled against (x, w)
// with a derived seed per permutation, so the p-value is reproducible and
// independent of evaluation order.
inline double permutation_p(double r_observed, const std::vector<double>& x,
                            const std::vector<double>& y, const std::vector<double>& w,
                            int n_perm = 10000, uint64_t seed = 0) {
    int hits = 0;
    std::vector<double> yp = y;
    for (int i = 0; i < n_perm; ++i) {
        Rng rng(derive_seed(seed, 0x9e12u, static_cast<uint64_t>(i)));
        yp = y;
        rng.shuffle(yp);
        if (std::abs(weighted_pearson(x, yp, w)) >= std::abs(r_observed)) ++hits;
    }
    return (1.0 + hits) / (static_cast<double>(n_perm) + 1.0);
}

struct SurveyRow {
    std::string county_id;
    std::string household_id;
    double reported_kwh = 0;
    double sample_weight = 1;
};

inline std::vector<SurveyRow> load_survey(const std::string& path) {
    const data::CsvTable t = data::read_csv(path);
    const int c_county = t.column("county_id");
    const int c_house = t.column("household_id");
    const int c_kwh = t.column("reported_kwh");
    const int c_weight = t.column("sample_weight");
    std::vector<SurveyRow> out;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        SurveyRow r;
        r.county_id = t.rows[i][static_cast<size_t>(c_county)];
        r.household_id = t.rows[i][static_cast<size_t>(c_house)];
        r.reported_kwh = data::csv_double(t, i, c_kwh);
        r.sample_weight = data::csv_double(t, i, c_weight);
        if (r.sample_weight <= 0)
            throw ParseError(path + ":" + std::to_string(i + 2) + ": non-positive sample weight");
        out.push_back(std::move(r));
    }
    return out;
}

struct CountyPrediction {
    std::string building_id;
    std::string county_id;
    TierLabel pred = TierLabel::Low;
};

struct CountyRow {
    std::string county_id;
    double predicted_high_share = 0;
    double surveyed_high_share = 0;
    int64_t n_survey = 0;      // binned rows only; middle-band respondents do not count
    int64_t n_predictions = 0;
    bool excluded = false;     // listed but left out of the correlation
};

struct CountyValidation {
    std::vector<CountyRow> counties;  // qualifying counties, county-id order
    double r = 0;
    double p = 1;
    int n_used = 0;  // counties entering the correlation
};

struct CountyValidationConfig {
    int min_samples = 15;
    double low_max = 30.0;   // reported kWh at or below this bins Low
    double high_min = 60.0;  // at or above this bins High; the band between is dropped
    std::vector<std::string> exclude;
    int n_perm = 10000;
    uint64_t seed = 0;
};

// Survey respondents are binned Low/High, counties with enough binned rows
// are kept, and the per-county High shares from predictions and survey are
// correlated with the county's survey count as the weight.
inline CountyValidation county_validation(const std::vector<CountyPrediction>& predictions,
                                          const std::vector<SurveyRow>& survey,
                                          const CountyValidationConfig& cfg = {}) {
    struct Acc {
        double w_high = 0, w_total = 0;
        int64_t n = 0;
        int64_t pred_high = 0, pred_total = 0;
    };
    std::map<std::string, Acc> by_county;
    for (const auto& row : survey) {
        const bool is_low = row.reported_kwh <= cfg.low_max;
        const bool is_high = row.reported_kwh >= cfg.high_min;
        if (!is_low && !is_high) continue;
        Acc& a = by_county[row.county_id];
        a.w_total += row.sample_weight;
        if (is_high) a.w_high += row.sample_weight;
        a.n += 1;
    }
    for (const auto& p : predictions) {
        const auto it = by_county.find(p.county_id);
        if (it == by_county.end()) continue;
        it->second.pred_total += 1;
        if (p.pred == TierLabel::High) it->second.pred_high += 1;
    }

    CountyValidation out;
    std::vector<double> x, y, w;
    for (const auto& [county, a] : by_county) {
        if (a.n < cfg.min_samples || a.pred_total == 0) continue;
        CountyRow row;
        row.county_id = county;
        row.predicted_high_share =
            static_cast<double>(a.pred_high) / static_cast<double>(a.pred_total);
        row.surveyed_high_share = a.w_high / a.w_total;
        row.n_survey = a.n;
        row.n_predictions = a.pred_total;
        row.excluded =
            std::find(cfg.exclude.begin(), cfg.exclude.end(), county) != cfg.exclude.end();
        if (!row.excluded) {
            x.push_back(row.predicted_high_share);
            y.push_back(row.surveyed_high_share);
            w.push_back(static_cast<double>(row.n_survey));
        }
        out.counties.push_back(std::move(row));
    }
    if (x.size() < 3)
        throw TooFewCounties("county_validation: " + std::to_string(x.size()) +
                             " qualifying counties, need 3");
    out.n_used = static_cast<int>(x.size());
    out.r = weighted_pearson(x, y, w);
    out.p = permutation_p(out.r, x, y, w, cfg.n_perm, cfg.seed);
    return out;
}

}  // namespace demandscope::eval
