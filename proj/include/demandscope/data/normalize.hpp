#pragma once

#include <cmath>
#include <vector>

#include "demandscope/data/raster.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::data {

// Per-channel statistics of train patches after /255 scaling.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> std{};
    int n_degenerate = 0;  // channels whose std collapsed to 0 (replaced by 1)
};

namespace detail {

// Welford accumulator: a constant stream yields an exactly zero variance,
// which the degenerate-std rule depends on.
struct Moments {
    int64_t n = 0;
    double mean = 0;
    double m2 = 0;

    void add(double v) {
        n += 1;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    double stddev() const { return std::sqrt(std::max(0.0, m2) / static_cast<double>(n)); }
};

}  // namespace detail

template <typename PatchRange>
ChannelStats compute_channel_stats(const PatchRange& patches) {
    std::array<detail::Moments, 3> mom;
    for (const auto& p : patches)
        for (int y = 0; y < p.size; ++y)
            for (int x = 0; x < p.size; ++x)
                for (int c = 0; c < 3; ++c)
                    mom[static_cast<size_t>(c)].add(p.at(y, x, c) / 255.0);
    if (mom[0].n == 0) throw InvalidConfig("channel stats need at least one patch");
    ChannelStats st;
    for (int c = 0; c < 3; ++c) {
        st.mean[static_cast<size_t>(c)] = mom[static_cast<size_t>(c)].mean;
        double sd = mom[static_cast<size_t>(c)].stddev();
        if (sd == 0.0) {
            sd = 1.0;
            ++st.n_degenerate;
        }
        st.std[static_cast<size_t>(c)] = sd;
    }
    return st;
}

// /255 then per-channel z-score with train statistics.
inline Tensor<float> normalize_patch(const ImagePatch& p, const ChannelStats& st) {
    Tensor<float> t({3, p.size, p.size});
    for (int c = 0; c < 3; ++c) {
        const double m = st.mean[static_cast<size_t>(c)];
        const double sd = st.std[static_cast<size_t>(c)];
        for (int y = 0; y < p.size; ++y)
            for (int x = 0; x < p.size; ++x)
                t.v[(static_cast<size_t>(c) * p.size + y) * p.size + x] =
                    static_cast<float>((p.at(y, x, c) / 255.0 - m) / sd);
    }
    return t;
}

// Tabular z-scoring with train-only statistics; degenerate stds become 1.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;
    int n_degenerate = 0;
};

inline FeatureStats compute_feature_stats(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvalidConfig("feature stats need at least one row");
    const size_t d = rows[0].size();
    std::vector<detail::Moments> mom(d);
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeMismatch("ragged feature rows");
        for (size_t i = 0; i < d; ++i) mom[i].add(r[i]);
    }
    FeatureStats st;
    st.mean.resize(d);
    st.std.resize(d);
    for (size_t i = 0; i < d; ++i) {
        st.mean[i] = mom[i].mean;
        st.std[i] = mom[i].stddev();
        if (st.std[i] == 0.0) {
            st.std[i] = 1.0;
            ++st.n_degenerate;
        }
    }
    return st;
}

inline std::vector<double> normalize_features(const std::vector<double>& row,
                                              const FeatureStats& st) {
    if (row.size() != st.mean.size()) throw ShapeMismatch("feature width mismatch");
    std::vector<double> out(row.size());
    for (size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - st.mean[i]) / st.std[i];
    return out;
}

}  // namespace demandscope::data
