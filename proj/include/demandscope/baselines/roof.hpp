#pragma once

#include <string>
#include <vector>

#include "demandscope/baselines/mlp.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/data/raster.hpp"
#include "demandscope/seg/pointer.hpp"

namespace demandscope::baselines {

struct RoofFeatures {
    double area_m2 = 0;
    double mean_r = 0, mean_g = 0, mean_b = 0;  // raw 0..255 means over mask pixels
    bool fallback = false;                      // mask came from the 3x3 neighborhood
};

// Area and per-channel color of the masked roof. Intensities stay on the raw
// byte scale; z-scoring happens later with the other tabular features.
inline RoofFeatures roof_features_from_mask(const data::ImagePatch& patch,
                                            const std::vector<uint8_t>& mask) {
    if (static_cast<int>(mask.size()) != patch.size * patch.size)
        throw ShapeMismatch("mask does not cover the patch");
    RoofFeatures f;
    int64_t count = 0;
    double sum[3] = {0, 0, 0};
    for (int y = 0; y < patch.size; ++y)
        for (int x = 0; x < patch.size; ++x) {
            if (!mask[static_cast<size_t>(y) * patch.size + x]) continue;
            ++count;
            for (int c = 0; c < 3; ++c) sum[c] += patch.at(y, x, c);
        }
    if (count == 0) throw seg::EmptyMask("no pixels to summarize");
    f.area_m2 = static_cast<double>(count) * patch.meters_per_pixel * patch.meters_per_pixel;
    f.mean_r = sum[0] / static_cast<double>(count);
    f.mean_g = sum[1] / static_cast<double>(count);
    f.mean_b = sum[2] / static_cast<double>(count);
    return f;
}

// Pointer-conditioned mask first; an empty mask degrades to the 3x3
// neighborhood around the point and is flagged.
inline RoofFeatures extract_roof_features(const nn::Network<float>& net,
                                          const nn::ParameterStore<float>& ps,
                                          const data::ChannelStats& st,
                                          const data::ImagePatch& patch, seg::PointIndicator pt,
                                          double threshold = 0.5) {
    std::vector<uint8_t> mask;
    bool fallback = false;
    try {
        mask = seg::pointer_segment(net, ps, st, patch, pt, threshold);
    } catch (const seg::EmptyMask&) {
        mask = seg::neighborhood_mask(patch.size, pt);
        fallback = true;
    }
    RoofFeatures f = roof_features_from_mask(patch, mask);
    f.fallback = fallback;
    return f;
}

enum class RoofFeatureSet { Area, Color, AreaColor };

inline RoofFeatureSet roof_feature_set_from_name(const std::string& s) {
    if (s == "roof-area") return RoofFeatureSet::Area;
    if (s == "roof-color") return RoofFeatureSet::Color;
    if (s == "roof-both") return RoofFeatureSet::AreaColor;
    throw InvalidConfig("unknown roof feature set '" + s + "'");
}

inline std::vector<double> roof_feature_row(const RoofFeatures& f, RoofFeatureSet set) {
    switch (set) {
        case RoofFeatureSet::Area: return {f.area_m2};
        case RoofFeatureSet::Color: return {f.mean_r, f.mean_g, f.mean_b};
        case RoofFeatureSet::AreaColor: return {f.area_m2, f.mean_r, f.mean_g, f.mean_b};
    }
    throw InvalidConfig("bad roof feature set");
}

inline void write_roof_features_csv(const std::string& path,
                                    const std::vector<std::string>& building_ids,
                                    const std::vector<RoofFeatures>& features) {
    if (building_ids.size() != features.size())
        throw ShapeMismatch("one building id per feature row");
    data::CsvWriter w(path);
    w.row({"building_id", "area_m2", "mean_r", "mean_g", "mean_b"});
    for (size_t i = 0; i < features.size(); ++i)
        w.row({building_ids[i], data::num(features[i].area_m2), data::num(features[i].mean_r),
               data::num(features[i].mean_g), data::num(features[i].mean_b)});
    w.close();
}

}  // namespace demandscope::baselines
