#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/raster.hpp"
#include "demandscope/rng.hpp"

namespace demandscope::data {

constexpr int kCensusDim = 17;

struct Sample {
    std::string building_id;
    ImagePatch patch;
    TierLabel label = TierLabel::ExcludedMid;
    double stable_kwh = 0;
    std::optional<std::array<double, kCensusDim>> census;
    std::optional<double> nightlight;
    std::string constituency_id;
    std::string ward_id;
    std::string county_id;
    int connection_year = 0;
};

struct SplitSet {
    std::vector<Sample> train, val, test;
    uint64_t seed = 0;
};

// Largest-remainder apportionment of n into the given fractions.
inline std::vector<int> apportion(int n, const std::vector<double>& fractions) {
    std::vector<int> counts(fractions.size());
    std::vector<std::pair<double, size_t>> rema(fractions.size());
    int assigned = 0;
    for (size_t i = 0; i < fractions.size(); ++i) {
        const double want = n * fractions[i];
        counts[i] = static_cast<int>(std::floor(want));
        rema[i] = {want - counts[i], i};
        assigned += counts[i];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int k = 0; k < n - assigned; ++k) counts[rema[static_cast<size_t>(k)].second] += 1;
    return counts;
}

// 75/15/10 by default, stratified by label so each split keeps the overall
// Low:High ratio. Samples are ordered by building_id before shuffling so the
// result depends only on (membership, seed), not input order.
inline SplitSet stratified_split(std::vector<Sample> samples,
                                 std::array<double, 3> fractions = {0.75, 0.15, 0.10},
                                 uint64_t seed = 0) {
    for (const auto& s : samples)
        if (s.label == TierLabel::ExcludedMid)
            throw InvalidConfig("stratified_split: mid-tier sample " + s.building_id +
                                " must be withheld");
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.building_id < b.building_id; });
    for (size_t i = 1; i < samples.size(); ++i)
        if (samples[i].building_id == samples[i - 1].building_id)
            throw InvalidConfig("stratified_split: duplicate building " + samples[i].building_id);

    SplitSet out;
    out.seed = seed;
    for (TierLabel tier : {TierLabel::Low, TierLabel::High}) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < samples.size(); ++i)
            if (samples[i].label == tier) idx.push_back(i);
        if (idx.size() < 10)
            throw TooFewSamples(std::string(tier_name(tier)) + " stratum has " +
                                std::to_string(idx.size()) + " samples, need 10");
        Rng rng(derive_seed(seed, 0x5b17u, static_cast<uint64_t>(tier)));
        rng.shuffle(idx);
        const auto counts =
            apportion(static_cast<int>(idx.size()),
                      {fractions[0], fractions[1], fractions[2]});
        size_t p = 0;
        for (int split = 0; split < 3; ++split) {
            auto& dst = split == 0 ? out.train : split == 1 ? out.val : out.test;
            for (int k = 0; k < counts[static_cast<size_t>(split)]; ++k)
                dst.push_back(samples[idx[p++]]);
        }
    }
    // deterministic within-split order, independent of stratum interleaving
    auto by_id = [](const Sample& a, const Sample& b) { return a.building_id < b.building_id; };
    std::sort(out.train.begin(), out.train.end(), by_id);
    std::sort(out.val.begin(), out.val.end(), by_id);
    std::sort(out.test.begin(), out.test.end(), by_id);
    return out;
}

}  // namespace demandscope::data
