#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/data/split.hpp"

namespace demandscope::data {

// Seventeen ward-level indicators in a fixed order; each group's fractions
// describe the categories of one household attribute.
inline const std::array<const char*, kCensusDim>& census_indicator_names() {
    static const std::array<const char*, kCensusDim> names = {
        "water_surface",        "water_improved",       "water_unimproved",
        "sanitation_improved",  "sanitation_unimproved",
        "lightfuel_finished",   "lightfuel_rudimentary",
        "floor_finished",       "floor_rudimentary",
        "cookfuel_finished",    "cookfuel_rudimentary",
        "wall_finished",        "wall_rudimentary",     "wall_natural",
        "roof_finished",        "roof_rudimentary",     "roof_natural",
    };
    return names;
}

struct CensusGroup {
    const char* name;
    int first;  // index into the 17-vector
    int count;
};

inline const std::array<CensusGroup, 7>& census_groups() {
    static const std::array<CensusGroup, 7> groups = {{
        {"water_source", 0, 3},
        {"sanitation", 3, 2},
        {"lightfuel", 5, 2},
        {"floor_material", 7, 2},
        {"cookfuel", 9, 2},
        {"wall_material", 11, 3},
        {"rooftop_material", 14, 3},
    }};
    return groups;
}

inline int census_indicator_index(const std::string& name) {
    const auto& names = census_indicator_names();
    for (int i = 0; i < kCensusDim; ++i)
        if (name == names[static_cast<size_t>(i)]) return i;
    throw ParseError("unknown census indicator '" + name + "'");
}

struct CensusTable {
    std::map<std::string, std::array<double, kCensusDim>> by_ward;
    std::vector<std::string> group_warnings;  // group sums outside [0.98, 1.02]

    const std::array<double, kCensusDim>& ward(const std::string& ward_id) const {
        auto it = by_ward.find(ward_id);
        if (it == by_ward.end()) throw UnknownWard("no census row for ward " + ward_id);
        return it->second;
    }
};

// CSV `ward_id,indicator_name,fraction`, one row per (ward, indicator).
inline CensusTable load_census_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_ward = t.column("ward_id");
    const int c_name = t.column("indicator_name");
    const int c_frac = t.column("fraction");

    CensusTable out;
    std::map<std::string, std::array<bool, kCensusDim>> seen;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = path + ":" + std::to_string(t.line_numbers[i]);
        const std::string& ward = t.rows[i][static_cast<size_t>(c_ward)];
        const int idx = census_indicator_index(t.rows[i][static_cast<size_t>(c_name)]);
        const double frac = csv_double(t, i, c_frac);
        if (!std::isfinite(frac) || frac < 0.0 || frac > 1.0)
            throw ParseError(where + ": fraction must be in [0,1]");
        auto& have = seen[ward];
        if (have[static_cast<size_t>(idx)]) throw ParseError(where + ": duplicate indicator");
        have[static_cast<size_t>(idx)] = true;
        out.by_ward[ward][static_cast<size_t>(idx)] = frac;
    }
    for (const auto& [ward, have] : seen)
        for (int i = 0; i < kCensusDim; ++i)
            if (!have[static_cast<size_t>(i)])
                throw ParseError(path + ": ward " + ward + " missing indicator " +
                                 census_indicator_names()[static_cast<size_t>(i)]);

    for (const auto& [ward, vec] : out.by_ward)
        for (const auto& g : census_groups()) {
            double sum = 0;
            for (int i = 0; i < g.count; ++i) sum += vec[static_cast<size_t>(g.first + i)];
            if (sum < 0.98 || sum > 1.02)
                out.group_warnings.push_back("ward " + ward + " group " + g.name + " sums to " +
                                             num(sum, 4));
        }
    return out;
}

inline std::array<double, kCensusDim> attach_census(const std::string& ward_id,
                                                    const CensusTable& table) {
    return table.ward(ward_id);
}

}  // namespace demandscope::data
