#pragma once

#include "demandscope/data/billing.hpp"
#include "demandscope/data/census.hpp"
#include "demandscope/data/raster.hpp"
#include "demandscope/data/split.hpp"
#include "demandscope/data/viirs.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace demandscope::data {

struct WardEntry {
    std::string ward_id;
    std::string constituency_id;
    std::string county_id;
    std::string raster_path;
};

// Ward index CSV: ward_id,constituency_id,county_id,raster.
// Relative raster paths resolve against the CSV's directory.
inline std::vector<WardEntry> load_ward_index(const std::string& path) {
    CsvTable t = read_csv(path);
    std::size_t ci_ward = t.column("ward_id");
    std::size_t ci_con = t.column("constituency_id");
    std::size_t ci_cty = t.column("county_id");
    std::size_t ci_ras = t.column("raster");
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<WardEntry> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        WardEntry e;
        e.ward_id = row[ci_ward];
        e.constituency_id = row[ci_con];
        e.county_id = row[ci_cty];
        std::filesystem::path rp = row[ci_ras];
        e.raster_path = rp.is_absolute() ? rp.string() : (base / rp).string();
        if (e.ward_id.empty()) {
            throw ParseError(path + ":" + std::to_string(t.line_numbers[i]) + ": empty ward_id");
        }
        out.push_back(std::move(e));
    }
    return out;
}

struct Scene {
    WardEntry ward;
    Raster raster;
};

// Loads every ward raster up front; lookup is by geographic containment.
class SceneIndex {
public:
    explicit SceneIndex(const std::vector<WardEntry>& wards) {
        scenes_.reserve(wards.size());
        for (const auto& w : wards) {
            Scene s;
            s.ward = w;
            s.raster = load_raster(w.raster_path);
            scenes_.push_back(std::move(s));
        }
    }

    const Scene* find(double lon, double lat) const {
        for (const auto& s : scenes_) {
            const Raster& r = s.raster;
            int col = r.col_of(lon);
            int row = r.row_of(lat);
            if (col >= 0 && col < r.img.w && row >= 0 && row < r.img.h) return &s;
        }
        return nullptr;
    }

    const std::vector<Scene>& scenes() const { return scenes_; }

private:
    std::vector<Scene> scenes_;
};

struct AssemblyOptions {
    int patch_size = 128;
    // An image is usable only if acquired before the stable-consumption window
    // opens, i.e. acquisition < connection + 12 months.
    bool attach_census = true;
    bool attach_nightlights = true;
};

struct DropStats {
    int multi_customer = 0;
    int no_stable_bills = 0;
    int no_scene = 0;
    int image_too_late = 0;
    int out_of_bounds = 0;

    int total() const {
        return multi_customer + no_stable_bills + no_scene + image_too_late + out_of_bounds;
    }
};

struct AssembledSamples {
    std::vector<Sample> samples;  // all tiers, sorted by building_id
    DropStats drops;
};

inline bool image_eligible(const Month& acquisition, const Month& connection) {
    return acquisition < connection.plus_months(12);
}

inline AssembledSamples assemble_samples(const std::vector<BillingRecord>& records,
                                         const SceneIndex& scenes,
                                         const CensusTable* census,
                                         const ViirsTable* viirs,
                                         const AssemblyOptions& opt = {}) {
    int n_multi = 0;
    std::vector<BillingRecord> singles = single_customer_records(records, &n_multi);

    AssembledSamples out;
    out.drops.multi_customer = n_multi;
    out.samples.reserve(singles.size());

    for (const auto& rec : singles) {
        StableConsumption sc;
        try {
            sc = compute_stable_consumption(rec);
        } catch (const NoStableBills&) {
            out.drops.no_stable_bills++;
            continue;
        }

        const Scene* scene = scenes.find(rec.lon, rec.lat);
        if (!scene) {
            out.drops.no_scene++;
            continue;
        }
        if (!image_eligible(scene->raster.acquisition, rec.connection)) {
            out.drops.image_too_late++;
            continue;
        }

        Sample s;
        try {
            s.patch = extract_patch(scene->raster, rec.lon, rec.lat, opt.patch_size);
        } catch (const OutOfBounds&) {
            out.drops.out_of_bounds++;
            continue;
        }

        s.building_id = rec.building_id;
        s.stable_kwh = sc.mean_kwh_per_month;
        s.label = assign_label(sc.mean_kwh_per_month);
        s.ward_id = scene->ward.ward_id;
        s.constituency_id = scene->ward.constituency_id;
        s.county_id = scene->ward.county_id;
        s.connection_year = rec.connection.year;

        if (census && opt.attach_census) s.census = census->ward(s.ward_id);
        if (viirs && opt.attach_nightlights) {
            s.nightlight = attach_nightlight(rec.lon, rec.lat, rec.connection.year, *viirs);
        }
        out.samples.push_back(std::move(s));
    }

    std::sort(out.samples.begin(), out.samples.end(),
              [](const Sample& a, const Sample& b) { return a.building_id < b.building_id; });
    return out;
}

}  // namespace demandscope::data
