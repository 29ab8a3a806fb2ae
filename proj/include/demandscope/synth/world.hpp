#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "demandscope/common.hpp"
#include "demandscope/data/census.hpp"
#include "demandscope/data/csv.hpp"
#include "demandscope/data/raster.hpp"
#include "demandscope/rng.hpp"

namespace demandscope::synth {

// Per-channel uniform color ranges for one roof class.
struct RoofPalette {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
};

// The generative rule: consumption is driven by exactly three observable
// signal families (roof size, roof color, surrounding density), so every
// downstream ablation has a known answer.
struct WorldSpec {
    uint64_t seed = 0;
    int n_counties = 4;
    int wards_per_county = 2;
    int buildings_per_ward = 12;
    int raster_size = 512;

    RoofPalette bright{{135, 130, 125}, {225, 220, 210}};
    RoofPalette dark{{15, 10, 8}, {85, 75, 65}};

    double area_mu = std::log(40.0);  // log-normal roof area, m^2
    double area_sigma = 0.35;
    double area_wealth_shift = 0.30;  // added to mu for bright roofs, subtracted for dark

    double a_area = 0.16;
    double b_brightness = 0.32;
    double c_density = 0.5;
    double noise_sd = 6.0;

    double adoption_bias = 1.0;  // 0: connection order random; 1: ordered by latent
    double adoption_noise = 0.8;
    int first_connection_year = 2012;
    int n_connection_years = 5;

    double footprint_shift_rate = 0.0;  // fraction of footprints misaligned in the geojson
    int footprint_shift_px = 5;

    int n_survey_per_county = 30;
    bool survey_biased_county = true;   // first county under-reports
    double survey_bias_factor = 0.3;

    int bills_months = 30;
    double billing_noise = 0.15;
    int acquisition_year = 2011;  // imagery predates every connection

    // fixed by the imagery contract
    static constexpr double meters_per_pixel() { return kDefaultMetersPerPixel; }
};

enum class Difficulty { Separable, Realistic, Adversarial };

inline Difficulty difficulty_from_name(const std::string& s) {
    if (s == "separable") return Difficulty::Separable;
    if (s == "realistic") return Difficulty::Realistic;
    if (s == "adversarial") return Difficulty::Adversarial;
    throw InvalidConfig("unknown difficulty '" + s + "'");
}

inline const char* difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Separable: return "separable";
        case Difficulty::Realistic: return "realistic";
        case Difficulty::Adversarial: return "adversarial";
    }
    return "?";
}

// Scales noise, palette overlap, and footprint misalignment in fixed ratios.
inline WorldSpec difficulty_knobs(WorldSpec spec, Difficulty level) {
    switch (level) {
        case Difficulty::Separable:
            spec.noise_sd = 0.0;
            spec.bright = {{185, 182, 178}, {235, 232, 228}};
            spec.dark = {{8, 6, 5}, {52, 48, 44}};
            spec.footprint_shift_rate = 0.0;
            break;
        case Difficulty::Realistic:
            break;  // the defaults
        case Difficulty::Adversarial:
            spec.noise_sd *= 1.6;
            for (int c = 0; c < 3; ++c) {
                spec.bright.lo[static_cast<size_t>(c)] -= 35;
                spec.dark.hi[static_cast<size_t>(c)] += 35;
            }
            spec.footprint_shift_rate = 0.2;
            break;
    }
    return spec;
}

inline double latent_rule(const WorldSpec& spec, double area_m2, double brightness,
                          int neighbors, double noise) {
    const double v = spec.a_area * area_m2 + spec.b_brightness * brightness +
                     spec.c_density * neighbors + noise;
    return std::max(0.0, v);
}

struct BuildingTruth {
    std::string building_id;
    std::string ward_id, constituency_id, county_id;
    double lon = 0, lat = 0;  // centroid
    int px_x0 = 0, px_y0 = 0, px_w = 0, px_h = 0;
    double area_m2 = 0;
    double brightness = 0;  // mean of the three base channels
    bool bright_roof = false;
    int neighbors_50m = 0;
    double latent_kwh = 0;
    Month connection{};
    bool shifted_footprint = false;
};

inline TierLabel oracle_tier(const BuildingTruth& b) { return assign_label(b.latent_kwh); }

struct WorldTruth {
    std::vector<BuildingTruth> buildings;
    std::string biased_county_id;
    int n_low = 0, n_high = 0, n_mid = 0;
    std::string out_dir;
};

namespace detail {

struct PlacedRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

inline bool rects_clash(const PlacedRect& a, const PlacedRect& b, int gap) {
    return a.x0 - gap < b.x0 + b.w && b.x0 - gap < a.x0 + a.w && a.y0 - gap < b.y0 + b.h &&
           b.y0 - gap < a.y0 + a.h;
}

inline uint8_t clamp_byte(double v) {
    return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
}

// 2-category group: {finished, other}; 3-category: {finished, 60/40 remainder}.
inline void fill_group(std::array<double, data::kCensusDim>& vec, const data::CensusGroup& g,
                       double finished, int finished_slot) {
    const double rest = 1.0 - finished;
    if (g.count == 2) {
        vec[static_cast<size_t>(g.first + finished_slot)] = finished;
        vec[static_cast<size_t>(g.first + (1 - finished_slot))] = rest;
    } else {
        int other[2], k = 0;
        for (int i = 0; i < 3; ++i)
            if (i != finished_slot) other[k++] = i;
        vec[static_cast<size_t>(g.first + finished_slot)] = finished;
        vec[static_cast<size_t>(g.first + other[0])] = rest * 0.6;
        vec[static_cast<size_t>(g.first + other[1])] = rest * 0.4;
    }
}

}  // namespace detail

// Deterministic world synthesis: per-ward derived seeds drawn in a fixed
// order, outputs merged in ward-id order. Writes every file the loaders
// consume plus the ground truth:
//   wards.csv, rasters/w####.tif(+.json), footprints.geojson, billing.csv,
//   census.csv, viirs.csv, viirs_grid.json, survey.csv, ground_truth.csv,
//   world.json
inline WorldTruth generate_world(const WorldSpec& spec, const std::string& out_dir) {
    if (spec.n_counties < 1 || spec.wards_per_county < 1 || spec.buildings_per_ward < 1)
        throw InvalidConfig("world needs at least one county, ward, and building");
    if (spec.raster_size < 2 * kPatchSize)
        throw InvalidConfig("raster too small for patch extraction margins");
    if (spec.n_connection_years < 1) throw InvalidConfig("need at least one connection year");

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "rasters");

    const int n_wards = spec.n_counties * spec.wards_per_county;
    const double dpx = spec.meters_per_pixel() * kDegPerMeter;
    const double ward_slot_deg = 0.01;  // disjoint 1.1 km slots on one latitude row

    WorldTruth truth;
    truth.out_dir = out_dir;
    if (spec.survey_biased_county) truth.biased_county_id = "c00";

    std::vector<double> county_wealth(static_cast<size_t>(spec.n_counties));
    for (int c = 0; c < spec.n_counties; ++c) {
        Rng crng(derive_seed(spec.seed, 0xc072u, static_cast<uint64_t>(c)));
        county_wealth[static_cast<size_t>(c)] = crng.uniform(-1.0, 1.0);
    }

    data::CsvWriter wards_csv((fs::path(out_dir) / "wards.csv").string());
    wards_csv.row({"ward_id", "constituency_id", "county_id", "raster"});
    data::CsvWriter billing_csv((fs::path(out_dir) / "billing.csv").string());
    billing_csv.row({"customer_id", "building_id", "lon", "lat", "connection_month",
                     "bill_month", "kwh"});
    data::CsvWriter census_csv((fs::path(out_dir) / "census.csv").string());
    census_csv.row({"ward_id", "indicator_name", "fraction"});
    data::CsvWriter viirs_csv((fs::path(out_dir) / "viirs.csv").string());
    viirs_csv.row({"cell_id", "year", "radiance"});
    nlohmann::json features = nlohmann::json::array();

    const int margin = kPatchSize / 2 + 8;
    int building_counter = 0;

    for (int w = 0; w < n_wards; ++w) {
        const int county = w / spec.wards_per_county;
        const int ward_in_county = w % spec.wards_per_county;
        const int constituency = county * ((spec.wards_per_county + 1) / 2) + ward_in_county / 2;
        char ward_id[16], county_id[16], con_id[16];
        std::snprintf(ward_id, sizeof(ward_id), "w%04d", w);
        std::snprintf(county_id, sizeof(county_id), "c%02d", county);
        std::snprintf(con_id, sizeof(con_id), "q%03d", constituency);
        const double cw = county_wealth[static_cast<size_t>(county)];

        Rng rng(derive_seed(spec.seed, 0x3a9du, static_cast<uint64_t>(w)));

        // scene canvas with textured background
        data::Raster raster;
        raster.img = data::make_image(spec.raster_size, spec.raster_size, 3);
        raster.geo.origin_lon = ward_slot_deg * w;
        raster.geo.origin_lat = 0.0;
        raster.geo.deg_per_px_x = dpx;
        raster.geo.deg_per_px_y = dpx;
        raster.geo.valid = true;
        raster.acquisition = Month{spec.acquisition_year, 6};
        raster.meters_per_pixel = spec.meters_per_pixel();

        const double phase = rng.uniform(0.0, 6.28318);
        for (int y = 0; y < spec.raster_size; ++y)
            for (int x = 0; x < spec.raster_size; ++x) {
                const double wave = 9.0 * std::sin(0.031 * x + phase) +
                                    7.0 * std::cos(0.043 * y - phase);
                const int shared = rng.uniform_int(-16, 16);
                const double base[3] = {104, 112, 82};
                for (int c = 0; c < 3; ++c)
                    raster.img.at(y, x, c) = detail::clamp_byte(
                        base[c] + wave + shared + rng.uniform_int(-5, 5));
            }

        // two clusters per ward: one dense, one sparse
        struct Cluster {
            double cx, cy, sigma;
        };
        Cluster clusters[2];
        for (int k = 0; k < 2; ++k)
            clusters[k] = {rng.uniform(margin + 20.0, spec.raster_size - margin - 20.0),
                           rng.uniform(margin + 20.0, spec.raster_size - margin - 20.0),
                           k == 0 ? 22.0 : 48.0};

        const double bright_rate =
            std::clamp(0.5 + 0.30 * cw + rng.normal(0.0, 0.12), 0.08, 0.92);

        std::vector<detail::PlacedRect> placed;
        std::vector<BuildingTruth> ward_buildings;
        for (int b = 0; b < spec.buildings_per_ward; ++b) {
            BuildingTruth bt;
            char bid[16];
            std::snprintf(bid, sizeof(bid), "b%05d", building_counter + b);
            bt.building_id = bid;
            bt.ward_id = ward_id;
            bt.county_id = county_id;
            bt.constituency_id = con_id;

            bt.bright_roof = rng.bernoulli(bright_rate);
            const RoofPalette& pal = bt.bright_roof ? spec.bright : spec.dark;
            std::array<int, 3> color;
            double bsum = 0;
            for (int c = 0; c < 3; ++c) {
                color[static_cast<size_t>(c)] = rng.uniform_int(pal.lo[static_cast<size_t>(c)],
                                                                pal.hi[static_cast<size_t>(c)]);
                bsum += color[static_cast<size_t>(c)];
            }
            bt.brightness = bsum / 3.0;

            const double shift = bt.bright_roof ? spec.area_wealth_shift : -spec.area_wealth_shift;
            const double area = rng.lognormal(spec.area_mu + shift, spec.area_sigma);
            const double aspect = rng.uniform(0.6, 1.6);
            const double mpp = spec.meters_per_pixel();
            const int wpx = std::max(
                3, static_cast<int>(std::lround(std::sqrt(area * aspect) / mpp)));
            const int hpx = std::max(
                3, static_cast<int>(std::lround(area / (wpx * mpp * mpp))));
            bt.area_m2 = static_cast<double>(wpx) * hpx * mpp * mpp;  // pixel-exact

            const int use_dense = rng.bernoulli(bt.bright_roof ? 0.7 : 0.3) ? 0 : 1;
            detail::PlacedRect rect;
            for (int attempt = 0; attempt < 40; ++attempt) {
                const Cluster& cl = clusters[use_dense];
                const double cx =
                    std::clamp(cl.cx + rng.normal(0.0, cl.sigma), static_cast<double>(margin),
                               static_cast<double>(spec.raster_size - margin));
                const double cy =
                    std::clamp(cl.cy + rng.normal(0.0, cl.sigma), static_cast<double>(margin),
                               static_cast<double>(spec.raster_size - margin));
                rect = {std::clamp(static_cast<int>(std::lround(cx)) - wpx / 2, 0,
                                   spec.raster_size - wpx),
                        std::clamp(static_cast<int>(std::lround(cy)) - hpx / 2, 0,
                                   spec.raster_size - hpx),
                        wpx, hpx};
                bool ok = true;
                for (const auto& p : placed)
                    if (detail::rects_clash(rect, p, 3)) {
                        ok = false;
                        break;
                    }
                if (ok) break;
            }
            placed.push_back(rect);

            for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
                for (int x = rect.x0; x < rect.x0 + rect.w; ++x)
                    for (int c = 0; c < 3; ++c)
                        raster.img.at(y, x, c) = detail::clamp_byte(
                            color[static_cast<size_t>(c)] + rng.uniform_int(-10, 10));

            bt.px_x0 = rect.x0;
            bt.px_y0 = rect.y0;
            bt.px_w = rect.w;
            bt.px_h = rect.h;
            const int ccol = rect.x0 + rect.w / 2;
            const int crow = rect.y0 + rect.h / 2;
            bt.lon = raster.lon_of_col_center(ccol);
            bt.lat = raster.lat_of_row_center(crow);
            ward_buildings.push_back(std::move(bt));
        }

        // neighborhood density within 50 m, then the consumption rule
        for (size_t i = 0; i < ward_buildings.size(); ++i) {
            int n = 0;
            for (size_t j = 0; j < ward_buildings.size(); ++j) {
                if (i == j) continue;
                const double ddx = (ward_buildings[i].px_x0 + ward_buildings[i].px_w / 2.0) -
                                   (ward_buildings[j].px_x0 + ward_buildings[j].px_w / 2.0);
                const double ddy = (ward_buildings[i].px_y0 + ward_buildings[i].px_h / 2.0) -
                                   (ward_buildings[j].px_y0 + ward_buildings[j].px_h / 2.0);
                if (std::sqrt(ddx * ddx + ddy * ddy) * spec.meters_per_pixel() <= 50.0) ++n;
            }
            ward_buildings[i].neighbors_50m = n;
        }
        for (auto& bt : ward_buildings)
            bt.latent_kwh = latent_rule(spec, bt.area_m2, bt.brightness, bt.neighbors_50m,
                                        spec.noise_sd > 0 ? rng.normal(0.0, spec.noise_sd) : 0.0);

        // adoption order: high scores connect first
        std::vector<size_t> order(ward_buildings.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::vector<double> score(ward_buildings.size());
        for (size_t i = 0; i < score.size(); ++i)
            score[i] = spec.adoption_bias * (ward_buildings[i].latent_kwh / 30.0) +
                       rng.normal(0.0, spec.adoption_noise);
        std::stable_sort(order.begin(), order.end(),
                         [&score](size_t a, size_t b) { return score[a] > score[b]; });
        for (size_t rank = 0; rank < order.size(); ++rank) {
            const int year_idx = static_cast<int>(rank * static_cast<size_t>(
                                                             spec.n_connection_years) /
                                                  order.size());
            ward_buildings[order[rank]].connection =
                Month{spec.first_connection_year + year_idx, rng.uniform_int(1, 12)};
        }

        // raster + ward index row
        char raster_name[32];
        std::snprintf(raster_name, sizeof(raster_name), "rasters/w%04d.tif", w);
        data::save_raster((fs::path(out_dir) / raster_name).string(), raster);
        wards_csv.row({ward_id, con_id, county_id, raster_name});

        // billing: a ramp year then stable months with +/-15% noise
        for (const auto& bt : ward_buildings) {
            const std::string customer = "u" + bt.building_id.substr(1);
            for (int k = 0; k < spec.bills_months; ++k) {
                const Month m = bt.connection.plus_months(k);
                const double ramp = k < 3 ? 0.35 : (k < 12 ? 0.75 : 1.0);
                const double kwh = std::max(
                    0.0, bt.latent_kwh * ramp *
                             (1.0 + rng.uniform(-spec.billing_noise, spec.billing_noise)));
                billing_csv.row({customer, bt.building_id, data::num(bt.lon, 12),
                                 data::num(bt.lat, 12), format_month(bt.connection),
                                 format_month(m), data::num(kwh)});
            }
        }

        // footprints; a slice of them may be misaligned on purpose
        for (auto& bt : ward_buildings) {
            bt.shifted_footprint = rng.bernoulli(spec.footprint_shift_rate);
            const int dx = bt.shifted_footprint ? spec.footprint_shift_px : 0;
            const double lon0 = raster.geo.origin_lon + (bt.px_x0 + dx) * dpx;
            const double lon1 = raster.geo.origin_lon + (bt.px_x0 + dx + bt.px_w) * dpx;
            const double lat0 = raster.geo.origin_lat - bt.px_y0 * dpx;
            const double lat1 = raster.geo.origin_lat - (bt.px_y0 + bt.px_h) * dpx;
            nlohmann::json f;
            f["type"] = "Feature";
            f["properties"] = {{"building_id", bt.building_id}, {"ward_id", bt.ward_id}};
            f["geometry"] = {
                {"type", "Polygon"},
                {"coordinates",
                 nlohmann::json::array({nlohmann::json::array(
                     {nlohmann::json::array({lon0, lat0}), nlohmann::json::array({lon1, lat0}),
                      nlohmann::json::array({lon1, lat1}), nlohmann::json::array({lon0, lat1}),
                      nlohmann::json::array({lon0, lat0})})})}};
            features.push_back(std::move(f));
        }

        // census: the roof group reports the generated bright fraction exactly,
        // other groups follow it with noise
        int n_bright = 0;
        for (const auto& bt : ward_buildings) n_bright += bt.bright_roof ? 1 : 0;
        const double f_bright =
            static_cast<double>(n_bright) / static_cast<double>(ward_buildings.size());
        Rng census_rng(derive_seed(spec.seed, 0xce45u, static_cast<uint64_t>(w)));
        std::array<double, data::kCensusDim> vec{};
        for (const auto& g : data::census_groups()) {
            const std::string name = g.name;
            if (name == "rooftop_material") {
                detail::fill_group(vec, g, f_bright, 0);
            } else {
                const double v = std::clamp(
                    0.55 * f_bright + 0.225 + census_rng.normal(0.0, 0.18), 0.02, 0.98);
                detail::fill_group(vec, g, v, name == "water_source" ? 1 : 0);
            }
        }
        for (int i = 0; i < data::kCensusDim; ++i)
            census_csv.row({ward_id, data::census_indicator_names()[static_cast<size_t>(i)],
                            data::num(vec[static_cast<size_t>(i)], 12)});

        // nightlights track electrified density with noise on top
        Rng viirs_rng(derive_seed(spec.seed, 0x1177u, static_cast<uint64_t>(w)));
        const int last_year = spec.first_connection_year + spec.n_connection_years - 1;
        for (int year = spec.first_connection_year; year <= last_year; ++year) {
            int connected = 0;
            for (const auto& bt : ward_buildings) connected += bt.connection.year <= year ? 1 : 0;
            const double frac =
                static_cast<double>(connected) / static_cast<double>(ward_buildings.size());
            const double radiance =
                0.08 + 2.2 * frac + std::abs(viirs_rng.normal(0.0, 0.35));
            viirs_csv.row({std::to_string(w), std::to_string(year), data::num(radiance)});
        }

        for (auto& bt : ward_buildings) truth.buildings.push_back(std::move(bt));
        building_counter += spec.buildings_per_ward;
    }
    wards_csv.close();
    billing_csv.close();
    census_csv.close();
    viirs_csv.close();

    {
        nlohmann::json fc;
        fc["type"] = "FeatureCollection";
        fc["features"] = std::move(features);
        std::ofstream f((fs::path(out_dir) / "footprints.geojson").string());
        if (!f) throw IoError("cannot write footprints.geojson");
        f << fc.dump(1) << "\n";
    }
    {
        nlohmann::json grid;
        grid["origin_lon"] = 0.0;
        grid["origin_lat"] = 0.0;
        grid["cell_deg"] = ward_slot_deg;
        grid["ncols"] = n_wards;
        grid["nrows"] = 1;
        grid["first_year"] = spec.first_connection_year;
        grid["last_year"] = spec.first_connection_year + spec.n_connection_years - 1;
        std::ofstream f((fs::path(out_dir) / "viirs_grid.json").string());
        if (!f) throw IoError("cannot write viirs_grid.json");
        f << grid.dump(2) << "\n";
    }

    // survey: weighted county samples of reported consumption; the biased
    // county under-reports by a fixed factor
    {
        data::CsvWriter survey_csv((fs::path(out_dir) / "survey.csv").string());
        survey_csv.row({"county_id", "household_id", "reported_kwh", "sample_weight"});
        std::map<std::string, std::vector<const BuildingTruth*>> by_county;
        for (const auto& bt : truth.buildings) by_county[bt.county_id].push_back(&bt);
        int household_counter = 0;
        int county_idx = 0;
        for (const auto& [county_id, buildings] : by_county) {
            Rng srng(derive_seed(spec.seed, 0x5c7eu, static_cast<uint64_t>(county_idx)));
            std::vector<size_t> idx(buildings.size());
            std::iota(idx.begin(), idx.end(), size_t{0});
            srng.shuffle(idx);
            const size_t take = std::min<size_t>(static_cast<size_t>(spec.n_survey_per_county),
                                                 buildings.size());
            const bool biased = county_id == truth.biased_county_id;
            for (size_t i = 0; i < take; ++i) {
                const double factor = biased ? spec.survey_bias_factor : 1.0;
                const double reported = buildings[idx[i]]->latent_kwh * factor *
                                        std::exp(srng.normal(0.0, 0.08));
                char hid[16];
                std::snprintf(hid, sizeof(hid), "s%05d", household_counter++);
                survey_csv.row({county_id, hid, data::num(reported),
                                data::num(srng.uniform(0.6, 1.8))});
            }
            ++county_idx;
        }
        survey_csv.close();
    }

    {
        data::CsvWriter gt_csv((fs::path(out_dir) / "ground_truth.csv").string());
        gt_csv.row({"building_id", "ward_id", "constituency_id", "county_id", "lon", "lat",
                    "px_x0", "px_y0", "px_w", "px_h", "area_m2", "brightness", "bright_roof",
                    "neighbors_50m", "latent_kwh", "connection_month", "tier",
                    "shifted_footprint"});
        for (const auto& bt : truth.buildings) {
            const TierLabel tier = oracle_tier(bt);
            if (tier == TierLabel::Low) ++truth.n_low;
            else if (tier == TierLabel::High) ++truth.n_high;
            else ++truth.n_mid;
            gt_csv.row({bt.building_id, bt.ward_id, bt.constituency_id, bt.county_id,
                        data::num(bt.lon, 12), data::num(bt.lat, 12), std::to_string(bt.px_x0),
                        std::to_string(bt.px_y0), std::to_string(bt.px_w),
                        std::to_string(bt.px_h), data::num(bt.area_m2), data::num(bt.brightness),
                        bt.bright_roof ? "1" : "0", std::to_string(bt.neighbors_50m),
                        data::num(bt.latent_kwh), format_month(bt.connection), tier_name(tier),
                        bt.shifted_footprint ? "1" : "0"});
        }
        gt_csv.close();
    }

    {
        const int total = static_cast<int>(truth.buildings.size());
        nlohmann::json j;
        j["seed"] = spec.seed;
        j["n_buildings"] = total;
        j["tier_counts"] = {{"low", truth.n_low}, {"high", truth.n_high}, {"mid", truth.n_mid}};
        j["tier_shares"] = {{"low", static_cast<double>(truth.n_low) / total},
                            {"high", static_cast<double>(truth.n_high) / total},
                            {"mid", static_cast<double>(truth.n_mid) / total}};
        j["biased_county"] = truth.biased_county_id;
        j["rule"] = {{"a_area", spec.a_area},
                     {"b_brightness", spec.b_brightness},
                     {"c_density", spec.c_density},
                     {"noise_sd", spec.noise_sd}};
        std::ofstream f((fs::path(out_dir) / "world.json").string());
        if (!f) throw IoError("cannot write world.json");
        f << j.dump(2) << "\n";
    }

    return truth;
}

}  // namespace demandscope::synth
