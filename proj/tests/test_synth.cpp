#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "demandscope/data/billing.hpp"
#include "demandscope/data/census.hpp"
#include "demandscope/data/samples.hpp"
#include "demandscope/data/viirs.hpp"
#include "demandscope/eval/county.hpp"
#include "demandscope/seg/rasterize.hpp"
#include "demandscope/synth/world.hpp"

using namespace demandscope;
using Catch::Approx;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("demandscope_synth_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

synth::WorldSpec small_spec(uint64_t seed = 7) {
    synth::WorldSpec spec;
    spec.seed = seed;
    spec.n_counties = 2;
    spec.wards_per_county = 2;
    spec.buildings_per_ward = 10;
    return spec;
}

std::vector<uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                                std::istreambuf_iterator<char>());
}

std::map<std::string, const synth::BuildingTruth*> by_id(const synth::WorldTruth& truth) {
    std::map<std::string, const synth::BuildingTruth*> m;
    for (const auto& b : truth.buildings) m[b.building_id] = &b;
    return m;
}

}  // namespace

TEST_CASE("same world spec twice yields byte-identical outputs", "[synth]") {
    TempDir a, b;
    const synth::WorldSpec spec = small_spec();
    const synth::WorldTruth ta = synth::generate_world(spec, a.path.string());
    const synth::WorldTruth tb = synth::generate_world(spec, b.path.string());

    REQUIRE(ta.buildings.size() == tb.buildings.size());
    for (size_t i = 0; i < ta.buildings.size(); ++i) {
        CHECK(ta.buildings[i].building_id == tb.buildings[i].building_id);
        CHECK(ta.buildings[i].latent_kwh == tb.buildings[i].latent_kwh);
    }

    std::set<std::string> names_a, names_b;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.path))
        if (e.is_regular_file())
            names_a.insert(std::filesystem::relative(e.path(), a.path).string());
    for (const auto& e : std::filesystem::recursive_directory_iterator(b.path))
        if (e.is_regular_file())
            names_b.insert(std::filesystem::relative(e.path(), b.path).string());
    REQUIRE(names_a == names_b);
    REQUIRE(names_a.count("wards.csv") == 1);
    REQUIRE(names_a.count("rasters/w0000.tif") == 1);
    for (const auto& name : names_a) CHECK(slurp(a.path / name) == slurp(b.path / name));

    // a different seed must actually change the world
    synth::WorldSpec other = small_spec(8);
    TempDir c;
    synth::generate_world(other, c.path.string());
    CHECK(slurp(a.path / "billing.csv") != slurp(c.path / "billing.csv"));
}

TEST_CASE("generated world round-trips through every loader", "[synth]") {
    TempDir dir;
    const synth::WorldSpec spec = small_spec();
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    REQUIRE(truth.buildings.size() == 40);

    const auto wards = data::load_ward_index(dir.file("wards.csv"));
    REQUIRE(wards.size() == 4);
    CHECK(wards[0].ward_id == "w0000");
    CHECK(wards[0].county_id == "c00");
    CHECK(wards[3].county_id == "c01");

    const data::SceneIndex scenes(wards);
    const auto billing = data::load_billing_csv(dir.file("billing.csv"));
    REQUIRE(billing.size() == 40);
    const data::CensusTable census = data::load_census_csv(dir.file("census.csv"));
    CHECK(census.group_warnings.empty());
    const data::ViirsTable viirs =
        data::load_viirs(dir.file("viirs.csv"), dir.file("viirs_grid.json"));

    const auto assembled = data::assemble_samples(billing, scenes, &census, &viirs);
    CHECK(assembled.drops.total() == 0);
    REQUIRE(assembled.samples.size() == 40);

    const auto truth_by_id = by_id(truth);
    int label_agree = 0;
    for (const auto& s : assembled.samples) {
        const auto* bt = truth_by_id.at(s.building_id);
        CHECK(s.ward_id == bt->ward_id);
        CHECK(s.constituency_id == bt->constituency_id);
        CHECK(s.county_id == bt->county_id);
        CHECK(s.connection_year == bt->connection.year);
        REQUIRE(s.census.has_value());
        REQUIRE(s.nightlight.has_value());
        // billing noise averages out over the stable window
        CHECK(std::abs(s.stable_kwh - bt->latent_kwh) <=
              std::max(0.15 * bt->latent_kwh, 1.0));
        if (s.label == synth::oracle_tier(*bt)) ++label_agree;
    }
    CHECK(label_agree >= 32);

    // survey takes are capped by county size: 2 wards x 10 buildings each
    const auto survey = eval::load_survey(dir.file("survey.csv"));
    CHECK(survey.size() == 40);

    const auto footprints = seg::load_footprints_geojson(dir.file("footprints.geojson"));
    REQUIRE(footprints.size() == 40);
}

TEST_CASE("census roof fractions equal the generated bright-roof share", "[synth]") {
    TempDir dir;
    const synth::WorldTruth truth = synth::generate_world(small_spec(3), dir.path.string());
    const data::CensusTable census = data::load_census_csv(dir.file("census.csv"));
    REQUIRE(census.group_warnings.empty());

    std::map<std::string, std::pair<int, int>> ward_counts;  // bright, total
    for (const auto& b : truth.buildings) {
        auto& [br, tot] = ward_counts[b.ward_id];
        br += b.bright_roof ? 1 : 0;
        ++tot;
    }
    const int roof_first = data::census_groups().back().first;
    REQUIRE(std::string(data::census_groups().back().name) == "rooftop_material");
    for (const auto& [ward, counts] : ward_counts) {
        const auto& vec = census.ward(ward);
        const double f = static_cast<double>(counts.first) / counts.second;
        CHECK(vec[static_cast<size_t>(roof_first)] == Approx(f).margin(1e-9));
        // every group resolves to a proper distribution
        for (const auto& g : data::census_groups()) {
            double sum = 0;
            for (int i = 0; i < g.count; ++i) sum += vec[static_cast<size_t>(g.first + i)];
            CHECK(sum == Approx(1.0).margin(1e-6));
        }
    }
}

TEST_CASE("adoption bias front-loads the heavy consumers", "[synth]") {
    TempDir dir;
    synth::WorldSpec spec;
    spec.seed = 21;
    spec.n_counties = 1;
    spec.wards_per_county = 2;
    spec.buildings_per_ward = 30;
    spec.adoption_bias = 1.0;
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());

    std::map<int, std::pair<double, int>> by_year;
    for (const auto& b : truth.buildings) {
        auto& [sum, n] = by_year[b.connection.year];
        sum += b.latent_kwh;
        ++n;
    }
    REQUIRE(by_year.size() == 5);
    for (const auto& [year, agg] : by_year) {
        CHECK(year >= spec.first_connection_year);
        CHECK(year <= spec.first_connection_year + 4);
        CHECK(agg.second >= 6);
    }
    const double first = by_year[spec.first_connection_year].first /
                         by_year[spec.first_connection_year].second;
    const double last = by_year[spec.first_connection_year + 4].first /
                        by_year[spec.first_connection_year + 4].second;
    CHECK(first > last + 15.0);
}

TEST_CASE("tier mix at defaults is near the design target", "[synth]") {
    TempDir dir;
    synth::WorldSpec spec;
    spec.seed = 4;
    spec.n_counties = 8;
    spec.wards_per_county = 2;
    spec.buildings_per_ward = 12;
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    const double n = static_cast<double>(truth.buildings.size());
    CHECK(truth.n_low / n > 0.30);
    CHECK(truth.n_low / n < 0.60);
    CHECK(truth.n_high / n > 0.25);
    CHECK(truth.n_high / n < 0.58);
    CHECK(truth.n_mid / n > 0.03);
    CHECK(truth.n_mid / n < 0.30);
    CHECK(truth.n_low + truth.n_high + truth.n_mid == static_cast<int>(n));
}

TEST_CASE("consumption rule is exact and difficulty knobs move the right dials", "[synth]") {
    synth::WorldSpec spec;
    spec.a_area = 1.0;
    spec.b_brightness = 0.0;
    spec.c_density = 0.0;
    CHECK(synth::latent_rule(spec, 20.0, 200.0, 9, 0.0) == Approx(20.0));
    CHECK(assign_label(synth::latent_rule(spec, 20.0, 0, 0, 0)) == TierLabel::Low);
    CHECK(assign_label(synth::latent_rule(spec, 70.0, 0, 0, 0)) == TierLabel::High);
    CHECK(synth::latent_rule(spec, 5.0, 0, 0, -50.0) == 0.0);

    const synth::WorldSpec base;
    const synth::WorldSpec sep = synth::difficulty_knobs(base, synth::Difficulty::Separable);
    CHECK(sep.noise_sd == 0.0);
    CHECK(sep.footprint_shift_rate == 0.0);
    for (size_t c = 0; c < 3; ++c) CHECK(sep.dark.hi[c] < sep.bright.lo[c]);

    const synth::WorldSpec real = synth::difficulty_knobs(base, synth::Difficulty::Realistic);
    CHECK(real.noise_sd == base.noise_sd);
    CHECK(real.b_brightness == base.b_brightness);

    const synth::WorldSpec adv = synth::difficulty_knobs(base, synth::Difficulty::Adversarial);
    CHECK(adv.noise_sd > base.noise_sd);
    CHECK(adv.footprint_shift_rate == Approx(0.2));
    for (size_t c = 0; c < 3; ++c) CHECK(adv.dark.hi[c] > adv.bright.lo[c]);

    CHECK(synth::difficulty_from_name("separable") == synth::Difficulty::Separable);
    CHECK(synth::difficulty_from_name("realistic") == synth::Difficulty::Realistic);
    CHECK(synth::difficulty_from_name("adversarial") == synth::Difficulty::Adversarial);
    CHECK_THROWS_AS(synth::difficulty_from_name("easy"), InvalidConfig);
    CHECK(std::string(synth::difficulty_name(synth::Difficulty::Adversarial)) == "adversarial");
}

TEST_CASE("footprints rasterize onto the rendered roofs exactly", "[synth]") {
    TempDir dir;
    const synth::WorldSpec spec = small_spec(9);
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    const auto wards = data::load_ward_index(dir.file("wards.csv"));
    const auto footprints = seg::load_footprints_geojson(dir.file("footprints.geojson"));
    const data::Raster raster = data::load_raster(wards[0].raster_path);

    int checked = 0;
    for (const auto& bt : truth.buildings) {
        if (bt.ward_id != "w0000") continue;
        const int cx = bt.px_x0 + bt.px_w / 2;
        const int cy = bt.px_y0 + bt.px_h / 2;
        const auto mask = seg::rasterize_footprints(raster, cx, cy, kPatchSize, footprints);

        // reconstruct the expected mask from the truth rectangles
        std::vector<uint8_t> want(static_cast<size_t>(kPatchSize) * kPatchSize, 0);
        const int half = kPatchSize / 2;
        for (const auto& other : truth.buildings) {
            if (other.ward_id != "w0000") continue;
            for (int y = other.px_y0; y < other.px_y0 + other.px_h; ++y)
                for (int x = other.px_x0; x < other.px_x0 + other.px_w; ++x) {
                    const int py = y - (cy - half);
                    const int px = x - (cx - half);
                    if (py >= 0 && py < kPatchSize && px >= 0 && px < kPatchSize)
                        want[static_cast<size_t>(py) * kPatchSize + px] = 1;
                }
        }
        REQUIRE(mask == want);

        // rendered pixels inside the rectangle stay near the base roof color
        double inside = 0;
        int n_inside = 0;
        for (int y = bt.px_y0; y < bt.px_y0 + bt.px_h; ++y)
            for (int x = bt.px_x0; x < bt.px_x0 + bt.px_w; ++x)
                for (int c = 0; c < 3; ++c) {
                    inside += raster.img.at(y, x, c);
                    ++n_inside;
                }
        CHECK(std::abs(inside / n_inside - bt.brightness) < 8.0);
        ++checked;
    }
    REQUIRE(checked == 10);
}

TEST_CASE("misaligned footprints shift in the geojson but not in the truth", "[synth]") {
    TempDir dir;
    synth::WorldSpec spec = small_spec(5);
    spec.footprint_shift_rate = 1.0;
    spec.footprint_shift_px = 5;
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    const auto wards = data::load_ward_index(dir.file("wards.csv"));
    const auto footprints = seg::load_footprints_geojson(dir.file("footprints.geojson"));
    const data::Raster raster = data::load_raster(wards[0].raster_path);

    std::map<std::string, const seg::Footprint*> fp_by_id;
    for (const auto& f : footprints) fp_by_id[f.building_id] = &f;
    for (const auto& bt : truth.buildings) {
        CHECK(bt.shifted_footprint);
        if (bt.ward_id != "w0000") continue;
        const auto* fp = fp_by_id.at(bt.building_id);
        const double true_left = raster.geo.origin_lon + bt.px_x0 * raster.geo.deg_per_px_x;
        CHECK(fp->min_lon ==
              Approx(true_left + 5 * raster.geo.deg_per_px_x).margin(1e-12));
    }
}

TEST_CASE("nightlights rise with electrified share and attach cleanly", "[synth]") {
    TempDir dir;
    const synth::WorldSpec spec = small_spec(13);
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    const data::ViirsTable viirs =
        data::load_viirs(dir.file("viirs.csv"), dir.file("viirs_grid.json"));
    CHECK(viirs.first_year == spec.first_connection_year);
    CHECK(viirs.last_year == spec.first_connection_year + 4);

    double delta = 0;
    for (int cell = 0; cell < 4; ++cell) {
        const double lo = viirs.radiance.at({cell, viirs.first_year});
        const double hi = viirs.radiance.at({cell, viirs.last_year});
        delta += hi - lo;
    }
    CHECK(delta > 0.0);

    for (const auto& bt : truth.buildings)
        CHECK(data::attach_nightlight(bt.lon, bt.lat, bt.connection.year, viirs) >= 0.0);
}

TEST_CASE("survey under-reports only in the flagged county", "[synth]") {
    TempDir dir;
    synth::WorldSpec spec = small_spec(17);
    spec.n_survey_per_county = 30;  // more than the county holds, so every building is sampled
    const synth::WorldTruth truth = synth::generate_world(spec, dir.path.string());
    REQUIRE(truth.biased_county_id == "c00");

    std::map<std::string, std::pair<double, int>> reported;
    const auto survey = eval::load_survey(dir.file("survey.csv"));
    std::set<std::string> household_ids;
    for (const auto& row : survey) {
        auto& [sum, n] = reported[row.county_id];
        sum += row.reported_kwh;
        ++n;
        CHECK(row.sample_weight >= 0.6);
        CHECK(row.sample_weight <= 1.8);
        CHECK(household_ids.insert(row.household_id).second);
    }
    std::map<std::string, std::pair<double, int>> latent;
    for (const auto& b : truth.buildings) {
        auto& [sum, n] = latent[b.county_id];
        sum += b.latent_kwh;
        ++n;
    }
    for (const auto& [county, agg] : reported) {
        REQUIRE(agg.second == 20);
        const double ratio = (agg.first / agg.second) / (latent[county].first /
                                                         latent[county].second);
        if (county == truth.biased_county_id) {
            CHECK(ratio > 0.24);
            CHECK(ratio < 0.37);
        } else {
            CHECK(ratio > 0.85);
            CHECK(ratio < 1.15);
        }
    }
}

TEST_CASE("world summary records counts, shares, and the biased county", "[synth]") {
    TempDir dir;
    const synth::WorldTruth truth = synth::generate_world(small_spec(1), dir.path.string());
    std::ifstream f(dir.file("world.json"));
    REQUIRE(f.good());
    nlohmann::json j;
    f >> j;
    CHECK(j.at("n_buildings").get<int>() == 40);
    CHECK(j.at("biased_county").get<std::string>() == "c00");
    const int low = j.at("tier_counts").at("low").get<int>();
    const int high = j.at("tier_counts").at("high").get<int>();
    const int mid = j.at("tier_counts").at("mid").get<int>();
    CHECK(low + high + mid == 40);
    CHECK(low == truth.n_low);
    CHECK(high == truth.n_high);
    const double share_sum = j.at("tier_shares").at("low").get<double>() +
                             j.at("tier_shares").at("high").get<double>() +
                             j.at("tier_shares").at("mid").get<double>();
    CHECK(share_sum == Approx(1.0));
}
