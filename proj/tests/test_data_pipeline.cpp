#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "demandscope/data/augment.hpp"
#include "demandscope/data/billing.hpp"
#include "demandscope/data/census.hpp"
#include "demandscope/data/normalize.hpp"
#include "demandscope/data/samples.hpp"
#include "demandscope/data/split.hpp"
#include "demandscope/data/viirs.hpp"

using namespace demandscope;
using namespace demandscope::data;
using Catch::Approx;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("demandscope_test_" + std::to_string(::getpid()) + "_" +
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

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    REQUIRE(f.good());
    f << text;
}

BillingRecord record(const std::string& id, Month connection,
                     std::vector<std::pair<Month, double>> bills) {
    BillingRecord r;
    r.customer_id = "c_" + id;
    r.building_id = id;
    r.connection = connection;
    r.bills = std::move(bills);
    return r;
}

// Raster whose red channel encodes column and green encodes row, so patch
// geometry is checkable per pixel. Origin chosen so lon/lat are small numbers.
Raster coord_raster(int w, int h, Month acquisition = {2013, 5}) {
    Raster r;
    r.img = make_image(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            r.img.at(y, x, 0) = static_cast<uint8_t>(x & 0xff);
            r.img.at(y, x, 1) = static_cast<uint8_t>(y & 0xff);
            r.img.at(y, x, 2) = static_cast<uint8_t>((x + y) & 0xff);
        }
    r.geo.origin_lon = 36.0;
    r.geo.origin_lat = -1.0;
    r.geo.deg_per_px_x = kDefaultMetersPerPixel * kDegPerMeter;
    r.geo.deg_per_px_y = kDefaultMetersPerPixel * kDegPerMeter;
    r.geo.valid = true;
    r.acquisition = acquisition;
    r.meters_per_pixel = kDefaultMetersPerPixel;
    return r;
}

Sample labeled_sample(const std::string& id, TierLabel label) {
    Sample s;
    s.building_id = id;
    s.label = label;
    return s;
}

}  // namespace

TEST_CASE("month arithmetic and parsing") {
    Month m{2014, 1};
    CHECK(m.plus_months(12) == Month{2015, 1});
    CHECK(m.plus_months(11) == Month{2014, 12});
    CHECK(m.plus_months(-1) == Month{2013, 12});
    CHECK(format_month(Month{2014, 6}) == "2014-06");
    CHECK(parse_month("2014-06") == Month{2014, 6});
    CHECK_THROWS_AS(parse_month("2014-13"), ParseError);
    CHECK_THROWS_AS(parse_month("201406"), ParseError);
}

TEST_CASE("label boundaries are inclusive at 30 and 60") {
    CHECK(assign_label(30.0) == TierLabel::Low);
    CHECK(assign_label(60.0) == TierLabel::High);
    CHECK(assign_label(45.0) == TierLabel::ExcludedMid);
    CHECK(assign_label(30.0001) == TierLabel::ExcludedMid);
    CHECK(assign_label(59.9999) == TierLabel::ExcludedMid);
    CHECK(assign_label(0.0) == TierLabel::Low);
    CHECK(assign_label(1e6) == TierLabel::High);
    CHECK_THROWS_AS(assign_label(std::nan("")), ParseError);
}

TEST_CASE("stable consumption averages bills from one year after connection") {
    SECTION("plain mean of qualifying bills") {
        auto r = record("b1", {2014, 1},
                        {{{2015, 1}, 10.0}, {{2015, 2}, 20.0}, {{2015, 3}, 30.0}});
        auto sc = compute_stable_consumption(r);
        CHECK(sc.mean_kwh_per_month == Approx(20.0));
        CHECK(sc.n_months_used == 3);
    }
    SECTION("pre-cutoff bills are ignored") {
        auto r = record("b2", {2014, 1}, {{{2014, 6}, 99.0}, {{2015, 2}, 40.0}});
        auto sc = compute_stable_consumption(r);
        CHECK(sc.mean_kwh_per_month == Approx(40.0));
        CHECK(sc.n_months_used == 1);
    }
    SECTION("no qualifying bill") {
        auto r = record("b3", {2014, 1}, {{{2014, 6}, 10.0}, {{2014, 12}, 12.0}});
        CHECK_THROWS_AS(compute_stable_consumption(r), NoStableBills);
    }
    SECTION("cutoff month itself qualifies and zero readings count") {
        auto r = record("b4", {2014, 1}, {{{2015, 1}, 0.0}, {{2015, 2}, 10.0}});
        auto sc = compute_stable_consumption(r);
        CHECK(sc.mean_kwh_per_month == Approx(5.0));
        CHECK(sc.n_months_used == 2);
    }
}

TEST_CASE("billing csv loader validates rows") {
    TempDir dir;
    const std::string header = "customer_id,building_id,lon,lat,connection_month,bill_month,kwh\n";

    SECTION("groups rows per customer and sorts bills") {
        write_text(dir.file("b.csv"), header +
                                          "c1,b1,36.01,-1.01,2014-01,2015-02,20\n"
                                          "c1,b1,36.01,-1.01,2014-01,2015-01,10\n"
                                          "c2,b2,36.02,-1.02,2013-07,2014-07,55\n");
        auto recs = load_billing_csv(dir.file("b.csv"));
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].building_id == "b1");
        CHECK(recs[0].bills.size() == 2);
        CHECK(recs[0].bills[0].first == Month{2015, 1});
        CHECK(recs[0].bills[1].first == Month{2015, 2});
        CHECK(recs[1].connection == Month{2013, 7});
    }
    SECTION("negative kwh rejected with line number") {
        write_text(dir.file("neg.csv"), header + "c1,b1,36,-1,2014-01,2015-01,-3\n");
        CHECK_THROWS_WITH(load_billing_csv(dir.file("neg.csv")),
                          Catch::Matchers::ContainsSubstring(":2"));
    }
    SECTION("non-finite kwh rejected") {
        write_text(dir.file("nan.csv"), header + "c1,b1,36,-1,2014-01,2015-01,nan\n");
        CHECK_THROWS_AS(load_billing_csv(dir.file("nan.csv")), ParseError);
    }
    SECTION("customer spanning two buildings rejected") {
        write_text(dir.file("two.csv"), header +
                                            "c1,b1,36,-1,2014-01,2015-01,5\n"
                                            "c1,b2,36,-1,2014-01,2015-02,5\n");
        CHECK_THROWS_AS(load_billing_csv(dir.file("two.csv")), ParseError);
    }
    SECTION("duplicate bill month rejected") {
        write_text(dir.file("dup.csv"), header +
                                            "c1,b1,36,-1,2014-01,2015-01,5\n"
                                            "c1,b1,36,-1,2014-01,2015-01,6\n");
        CHECK_THROWS_AS(load_billing_csv(dir.file("dup.csv")), ParseError);
    }
    SECTION("multi-customer buildings are dropped") {
        std::vector<BillingRecord> recs;
        recs.push_back(record("b1", {2014, 1}, {{{2015, 1}, 10.0}}));
        recs.push_back(record("b2", {2014, 1}, {{{2015, 1}, 10.0}}));
        recs.back().customer_id = "cA";
        recs.push_back(record("b2", {2014, 1}, {{{2015, 2}, 12.0}}));
        recs.back().customer_id = "cB";
        int dropped = 0;
        auto singles = single_customer_records(recs, &dropped);
        REQUIRE(singles.size() == 1);
        CHECK(singles[0].building_id == "b1");
        CHECK(dropped == 2);
    }
}

TEST_CASE("png roundtrip preserves pixels") {
    TempDir dir;
    Rng rng(11);
    Image im = make_image(37, 23, 3);
    for (auto& p : im.px) p = static_cast<uint8_t>(rng.below(256));
    write_png(dir.file("a.png"), im);
    Image back = read_png(dir.file("a.png"));
    REQUIRE(back.w == im.w);
    REQUIRE(back.h == im.h);
    REQUIRE(back.channels == 3);
    CHECK(back.px == im.px);

    Image gray = make_image(16, 8, 1);
    for (auto& p : gray.px) p = static_cast<uint8_t>(rng.below(256));
    write_png(dir.file("g.png"), gray);
    Image gback = read_png(dir.file("g.png"));
    REQUIRE(gback.channels == 1);
    CHECK(gback.px == gray.px);
}

TEST_CASE("tiff roundtrip preserves pixels and georeference") {
    TempDir dir;
    Rng rng(12);
    Image im = make_image(41, 17, 3);
    for (auto& p : im.px) p = static_cast<uint8_t>(rng.below(256));
    GeoRef geo;
    geo.origin_lon = 36.5;
    geo.origin_lat = -1.25;
    geo.deg_per_px_x = 4.5e-6;
    geo.deg_per_px_y = 4.5e-6;
    geo.valid = true;
    write_tiff(dir.file("a.tif"), im, geo);
    GeoRef back_geo;
    Image back = read_tiff(dir.file("a.tif"), &back_geo);
    REQUIRE(back.w == im.w);
    REQUIRE(back.h == im.h);
    CHECK(back.px == im.px);
    REQUIRE(back_geo.valid);
    CHECK(back_geo.origin_lon == Approx(geo.origin_lon).epsilon(1e-12));
    CHECK(back_geo.origin_lat == Approx(geo.origin_lat).epsilon(1e-12));
    CHECK(back_geo.deg_per_px_x == Approx(geo.deg_per_px_x).epsilon(1e-12));
    CHECK(back_geo.deg_per_px_y == Approx(geo.deg_per_px_y).epsilon(1e-12));
}

TEST_CASE("raster save and load through sidecar") {
    TempDir dir;
    Raster r = coord_raster(40, 30, {2012, 11});

    for (const char* name : {"scene.tif", "scene.png"}) {
        save_raster(dir.file(name), r);
        Raster back = load_raster(dir.file(name));
        CHECK(back.img.px == r.img.px);
        CHECK(back.acquisition == Month{2012, 11});
        CHECK(back.meters_per_pixel == Approx(0.5));
        CHECK(back.geo.origin_lon == Approx(r.geo.origin_lon).epsilon(1e-12));
        CHECK(back.geo.deg_per_px_y == Approx(r.geo.deg_per_px_y).epsilon(1e-12));
    }
    CHECK(sidecar_path(dir.file("scene.tif")) == dir.file("scene.json"));
}

TEST_CASE("patch extraction is centered with a strict margin") {
    Raster r = coord_raster(300, 280);

    SECTION("patch center pixel is the pixel containing the point") {
        const double lon = r.lon_of_col_center(150);
        const double lat = r.lat_of_row_center(140);
        ImagePatch p = extract_patch(r, lon, lat, 128);
        CHECK(p.at(64, 64, 0) == r.img.at(140, 150, 0));
        CHECK(p.at(64, 64, 1) == r.img.at(140, 150, 1));
        CHECK(p.at(0, 0, 0) == r.img.at(140 - 64, 150 - 64, 0));
        CHECK(p.at(127, 127, 1) == r.img.at(140 + 63, 150 + 63, 1));
        CHECK(p.acquisition == r.acquisition);
        CHECK(p.meters_per_pixel == Approx(0.5));
    }
    SECTION("points near the edge are rejected") {
        CHECK_THROWS_AS(extract_patch(r, r.lon_of_col_center(10), r.lat_of_row_center(140), 128),
                        OutOfBounds);
        CHECK_THROWS_AS(extract_patch(r, r.lon_of_col_center(150), r.lat_of_row_center(279), 128),
                        OutOfBounds);
        // exactly enough margin on all sides
        CHECK_NOTHROW(extract_patch(r, r.lon_of_col_center(64), r.lat_of_row_center(64), 128));
        CHECK_THROWS_AS(extract_patch(r, r.lon_of_col_center(63), r.lat_of_row_center(64), 128),
                        OutOfBounds);
    }
    SECTION("extraction is deterministic") {
        const double lon = r.lon_of_col_center(100);
        const double lat = r.lat_of_row_center(120);
        ImagePatch a = extract_patch(r, lon, lat, 128);
        ImagePatch b = extract_patch(r, lon, lat, 128);
        CHECK(a.px == b.px);
    }
    SECTION("chw conversion keeps raw intensities") {
        ImagePatch p = extract_patch(r, r.lon_of_col_center(150), r.lat_of_row_center(140), 128);
        Tensor<float> t = patch_to_chw(p);
        REQUIRE(t.shape == std::vector<int>{3, 128, 128});
        CHECK(t.v[static_cast<size_t>(0) * 128 * 128 + 64 * 128 + 64] ==
              Approx(static_cast<double>(p.at(64, 64, 0))));
    }
}

TEST_CASE("geographic pixel mapping uses floor semantics") {
    Raster r = coord_raster(100, 100);
    const double dx = r.geo.deg_per_px_x;
    CHECK(r.col_of(r.geo.origin_lon) == 0);
    CHECK(r.col_of(r.geo.origin_lon + 0.999 * dx) == 0);
    CHECK(r.col_of(r.geo.origin_lon + 1.001 * dx) == 1);
    CHECK(r.col_of(r.geo.origin_lon - 0.5 * dx) == -1);
    CHECK(r.row_of(r.geo.origin_lat) == 0);
    CHECK(r.row_of(r.geo.origin_lat - 2.5 * r.geo.deg_per_px_y) == 2);
    CHECK(r.col_of(r.lon_of_col_center(7)) == 7);
    CHECK(r.row_of(r.lat_of_row_center(9)) == 9);
}

TEST_CASE("apportionment matches the published split sizes") {
    auto counts = apportion(20000, {0.75, 0.15, 0.10});
    CHECK(counts == std::vector<int>{15000, 3000, 2000});
    counts = apportion(7, {0.75, 0.15, 0.10});
    CHECK(counts[0] + counts[1] + counts[2] == 7);
    counts = apportion(0, {0.75, 0.15, 0.10});
    CHECK(counts == std::vector<int>{0, 0, 0});
}

TEST_CASE("stratified split preserves ratios and is deterministic") {
    std::vector<Sample> samples;
    for (int i = 0; i < 400; ++i)
        samples.push_back(labeled_sample("b" + std::to_string(1000 + i), TierLabel::Low));
    for (int i = 0; i < 600; ++i)
        samples.push_back(labeled_sample("b" + std::to_string(2000 + i), TierLabel::High));

    SplitSet s = stratified_split(samples, {0.75, 0.15, 0.10}, 7);
    CHECK(s.train.size() == 750);
    CHECK(s.val.size() == 150);
    CHECK(s.test.size() == 100);

    auto count_low = [](const std::vector<Sample>& v) {
        return std::count_if(v.begin(), v.end(),
                             [](const Sample& s) { return s.label == TierLabel::Low; });
    };
    CHECK(count_low(s.train) == 300);
    CHECK(count_low(s.val) == 60);
    CHECK(count_low(s.test) == 40);

    SECTION("splits are disjoint and exhaustive") {
        std::set<std::string> seen;
        for (const auto* split : {&s.train, &s.val, &s.test})
            for (const auto& smp : *split) CHECK(seen.insert(smp.building_id).second);
        CHECK(seen.size() == samples.size());
    }
    SECTION("same seed reproduces membership, input order irrelevant") {
        auto shuffled = samples;
        Rng rng(99);
        rng.shuffle(shuffled);
        SplitSet s2 = stratified_split(shuffled, {0.75, 0.15, 0.10}, 7);
        REQUIRE(s2.test.size() == s.test.size());
        for (size_t i = 0; i < s.test.size(); ++i)
            CHECK(s2.test[i].building_id == s.test[i].building_id);
        for (size_t i = 0; i < s.train.size(); ++i)
            CHECK(s2.train[i].building_id == s.train[i].building_id);
    }
    SECTION("different seeds give different memberships") {
        SplitSet s2 = stratified_split(samples, {0.75, 0.15, 0.10}, 8);
        bool any_difference = false;
        for (size_t i = 0; i < s.test.size() && !any_difference; ++i)
            any_difference = s2.test[i].building_id != s.test[i].building_id;
        CHECK(any_difference);
    }
    SECTION("mid-tier samples are rejected") {
        auto bad = samples;
        bad.push_back(labeled_sample("b_mid", TierLabel::ExcludedMid));
        CHECK_THROWS_AS(stratified_split(bad, {0.75, 0.15, 0.10}, 7), InvalidConfig);
    }
    SECTION("tiny strata are rejected") {
        std::vector<Sample> few;
        for (int i = 0; i < 9; ++i)
            few.push_back(labeled_sample("L" + std::to_string(i), TierLabel::Low));
        for (int i = 0; i < 50; ++i)
            few.push_back(labeled_sample("H" + std::to_string(i), TierLabel::High));
        CHECK_THROWS_AS(stratified_split(few, {0.75, 0.15, 0.10}, 7), TooFewSamples);
    }
}

TEST_CASE("augmentation group laws hold") {
    Rng rng(21);
    Tensor<float> patch({3, 32, 32});
    for (auto& v : patch.v) v = static_cast<float>(rng.below(256));

    SECTION("four quarter turns are the identity") {
        AugmentPlan quarter;
        quarter.rot90 = 1;
        Tensor<float> t = patch;
        for (int k = 0; k < 4; ++k) t = apply_augment_nearest(t, quarter);
        CHECK(t.v == patch.v);
    }
    SECTION("flips are involutions") {
        AugmentPlan h;
        h.hflip = true;
        auto t = apply_augment_nearest(apply_augment_nearest(patch, h), h);
        CHECK(t.v == patch.v);
        AugmentPlan v;
        v.vflip = true;
        t = apply_augment_nearest(apply_augment_nearest(patch, v), v);
        CHECK(t.v == patch.v);
    }
    SECTION("identity plan is exact even through bilinear sampling") {
        AugmentPlan id;
        auto t = apply_augment(patch, id);
        CHECK(t.v == patch.v);
    }
    SECTION("zoom keeps shape, changes content, fixes the center") {
        AugmentPlan z;
        z.zoom = 1.15;
        auto t = apply_augment(patch, z);
        REQUIRE(t.shape == patch.shape);
        CHECK(t.v != patch.v);
        // center pixel of an odd-size patch is the zoom fixed point
        Tensor<float> odd({1, 31, 31});
        for (auto& v : odd.v) v = static_cast<float>(rng.below(256));
        auto tz = apply_augment(odd, z);
        CHECK(tz.v[15 * 31 + 15] == Approx(odd.v[15 * 31 + 15]).margin(1e-4));
    }
    SECTION("nearest variant keeps masks binary") {
        Tensor<float> mask({1, 32, 32});
        for (auto& v : mask.v) v = rng.bernoulli(0.3) ? 1.0f : 0.0f;
        Rng arng(5);
        auto plan = random_augment_plan(arng);
        auto t = apply_augment_nearest(mask, plan);
        for (float v : t.v) CHECK((v == 0.0f || v == 1.0f));
    }
    SECTION("plans drawn from the same seed coincide") {
        Rng a(77), b(77);
        for (int i = 0; i < 10; ++i) {
            auto pa = random_augment_plan(a);
            auto pb = random_augment_plan(b);
            CHECK(pa.hflip == pb.hflip);
            CHECK(pa.vflip == pb.vflip);
            CHECK(pa.rot90 == pb.rot90);
            CHECK(pa.zoom == pb.zoom);
            CHECK(pa.zoom >= 1.0);
            CHECK(pa.zoom <= 1.15);
        }
    }
}

TEST_CASE("normalization uses train statistics only") {
    SECTION("constant channel normalizes to zero with degenerate std") {
        ImagePatch p;
        p.size = 8;
        p.px.assign(8 * 8 * 3, 128);
        std::vector<ImagePatch> train = {p};
        ChannelStats st = compute_channel_stats(train);
        CHECK(st.n_degenerate == 3);
        CHECK(st.mean[0] == Approx(128.0 / 255.0));
        CHECK(st.std[0] == 1.0);
        Tensor<float> t = normalize_patch(p, st);
        for (float v : t.v) CHECK(v == Approx(0.0).margin(1e-7));
    }
    SECTION("tabular feature equal to the train mean maps to zero") {
        std::vector<std::vector<double>> rows = {{1.0, 10.0}, {3.0, 30.0}};
        FeatureStats st = compute_feature_stats(rows);
        CHECK(st.mean[0] == Approx(2.0));
        CHECK(st.mean[1] == Approx(20.0));
        auto z = normalize_features({2.0, 20.0}, st);
        CHECK(z[0] == Approx(0.0).margin(1e-12));
        CHECK(z[1] == Approx(0.0).margin(1e-12));
    }
    SECTION("constant tabular feature gets unit std") {
        std::vector<std::vector<double>> rows = {{5.0}, {5.0}, {5.0}};
        FeatureStats st = compute_feature_stats(rows);
        CHECK(st.n_degenerate == 1);
        auto z = normalize_features({7.0}, st);
        CHECK(z[0] == Approx(2.0));
    }
    SECTION("val statistics are not recomputed") {
        Rng rng(3);
        ImagePatch a, b;
        a.size = b.size = 8;
        a.px.resize(8 * 8 * 3);
        b.px.resize(8 * 8 * 3);
        for (auto& v : a.px) v = static_cast<uint8_t>(rng.below(256));
        for (auto& v : b.px) v = static_cast<uint8_t>(rng.below(128));
        std::vector<ImagePatch> train = {a};
        ChannelStats st = compute_channel_stats(train);
        Tensor<float> nb = normalize_patch(b, st);
        double mean = 0;
        for (float v : nb.v) mean += v;
        mean /= static_cast<double>(nb.v.size());
        CHECK(std::abs(mean) > 0.05);
    }
    SECTION("ragged tabular rows are rejected") {
        std::vector<std::vector<double>> rows = {{1.0, 2.0}, {3.0}};
        CHECK_THROWS_AS(compute_feature_stats(rows), ShapeMismatch);
    }
}

TEST_CASE("census table loads seventeen indicators per ward") {
    TempDir dir;
    auto rows_for = [](const std::string& ward, double roof_finished) {
        std::string s;
        const auto& names = census_indicator_names();
        for (int i = 0; i < kCensusDim; ++i) {
            double frac = 0.0;
            const std::string name = names[static_cast<size_t>(i)];
            if (name == "water_surface" || name == "sanitation_improved" ||
                name == "lightfuel_finished" || name == "floor_finished" ||
                name == "cookfuel_finished" || name == "wall_finished")
                frac = 1.0;
            else if (name == "roof_finished")
                frac = roof_finished;
            else if (name == "roof_rudimentary")
                frac = 1.0 - roof_finished;
            s += ward + "," + name + "," + num(frac) + "\n";
        }
        return s;
    };

    SECTION("buildings in the same ward share the vector") {
        write_text(dir.file("census.csv"),
                   "ward_id,indicator_name,fraction\n" + rows_for("w1", 0.7) +
                       rows_for("w2", 0.2));
        CensusTable t = load_census_csv(dir.file("census.csv"));
        CHECK(t.group_warnings.empty());
        auto v1 = attach_census("w1", t);
        auto v2 = attach_census("w1", t);
        CHECK(v1 == v2);
        CHECK(v1[static_cast<size_t>(census_indicator_index("roof_finished"))] == Approx(0.7));
        CHECK(attach_census("w2", t)[static_cast<size_t>(
                  census_indicator_index("roof_finished"))] == Approx(0.2));
        CHECK_THROWS_AS(attach_census("w9", t), UnknownWard);
    }
    SECTION("group sums outside tolerance warn") {
        std::string body = rows_for("w1", 0.7);
        const std::string needle = "w1,water_surface,1";
        body.replace(body.find(needle), needle.size(), "w1,water_surface,0.5");
        write_text(dir.file("census.csv"), "ward_id,indicator_name,fraction\n" + body);
        CensusTable t = load_census_csv(dir.file("census.csv"));
        REQUIRE(t.group_warnings.size() == 1);
        CHECK(t.group_warnings[0].find("water_source") != std::string::npos);
    }
    SECTION("missing indicator rejected") {
        std::string body = rows_for("w1", 0.7);
        body = body.substr(body.find('\n') + 1);  // drop the first indicator row
        write_text(dir.file("census.csv"), "ward_id,indicator_name,fraction\n" + body);
        CHECK_THROWS_AS(load_census_csv(dir.file("census.csv")), ParseError);
    }
    SECTION("fractions outside [0,1] rejected") {
        write_text(dir.file("census.csv"),
                   "ward_id,indicator_name,fraction\nw1,water_surface,1.2\n");
        CHECK_THROWS_AS(load_census_csv(dir.file("census.csv")), ParseError);
    }
    SECTION("group table covers all seventeen indicators") {
        int covered = 0;
        for (const auto& g : census_groups()) covered += g.count;
        CHECK(covered == kCensusDim);
    }
}

TEST_CASE("nightlight attachment uses the year before connection") {
    TempDir dir;
    write_text(dir.file("grid.json"),
               R"({"origin_lon": 36.0, "origin_lat": -1.0, "cell_deg": 0.01,
                   "ncols": 10, "nrows": 10, "first_year": 2012, "last_year": 2015})");
    std::string csv = "cell_id,year,radiance\n";
    for (int year = 2012; year <= 2015; ++year)
        csv += "55," + std::to_string(year) + "," + std::to_string(year - 2000) + ".5\n";
    write_text(dir.file("viirs.csv"), csv);
    ViirsTable t = load_viirs(dir.file("viirs.csv"), dir.file("grid.json"));

    // cell 55 = row 5, col 5
    const double lon = 36.0 + 0.055;
    const double lat = -1.0 - 0.055;
    CHECK(t.cell_of(lon, lat) == 55);
    CHECK(attach_nightlight(lon, lat, 2014, t) == Approx(13.5));  // 2013 composite
    CHECK(attach_nightlight(lon, lat, 2010, t) == Approx(12.5));  // clamped to 2012
    CHECK(attach_nightlight(lon, lat, 2013, t) == Approx(12.5));
    CHECK(attach_nightlight(lon, lat, 2016, t) == Approx(15.5));

    SECTION("cells without data and points off grid fail") {
        CHECK_THROWS_AS(attach_nightlight(lon, lat, 2017, t), MissingCell);
        CHECK_THROWS_AS(attach_nightlight(36.0 + 0.005, -1.0 - 0.005, 2014, t), MissingCell);
        CHECK_THROWS_AS(attach_nightlight(35.0, -1.0, 2014, t), MissingCell);
    }
}

TEST_CASE("sample assembly filters by eligibility and geography") {
    TempDir dir;
    Raster r = coord_raster(300, 280, {2013, 5});
    save_raster(dir.file("w1.tif"), r);
    write_text(dir.file("wards.csv"),
               "ward_id,constituency_id,county_id,raster\nw1,con1,cty1,w1.tif\n");
    auto wards = load_ward_index(dir.file("wards.csv"));
    REQUIRE(wards.size() == 1);
    CHECK(wards[0].raster_path == dir.file("w1.tif"));
    SceneIndex scenes(wards);

    const double lon_ok = r.lon_of_col_center(150);
    const double lat_ok = r.lat_of_row_center(140);

    SECTION("scene lookup is by containment") {
        CHECK(scenes.find(lon_ok, lat_ok) != nullptr);
        CHECK(scenes.find(lon_ok + 1.0, lat_ok) == nullptr);
    }
    SECTION("image eligibility window is connection plus twelve months") {
        CHECK(image_eligible({2013, 5}, {2014, 1}));
        CHECK_FALSE(image_eligible({2016, 1}, {2014, 1}));
        CHECK(image_eligible({2014, 6}, {2014, 1}));    // within the visibility lag
        CHECK_FALSE(image_eligible({2015, 1}, {2014, 1}));  // window start itself
    }

    SECTION("assembly drops are itemized") {
        std::vector<BillingRecord> recs;
        // kept: stable high consumer
        recs.push_back(record("b_keep", {2014, 1}, {{{2015, 1}, 70.0}, {{2015, 2}, 74.0}}));
        recs.back().lon = lon_ok;
        recs.back().lat = lat_ok;
        // dropped: no stable bills
        recs.push_back(record("b_fresh", {2014, 1}, {{{2014, 6}, 10.0}}));
        recs.back().lon = lon_ok;
        recs.back().lat = lat_ok;
        // dropped: image acquired after the stable window opens
        recs.push_back(record("b_late", {2012, 1}, {{{2013, 2}, 20.0}}));
        recs.back().lon = lon_ok;
        recs.back().lat = lat_ok;
        // dropped: outside every scene
        recs.push_back(record("b_away", {2014, 1}, {{{2015, 1}, 30.0}}));
        recs.back().lon = lon_ok + 2.0;
        recs.back().lat = lat_ok;
        // dropped: too close to the raster edge
        recs.push_back(record("b_edge", {2014, 1}, {{{2015, 1}, 30.0}}));
        recs.back().lon = r.lon_of_col_center(5);
        recs.back().lat = r.lat_of_row_center(5);
        // dropped: two customers on one building
        recs.push_back(record("b_multi", {2014, 1}, {{{2015, 1}, 30.0}}));
        recs.back().customer_id = "cX";
        recs.back().lon = lon_ok;
        recs.back().lat = lat_ok;
        recs.push_back(record("b_multi", {2014, 1}, {{{2015, 2}, 34.0}}));
        recs.back().customer_id = "cY";
        recs.back().lon = lon_ok;
        recs.back().lat = lat_ok;

        AssemblyOptions opt;
        opt.attach_census = false;
        opt.attach_nightlights = false;
        auto out = assemble_samples(recs, scenes, nullptr, nullptr, opt);
        CHECK(out.drops.multi_customer == 2);
        CHECK(out.drops.no_stable_bills == 1);
        CHECK(out.drops.image_too_late == 1);
        CHECK(out.drops.no_scene == 1);
        CHECK(out.drops.out_of_bounds == 1);
        CHECK(out.drops.total() == 6);
        REQUIRE(out.samples.size() == 1);
        const Sample& s = out.samples[0];
        CHECK(s.building_id == "b_keep");
        CHECK(s.label == TierLabel::High);
        CHECK(s.stable_kwh == Approx(72.0));
        CHECK(s.ward_id == "w1");
        CHECK(s.constituency_id == "con1");
        CHECK(s.county_id == "cty1");
        CHECK(s.connection_year == 2014);
        CHECK_FALSE(s.census.has_value());
        CHECK_FALSE(s.nightlight.has_value());
        CHECK(s.patch.at(64, 64, 0) == r.img.at(140, 150, 0));
    }
}
