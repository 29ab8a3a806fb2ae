#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "demandscope/seg/iou.hpp"
#include "demandscope/seg/model.hpp"
#include "demandscope/seg/pointer.hpp"
#include "demandscope/seg/rasterize.hpp"
#include "demandscope/seg/train.hpp"

using namespace demandscope;
using namespace demandscope::seg;
using Catch::Approx;

namespace {

// 32x32 scene: a bright rectangle on dark background, mask over the rectangle.
SegExample rect_example(uint64_t seed) {
    Rng rng(seed);
    const int s = 32;
    SegExample ex;
    ex.patch.size = s;
    ex.patch.px.assign(static_cast<size_t>(s) * s * 3, 0);
    ex.mask.assign(static_cast<size_t>(s) * s, 0);
    const int w = 6 + static_cast<int>(rng.below(10));
    const int h = 6 + static_cast<int>(rng.below(10));
    const int x0 = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(s - w - 4)));
    const int y0 = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(s - h - 4)));
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const bool in = y >= y0 && y < y0 + h && x >= x0 && x < x0 + w;
            const int base = in ? 200 : 40;
            for (int c = 0; c < 3; ++c)
                ex.patch.px[(static_cast<size_t>(y) * s + x) * 3 + c] =
                    static_cast<uint8_t>(base + static_cast<int>(rng.below(20)));
            if (in) ex.mask[static_cast<size_t>(y) * s + x] = 1;
        }
    ex.point = {y0 + h / 2, x0 + w / 2};
    return ex;
}

EncoderConfig tiny_config() {
    EncoderConfig c;
    c.stages = 2;
    c.convs_per_stage = 1;
    c.filters = 8;
    c.input_size = 32;
    return c;
}

}  // namespace

TEST_CASE("encoder structure matches the stated defaults") {
    EncoderConfig c;
    nn::NetworkSpec spec = build_encoder(c);

    int n_conv = 0, n_pool = 0;
    for (const auto& l : spec.layers) {
        if (l.kind == nn::LayerKind::Conv2d) ++n_conv;
        if (l.kind == nn::LayerKind::MaxPool2) ++n_pool;
    }
    CHECK(n_conv == 20);
    CHECK(n_pool == 5);
    CHECK(nn::param_count(spec) == 703424);

    auto shapes = nn::infer_shapes(spec);
    CHECK(shapes.back() == nn::ActShape{64, 4, 4});
    CHECK(encoder_layer_count(c) == static_cast<int>(spec.layers.size()));

    SECTION("one-stage variant") {
        EncoderConfig small;
        small.stages = 1;
        small.convs_per_stage = 1;
        small.filters = 8;
        auto sp = build_encoder(small);
        CHECK(nn::infer_shapes(sp).back() == nn::ActShape{8, 64, 64});
    }
    SECTION("indivisible input size is rejected") {
        EncoderConfig bad;
        bad.input_size = 100;
        bad.stages = 3;
        CHECK_THROWS_AS(build_encoder(bad), InvalidConfig);
    }
    SECTION("pointer variant takes four channels") {
        EncoderConfig ptr;
        ptr.in_channels = 4;
        auto sp = build_encoder(ptr);
        CHECK(sp.input == nn::ActShape{4, 128, 128});
        CHECK(sp.layers[0].in_ch == 4);
    }
}

TEST_CASE("segmenter restores full resolution with no skip connections") {
    EncoderConfig c;
    nn::NetworkSpec spec = build_segmenter(c);
    auto shapes = nn::infer_shapes(spec);
    CHECK(shapes.back() == nn::ActShape{1, 128, 128});

    // the spec is a pure chain: every layer reads exactly its predecessor
    const int enc = encoder_layer_count(c);
    for (size_t i = static_cast<size_t>(enc); i < spec.layers.size(); ++i) {
        const auto k = spec.layers[i].kind;
        CHECK((k == nn::LayerKind::UpsampleNearest2 || k == nn::LayerKind::Conv2d ||
               k == nn::LayerKind::Relu || k == nn::LayerKind::Sigmoid));
    }
    CHECK(spec.layers.back().kind == nn::LayerKind::Sigmoid);
    CHECK(spec.layers[spec.layers.size() - 2].kernel == 1);

    SECTION("sigmoid output stays inside the unit interval") {
        EncoderConfig tiny = tiny_config();
        auto sp = build_segmenter(tiny);
        nn::Network<float> net(sp);
        auto ps = net.init(3);
        Tensor<float> x({1, 3, 32, 32});
        Rng rng(4);
        for (auto& v : x.v) v = static_cast<float>(rng.normal());
        auto acts = net.forward(x, ps);
        const auto& y = acts.acts.back();
        REQUIRE(y.shape == std::vector<int>{1, 1, 32, 32});
        for (float v : y.v) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("iou follows set arithmetic") {
    std::vector<float> pred(100, 0.0f);
    std::vector<uint8_t> truth(100, 0);

    SECTION("identical masks give one") {
        for (int i = 0; i < 30; ++i) {
            pred[static_cast<size_t>(i)] = 0.9f;
            truth[static_cast<size_t>(i)] = 1;
        }
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(1.0));
    }
    SECTION("disjoint masks give zero") {
        for (int i = 0; i < 30; ++i) pred[static_cast<size_t>(i)] = 0.9f;
        for (int i = 40; i < 70; ++i) truth[static_cast<size_t>(i)] = 1;
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(0.0));
    }
    SECTION("half coverage with no false positives gives a half") {
        for (int i = 0; i < 20; ++i) truth[static_cast<size_t>(i)] = 1;
        for (int i = 0; i < 10; ++i) pred[static_cast<size_t>(i)] = 0.9f;
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(0.5));
    }
    SECTION("empty masks count as a perfect match") {
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(1.0));
    }
    SECTION("threshold is applied to the prediction") {
        truth[0] = 1;
        pred[0] = 0.49f;
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(0.0));
        pred[0] = 0.51f;
        CHECK(iou(pred.data(), truth.data(), 100) == Approx(1.0));
    }
    SECTION("binary form is symmetric") {
        std::vector<uint8_t> a(50, 0), b(50, 0);
        Rng rng(5);
        for (size_t i = 0; i < 50; ++i) {
            a[i] = rng.bernoulli(0.4);
            b[i] = rng.bernoulli(0.4);
        }
        CHECK(iou_binary(a, b) == Approx(iou_binary(b, a)));
        CHECK(iou_binary(a, a) == Approx(1.0));
    }
}

TEST_CASE("footprints rasterize by pixel center") {
    data::Raster r;
    r.img = data::make_image(64, 64, 3);
    r.geo.origin_lon = 10.0;
    r.geo.origin_lat = 5.0;
    r.geo.deg_per_px_x = 0.001;
    r.geo.deg_per_px_y = 0.001;
    r.geo.valid = true;

    // rectangle spanning columns 20..29 and rows 12..17 exactly
    Footprint fp;
    fp.building_id = "b1";
    const double lon_a = 10.0 + 20 * 0.001, lon_b = 10.0 + 30 * 0.001;
    const double lat_a = 5.0 - 12 * 0.001, lat_b = 5.0 - 18 * 0.001;
    fp.ring = {{lon_a, lat_a}, {lon_b, lat_a}, {lon_b, lat_b}, {lon_a, lat_b}};
    fp.finalize_bbox();

    SECTION("mask covers exactly the interior pixels") {
        auto mask = rasterize_footprints(r, 32, 32, 64, {fp});
        int64_t on = 0;
        for (uint8_t v : mask) on += v;
        CHECK(on == 10 * 6);
        // patch pixel (y,x) maps to raster pixel (y, x) here (cx=cy=32, half=32)
        CHECK(mask[static_cast<size_t>(12) * 64 + 20] == 1);
        CHECK(mask[static_cast<size_t>(17) * 64 + 29] == 1);
        CHECK(mask[static_cast<size_t>(11) * 64 + 20] == 0);
        CHECK(mask[static_cast<size_t>(12) * 64 + 30] == 0);
        CHECK(mask_coverage(mask) == Approx(60.0 / (64.0 * 64.0)));
    }
    SECTION("footprints outside the patch leave it empty") {
        Footprint far = fp;
        for (auto& [lon, lat] : far.ring) lon += 1.0;
        far.finalize_bbox();
        auto mask = rasterize_footprints(r, 32, 32, 64, {far});
        CHECK(mask_coverage(mask) == 0.0);
    }
    SECTION("point in ring handles both orientations") {
        CHECK(point_in_ring(fp.ring, 10.0245, 4.9855));
        std::reverse(fp.ring.begin(), fp.ring.end());
        CHECK(point_in_ring(fp.ring, 10.0245, 4.9855));
        CHECK_FALSE(point_in_ring(fp.ring, 10.0195, 4.9855));
    }
}

TEST_CASE("footprint geojson loads rings and properties") {
    const std::string path = std::filesystem::temp_directory_path() / "ds_fp_test.geojson";
    std::ofstream(path) << R"({
      "type": "FeatureCollection",
      "features": [
        {"type": "Feature",
         "properties": {"building_id": "b7", "ward_id": "w2"},
         "geometry": {"type": "Polygon",
                      "coordinates": [[[10.0, 5.0], [10.1, 5.0], [10.1, 4.9], [10.0, 4.9], [10.0, 5.0]]]}}
      ]})";
    auto fps = load_footprints_geojson(path);
    std::filesystem::remove(path);
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].building_id == "b7");
    CHECK(fps[0].ward_id == "w2");
    CHECK(fps[0].ring.size() == 4);  // closing vertex stripped
    CHECK(fps[0].min_lon == Approx(10.0));
    CHECK(fps[0].max_lat == Approx(5.0));
}

TEST_CASE("pointer channel peaks at the point and decays") {
    std::vector<float> plane(32 * 32, 0.0f);
    pointer_channel_into(plane.data(), 32, {10, 20});
    CHECK(plane[static_cast<size_t>(10) * 32 + 20] == Approx(1.0));
    const float d1 = plane[static_cast<size_t>(10) * 32 + 21];
    const float d2 = plane[static_cast<size_t>(10) * 32 + 22];
    const float d3 = plane[static_cast<size_t>(10) * 32 + 23];
    CHECK(d1 < 1.0f);
    CHECK(d2 < d1);
    CHECK(d3 < d2);
    const float diag = plane[static_cast<size_t>(11) * 32 + 21];
    CHECK(diag < d1);
    CHECK_THROWS_AS(pointer_channel_into(plane.data(), 32, {32, 0}), OutOfBounds);
    CHECK_THROWS_AS(pointer_channel_into(plane.data(), 32, {0, -1}), OutOfBounds);
}

TEST_CASE("pointer segmentation thresholds and declines") {
    EncoderConfig c = tiny_config();
    c.in_channels = 4;
    auto spec = build_segmenter(c);
    nn::Network<float> net(spec);
    auto ps = net.init(9);

    SegExample ex = rect_example(17);
    data::ChannelStats st = data::compute_channel_stats(std::vector<data::ImagePatch>{ex.patch});

    SECTION("input stacks normalized rgb and the bump") {
        Tensor<float> x = make_pointer_input(ex.patch, st, ex.point);
        REQUIRE(x.shape == std::vector<int>{4, 32, 32});
        CHECK(x.v[(static_cast<size_t>(3) * 32 + ex.point.row) * 32 + ex.point.col] ==
              Approx(1.0));
    }
    SECTION("an always-off head declines with EmptyMask") {
        // the final conv's bias is the last array; -100 pins the sigmoid to zero
        auto& bias = ps.arrays.back();
        REQUIRE(bias.name.find("conv.bias") != std::string::npos);
        std::fill(bias.w.begin(), bias.w.end(), -100.0f);
        CHECK_THROWS_AS(pointer_segment(net, ps, st, ex.patch, ex.point), EmptyMask);
    }
    SECTION("rgb-only checkpoints are rejected") {
        EncoderConfig rgb = tiny_config();
        auto spec3 = build_segmenter(rgb);
        nn::Network<float> net3(spec3);
        auto ps3 = net3.init(1);
        CHECK_THROWS_AS(pointer_segment(net3, ps3, st, ex.patch, ex.point), InvalidConfig);
    }
    SECTION("neighborhood fallback clips at corners") {
        auto m = neighborhood_mask(32, {0, 0});
        int64_t on = 0;
        for (uint8_t v : m) on += v;
        CHECK(on == 4);
        m = neighborhood_mask(32, {16, 16});
        on = 0;
        for (uint8_t v : m) on += v;
        CHECK(on == 9);
    }
}

TEST_CASE("segmentation training overfits a small separable set") {
    EncoderConfig c = tiny_config();
    auto spec = build_segmenter(c);

    std::vector<SegExample> train;
    for (uint64_t s = 0; s < 8; ++s) train.push_back(rect_example(100 + s));

    SegTrainConfig cfg;
    cfg.epochs = 40;
    cfg.lr = 3e-3;
    cfg.batch = 8;
    cfg.seed = 5;
    cfg.augment = false;

    SegTrainResult res = train_segmenter(spec, train, {}, cfg);
    REQUIRE(res.history.size() == 40);
    CHECK(res.history.front().train_loss > res.history.back().train_loss);
    CHECK(res.best_val_iou > 0.5);
    CHECK(res.best_epoch >= 1);

    SECTION("training is seed deterministic") {
        SegTrainResult res2 = train_segmenter(spec, train, {}, cfg);
        REQUIRE(res2.history.size() == res.history.size());
        for (size_t i = 0; i < res.history.size(); ++i) {
            CHECK(res2.history[i].train_loss == res.history[i].train_loss);
            CHECK(res2.history[i].val_iou == res.history[i].val_iou);
        }
    }
    SECTION("history csv has the pinned header") {
        const std::string path =
            (std::filesystem::temp_directory_path() / "ds_seg_hist.csv").string();
        SegTrainConfig logged = cfg;
        logged.epochs = 2;
        logged.history_csv = path;
        train_segmenter(spec, train, {}, logged);
        std::ifstream f(path);
        std::string header;
        std::getline(f, header);
        CHECK(header == "epoch,train_loss,val_loss,val_iou");
        int rows = 0;
        std::string line;
        while (std::getline(f, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 2);
        std::filesystem::remove(path);
    }
}

TEST_CASE("finetune with zero epochs returns the weights untouched") {
    EncoderConfig c = tiny_config();
    c.in_channels = 4;
    auto spec = build_segmenter(c);
    nn::Network<float> net(spec);
    auto base = net.init(3);

    std::vector<SegExample> set = {rect_example(1), rect_example(2)};
    SegTrainConfig cfg;
    cfg.epochs = 0;
    auto res = finetune_pointer(spec, base, set, set, cfg);
    REQUIRE(res.best_params.arrays.size() == base.arrays.size());
    for (size_t i = 0; i < base.arrays.size(); ++i)
        CHECK(res.best_params.arrays[i].w == base.arrays[i].w);
    CHECK(res.best_epoch == 0);
}

TEST_CASE("coverage filter drops sparse masks") {
    EncoderConfig c = tiny_config();
    auto spec = build_segmenter(c);

    SegExample full = rect_example(3);
    SegExample sparse = rect_example(4);
    sparse.mask.assign(sparse.mask.size(), 0);
    sparse.mask[0] = 1;  // far below one percent

    SegTrainConfig cfg;
    cfg.epochs = 1;
    cfg.lr = 1e-4;
    cfg.batch = 2;
    cfg.min_coverage = 0.01;
    CHECK_NOTHROW(train_segmenter(spec, {full, sparse}, {full}, cfg));

    SegTrainConfig all_filtered = cfg;
    all_filtered.min_coverage = 0.99;
    CHECK_THROWS_AS(train_segmenter(spec, {full, sparse}, {full}, all_filtered), InvalidConfig);
}
