#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "demandscope/common.hpp"
#include "demandscope/data/image.hpp"
#include "demandscope/tensor.hpp"

namespace demandscope::data {

// Georeferenced RGB scene covering one ward. The affine is plain
// equirectangular lon/lat: origin at the outer corner of pixel (0,0),
// latitude decreasing with row index.
struct Raster {
    Image img;
    GeoRef geo;
    Month acquisition{};
    double meters_per_pixel = kDefaultMetersPerPixel;

    int col_of(double lon) const {
        return static_cast<int>(std::floor((lon - geo.origin_lon) / geo.deg_per_px_x));
    }
    int row_of(double lat) const {
        return static_cast<int>(std::floor((geo.origin_lat - lat) / geo.deg_per_px_y));
    }
    double lon_of_col_center(int col) const {
        return geo.origin_lon + (col + 0.5) * geo.deg_per_px_x;
    }
    double lat_of_row_center(int row) const {
        return geo.origin_lat - (row + 0.5) * geo.deg_per_px_y;
    }
};

inline std::string sidecar_path(const std::string& raster_path) {
    std::filesystem::path p(raster_path);
    p.replace_extension(".json");
    return p.string();
}

// Sidecar carries acquisition date and resolution for both formats and the
// georeference for png (tiff keeps georeference in its own tags).
inline void save_raster(const std::string& path, const Raster& r) {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".tif" || ext == ".tiff")
        write_tiff(path, r.img, r.geo);
    else if (ext == ".png")
        write_png(path, r.img);
    else
        throw InvalidConfig("raster path must end in .tif or .png: " + path);

    nlohmann::json j;
    j["acquisition_month"] = format_month(r.acquisition);
    j["meters_per_pixel"] = r.meters_per_pixel;
    j["origin_lon"] = r.geo.origin_lon;
    j["origin_lat"] = r.geo.origin_lat;
    j["deg_per_px_x"] = r.geo.deg_per_px_x;
    j["deg_per_px_y"] = r.geo.deg_per_px_y;
    std::ofstream f(sidecar_path(path));
    if (!f) throw IoError("cannot write " + sidecar_path(path));
    f << j.dump(2) << "\n";
}

inline Raster load_raster(const std::string& path) {
    Raster r;
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".tif" || ext == ".tiff")
        r.img = read_tiff(path, &r.geo);
    else if (ext == ".png")
        r.img = read_png(path);
    else
        throw InvalidConfig("raster path must end in .tif or .png: " + path);

    const std::string side = sidecar_path(path);
    std::ifstream f(side);
    if (!f) throw IoError("missing sidecar " + side);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ParseError(side + ": " + e.what());
    }
    r.acquisition = parse_month(j.at("acquisition_month").get<std::string>());
    r.meters_per_pixel = j.at("meters_per_pixel").get<double>();
    if (!r.geo.valid) {
        r.geo.origin_lon = j.at("origin_lon").get<double>();
        r.geo.origin_lat = j.at("origin_lat").get<double>();
        r.geo.deg_per_px_x = j.at("deg_per_px_x").get<double>();
        r.geo.deg_per_px_y = j.at("deg_per_px_y").get<double>();
        r.geo.valid = true;
    }
    if (r.geo.deg_per_px_x <= 0 || r.geo.deg_per_px_y <= 0)
        throw ParseError(path + ": bad pixel scale");
    if (r.img.channels != 3) throw ParseError(path + ": raster must be rgb");
    return r;
}

struct ImagePatch {
    int size = kPatchSize;
    std::vector<uint8_t> px;  // interleaved rgb, row-major
    double meters_per_pixel = kDefaultMetersPerPixel;
    Month acquisition{};
    double center_lon = 0, center_lat = 0;

    uint8_t at(int y, int x, int c) const {
        return px[(static_cast<size_t>(y) * size + x) * 3 + c];
    }
};

// Patch centered on the pixel containing (lon,lat); pixel (size/2, size/2) of
// the patch is that pixel. Requires a full size/2 margin inside the raster.
inline ImagePatch extract_patch(const Raster& r, double lon, double lat, int size = kPatchSize) {
    const int cx = r.col_of(lon);
    const int cy = r.row_of(lat);
    const int half = size / 2;
    if (cx - half < 0 || cy - half < 0 || cx + half > r.img.w || cy + half > r.img.h)
        throw OutOfBounds("patch at (" + std::to_string(lon) + "," + std::to_string(lat) +
                          ") leaves the raster");
    ImagePatch p;
    p.size = size;
    p.meters_per_pixel = r.meters_per_pixel;
    p.acquisition = r.acquisition;
    p.center_lon = lon;
    p.center_lat = lat;
    p.px.resize(static_cast<size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y) {
        const uint8_t* src = &r.img.px[((static_cast<size_t>(cy - half + y)) * r.img.w +
                                        (cx - half)) *
                                       3];
        std::copy(src, src + static_cast<size_t>(size) * 3,
                  p.px.begin() + static_cast<long>(static_cast<size_t>(y) * size * 3));
    }
    return p;
}

// [3,S,S] float tensor with raw 0..255 values; normalization happens later.
inline Tensor<float> patch_to_chw(const ImagePatch& p) {
    Tensor<float> t({3, p.size, p.size});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < p.size; ++y)
            for (int x = 0; x < p.size; ++x)
                t.v[(static_cast<size_t>(c) * p.size + y) * p.size + x] =
                    static_cast<float>(p.at(y, x, c));
    return t;
}

}  // namespace demandscope::data
