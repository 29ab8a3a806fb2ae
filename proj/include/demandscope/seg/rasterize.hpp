#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "demandscope/common.hpp"
#include "demandscope/data/raster.hpp"

namespace demandscope::seg {

struct Footprint {
    std::string building_id;
    std::string ward_id;
    std::vector<std::pair<double, double>> ring;  // lon,lat; open or closed
    double min_lon = 0, max_lon = 0, min_lat = 0, max_lat = 0;

    void finalize_bbox() {
        if (ring.empty()) throw ParseError("footprint " + building_id + " has an empty ring");
        min_lon = max_lon = ring[0].first;
        min_lat = max_lat = ring[0].second;
        for (const auto& [lon, lat] : ring) {
            min_lon = std::min(min_lon, lon);
            max_lon = std::max(max_lon, lon);
            min_lat = std::min(min_lat, lat);
            max_lat = std::max(max_lat, lat);
        }
    }
};

// Even-odd ray casting; edges are half-open so shared borders never double.
inline bool point_in_ring(const std::vector<std::pair<double, double>>& ring, double lon,
                          double lat) {
    bool inside = false;
    const size_t n = ring.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& [xi, yi] = ring[i];
        const auto& [xj, yj] = ring[j];
        if ((yi > lat) != (yj > lat) &&
            lon < (xj - xi) * (lat - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

// GeoJSON FeatureCollection of lon/lat polygons; only the outer ring is read.
inline std::vector<Footprint> load_footprints_geojson(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (j.value("type", "") != "FeatureCollection")
        throw ParseError(path + ": expected a FeatureCollection");
    std::vector<Footprint> out;
    for (const auto& feat : j.at("features")) {
        const auto& geom = feat.at("geometry");
        if (geom.value("type", "") != "Polygon")
            throw ParseError(path + ": only Polygon geometries are supported");
        Footprint fp;
        if (feat.contains("properties") && feat["properties"].is_object()) {
            fp.building_id = feat["properties"].value("building_id", "");
            fp.ward_id = feat["properties"].value("ward_id", "");
        }
        const auto& outer = geom.at("coordinates").at(0);
        for (const auto& pt : outer)
            fp.ring.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
        if (fp.ring.size() >= 2 && fp.ring.front() == fp.ring.back()) fp.ring.pop_back();
        if (fp.ring.size() < 3) throw ParseError(path + ": degenerate polygon");
        fp.finalize_bbox();
        out.push_back(std::move(fp));
    }
    return out;
}

// Binary mask over a size x size patch centered on raster pixel (cx, cy):
// a pixel is set iff its center lies inside some footprint.
inline std::vector<uint8_t> rasterize_footprints(const data::Raster& r, int cx, int cy, int size,
                                                 const std::vector<Footprint>& footprints) {
    std::vector<uint8_t> mask(static_cast<size_t>(size) * size, 0);
    const int half = size / 2;
    const double lon0 = r.lon_of_col_center(cx - half);
    const double lat0 = r.lat_of_row_center(cy - half);
    const double lon1 = r.lon_of_col_center(cx + half - 1);
    const double lat1 = r.lat_of_row_center(cy + half - 1);
    for (const auto& fp : footprints) {
        if (fp.max_lon < lon0 || fp.min_lon > lon1 || fp.max_lat < lat1 || fp.min_lat > lat0)
            continue;
        const int col_a = std::max(0, r.col_of(fp.min_lon) - (cx - half));
        const int col_b = std::min(size - 1, r.col_of(fp.max_lon) - (cx - half));
        const int row_a = std::max(0, r.row_of(fp.max_lat) - (cy - half));
        const int row_b = std::min(size - 1, r.row_of(fp.min_lat) - (cy - half));
        for (int y = row_a; y <= row_b; ++y) {
            const double lat = r.lat_of_row_center(cy - half + y);
            for (int x = col_a; x <= col_b; ++x) {
                const double lon = r.lon_of_col_center(cx - half + x);
                if (point_in_ring(fp.ring, lon, lat))
                    mask[static_cast<size_t>(y) * size + x] = 1;
            }
        }
    }
    return mask;
}

inline double mask_coverage(const std::vector<uint8_t>& mask) {
    if (mask.empty()) return 0.0;
    int64_t on = 0;
    for (uint8_t v : mask) on += v;
    return static_cast<double>(on) / static_cast<double>(mask.size());
}

}  // namespace demandscope::seg
