#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "demandscope/common.hpp"
#include "demandscope/data/csv.hpp"

namespace demandscope::data {

// Regular lon/lat grid of nightlight cells; radiance per (cell, year).
struct ViirsTable {
    double origin_lon = 0, origin_lat = 0;  // outer corner of cell (0,0)
    double cell_deg = 0;
    int ncols = 0, nrows = 0;
    int first_year = 2012, last_year = 2015;
    std::map<std::pair<int, int>, double> radiance;  // (cell_id, year) -> value

    int cell_of(double lon, double lat) const {
        const int col = static_cast<int>(std::floor((lon - origin_lon) / cell_deg));
        const int row = static_cast<int>(std::floor((origin_lat - lat) / cell_deg));
        if (col < 0 || col >= ncols || row < 0 || row >= nrows)
            throw MissingCell("location (" + std::to_string(lon) + "," + std::to_string(lat) +
                              ") outside the nightlight grid");
        return row * ncols + col;
    }
};

inline ViirsTable load_viirs(const std::string& csv_path, const std::string& grid_json_path) {
    ViirsTable t;
    std::ifstream f(grid_json_path);
    if (!f) throw IoError("cannot open " + grid_json_path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ParseError(grid_json_path + ": " + e.what());
    }
    t.origin_lon = j.at("origin_lon").get<double>();
    t.origin_lat = j.at("origin_lat").get<double>();
    t.cell_deg = j.at("cell_deg").get<double>();
    t.ncols = j.at("ncols").get<int>();
    t.nrows = j.at("nrows").get<int>();
    t.first_year = j.value("first_year", 2012);
    t.last_year = j.value("last_year", 2015);
    if (t.cell_deg <= 0 || t.ncols <= 0 || t.nrows <= 0)
        throw ParseError(grid_json_path + ": bad grid");

    const CsvTable csv = read_csv(csv_path);
    const int c_cell = csv.column("cell_id");
    const int c_year = csv.column("year");
    const int c_rad = csv.column("radiance");
    for (size_t i = 0; i < csv.rows.size(); ++i) {
        const double rad = csv_double(csv, i, c_rad);
        if (!std::isfinite(rad) || rad < 0)
            throw ParseError(csv_path + ":" + std::to_string(csv.line_numbers[i]) +
                             ": radiance must be finite and non-negative");
        t.radiance[{csv_int(csv, i, c_cell), csv_int(csv, i, c_year)}] = rad;
    }
    return t;
}

// Radiance of the building's cell for the year before electrification,
// clamped up to the first composite year.
inline double attach_nightlight(double lon, double lat, int connection_year,
                                const ViirsTable& t) {
    const int year = std::max(connection_year - 1, t.first_year);
    const int cell = t.cell_of(lon, lat);
    auto it = t.radiance.find({cell, year});
    if (it == t.radiance.end())
        throw MissingCell("no radiance for cell " + std::to_string(cell) + " year " +
                          std::to_string(year));
    return it->second;
}

}  // namespace demandscope::data
