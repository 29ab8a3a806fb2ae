#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "demandscope/data/image.hpp"
#include "demandscope/data/raster.hpp"
#include "demandscope/eval/county.hpp"
#include "demandscope/eval/gradcam.hpp"
#include "demandscope/eval/metrics.hpp"

namespace demandscope::eval {

inline nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["n_low"] = r.n_low;
    j["n_high"] = r.n_high;
    j["tn"] = r.tn;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["tn_rate"] = r.tn_rate;
    j["tp_rate"] = r.tp_rate;
    j["fp_rate"] = r.fp_rate;
    j["fn_rate"] = r.fn_rate;
    j["macro_f1"] = r.macro_f1;
    if (r.auc)
        j["auc"] = *r.auc;
    else
        j["auc"] = nullptr;
    return j;
}

namespace detail {

inline std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace detail

inline std::string report_markdown(const EvalReport& r, const std::string& title = "Evaluation") {
    std::string md = "## " + title + "\n\n";
    md += "| Metric | Value |\n|---|---|\n";
    md += "| True Negative rate | " + detail::fixed3(r.tn_rate) + " |\n";
    md += "| True Positive rate | " + detail::fixed3(r.tp_rate) + " |\n";
    md += "| Macro F1 | " + detail::fixed3(r.macro_f1) + " |\n";
    md += "| AUC | " + (r.auc ? detail::fixed3(*r.auc) : std::string("n/a")) + " |\n";
    md += "| Low / High counts | " + std::to_string(r.n_low) + " / " + std::to_string(r.n_high) +
          " |\n";
    return md;
}

inline nlohmann::json county_json(const CountyValidation& cv) {
    nlohmann::json j;
    j["r"] = cv.r;
    j["p"] = cv.p;
    j["n_used"] = cv.n_used;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cv.counties) {
        nlohmann::json row;
        row["county_id"] = c.county_id;
        row["predicted_high_share"] = c.predicted_high_share;
        row["surveyed_high_share"] = c.surveyed_high_share;
        row["n_survey"] = c.n_survey;
        row["n_predictions"] = c.n_predictions;
        row["excluded"] = c.excluded;
        rows.push_back(row);
    }
    j["counties"] = rows;
    return j;
}

inline std::string county_markdown(const CountyValidation& cv) {
    std::string md = "## County validation\n\n";
    md += "Weighted Pearson r = " + detail::fixed3(cv.r) + " (p = " + detail::fixed3(cv.p) +
          ", " + std::to_string(cv.n_used) + " counties)\n\n";
    md += "| County | Predicted High share | Surveyed High share | Survey n | Excluded |\n";
    md += "|---|---|---|---|---|\n";
    for (const auto& c : cv.counties)
        md += "| " + c.county_id + " | " + detail::fixed3(c.predicted_high_share) + " | " +
              detail::fixed3(c.surveyed_high_share) + " | " + std::to_string(c.n_survey) +
              " | " + (c.excluded ? "yes" : "") + " |\n";
    return md;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << content;
    if (!f) throw IoError("short write to " + path);
}

// 8-bit grayscale rendering, 0..1 mapped onto 0..255.
inline void write_heatmap_png(const std::string& path, const Heatmap& h) {
    data::Image im = data::make_image(h.size, h.size, 1);
    for (size_t i = 0; i < h.v.size(); ++i)
        im.px[i] = static_cast<uint8_t>(std::lround(std::clamp(h.v[i], 0.0f, 1.0f) * 255.0f));
    data::write_png(path, im);
}

// The input patch with activation blended in as red, Fig-4 style.
inline void write_heatmap_overlay_png(const std::string& path, const data::ImagePatch& patch,
                                      const Heatmap& h) {
    if (patch.size != h.size) throw ShapeMismatch("overlay: patch and heatmap sizes differ");
    data::Image im = data::make_image(patch.size, patch.size, 3);
    for (int y = 0; y < patch.size; ++y)
        for (int x = 0; x < patch.size; ++x) {
            const float a = 0.55f * std::clamp(h.at(y, x), 0.0f, 1.0f);
            const double r = patch.at(y, x, 0) * (1.0f - a) + 255.0f * a;
            const double g = patch.at(y, x, 1) * (1.0f - a);
            const double b = patch.at(y, x, 2) * (1.0f - a);
            im.at(y, x, 0) = static_cast<uint8_t>(std::lround(r));
            im.at(y, x, 1) = static_cast<uint8_t>(std::lround(g));
            im.at(y, x, 2) = static_cast<uint8_t>(std::lround(b));
        }
    data::write_png(path, im);
}

}  // namespace demandscope::eval
