#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "demandscope/common.hpp"
#include "demandscope/nn/params.hpp"
#include "demandscope/nn/spec.hpp"

namespace demandscope::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container stores little-endian raw arrays");

// Container layout: u64 header length, header JSON, then raw arrays in
// declaration order (all weights, then all m and v when optimizer state is
// kept). Written to a temp file and renamed so readers never see a partial
// checkpoint.
template <typename T>
void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ParameterStore<T>& ps, bool with_adam_state = false) {
    nlohmann::json h;
    h["format"] = "demandscope-checkpoint";
    h["version"] = 1;
    h["dtype"] = sizeof(T) == 4 ? "f32" : "f64";
    h["step"] = ps.step;
    h["spec"] = spec_to_json(spec);
    h["spec_hash"] = spec_hash(spec);
    h["adam_state"] = with_adam_state;
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& a : ps.arrays)
        arrays.push_back({{"name", a.name}, {"shape", a.shape}, {"count", a.size()}});
    h["arrays"] = arrays;
    const std::string header = h.dump();

    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot write " + tmp);
    auto put = [&](const void* p, size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw IoError("short write to " + tmp);
        }
    };
    const uint64_t hlen = header.size();
    put(&hlen, sizeof(hlen));
    put(header.data(), header.size());
    for (const auto& a : ps.arrays) put(a.w.data(), a.w.size() * sizeof(T));
    if (with_adam_state)
        for (const auto& a : ps.arrays) {
            put(a.m.data(), a.m.size() * sizeof(T));
            put(a.v.data(), a.v.size() * sizeof(T));
        }
    if (std::fclose(f) != 0) throw IoError("close failed for " + tmp);
    std::filesystem::rename(tmp, path);
}

template <typename T>
struct Checkpoint {
    NetworkSpec spec;
    ParameterStore<T> params;
    bool adam_state = false;
};

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    auto get = [&](void* p, size_t n) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw ParseError("truncated checkpoint " + path);
        }
    };
    uint64_t hlen = 0;
    get(&hlen, sizeof(hlen));
    if (hlen == 0 || hlen > (64u << 20)) {
        std::fclose(f);
        throw ParseError("bad header length in " + path);
    }
    std::string header(hlen, '\0');
    get(header.data(), hlen);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const std::exception& e) {
        std::fclose(f);
        throw ParseError("bad checkpoint header in " + path + ": " + e.what());
    }
    if (h.value("format", "") != "demandscope-checkpoint") {
        std::fclose(f);
        throw ParseError(path + " is not a checkpoint");
    }
    Checkpoint<T> out;
    out.spec = spec_from_json(h.at("spec"));
    out.params.step = h.value("step", int64_t{0});
    out.adam_state = h.value("adam_state", false);
    const std::string dtype = h.at("dtype").get<std::string>();
    const bool stored_f32 = dtype == "f32";
    if (!stored_f32 && dtype != "f64") {
        std::fclose(f);
        throw ParseError("unknown dtype '" + dtype + "' in " + path);
    }

    auto read_array = [&](int64_t count, std::vector<T>& dst) {
        dst.resize(static_cast<size_t>(count));
        if (stored_f32) {
            std::vector<float> buf(static_cast<size_t>(count));
            get(buf.data(), buf.size() * sizeof(float));
            for (size_t i = 0; i < buf.size(); ++i) dst[i] = static_cast<T>(buf[i]);
        } else {
            std::vector<double> buf(static_cast<size_t>(count));
            get(buf.data(), buf.size() * sizeof(double));
            for (size_t i = 0; i < buf.size(); ++i) dst[i] = static_cast<T>(buf[i]);
        }
    };

    for (const auto& ja : h.at("arrays")) {
        ParamArray<T> a;
        a.name = ja.at("name").get<std::string>();
        a.shape = ja.at("shape").get<std::vector<int>>();
        read_array(ja.at("count").get<int64_t>(), a.w);
        a.m.assign(a.w.size(), T(0));
        a.v.assign(a.w.size(), T(0));
        out.params.arrays.push_back(std::move(a));
    }
    if (out.adam_state)
        for (auto& a : out.params.arrays) {
            read_array(a.size(), a.m);
            read_array(a.size(), a.v);
        }
    std::fclose(f);

    const uint64_t expect = h.value("spec_hash", uint64_t{0});
    if (expect != 0 && expect != spec_hash(out.spec))
        throw ParseError("spec hash mismatch in " + path);
    return out;
}

}  // namespace demandscope::nn
