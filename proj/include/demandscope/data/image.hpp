#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "demandscope/common.hpp"

namespace demandscope::data {

// Interleaved row-major 8-bit image, 1 or 3 channels.
struct Image {
    int w = 0, h = 0, channels = 0;
    std::vector<uint8_t> px;

    uint8_t at(int y, int x, int c) const {
        return px[(static_cast<size_t>(y) * w + x) * channels + c];
    }
    uint8_t& at(int y, int x, int c) {
        return px[(static_cast<size_t>(y) * w + x) * channels + c];
    }
};

inline Image make_image(int w, int h, int channels) {
    Image im;
    im.w = w;
    im.h = h;
    im.channels = channels;
    im.px.assign(static_cast<size_t>(w) * h * channels, 0);
    return im;
}

namespace detail {

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::vector<uint8_t> out;
    uint8_t buf[1 << 16];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.insert(out.end(), buf, buf + n);
    std::fclose(f);
    return out;
}

inline void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write " + path);
    if (std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
        std::fclose(f);
        throw IoError("short write to " + path);
    }
    if (std::fclose(f) != 0) throw IoError("close failed for " + path);
}

inline std::vector<uint8_t> zlib_deflate(const uint8_t* data, size_t n) {
    uLongf bound = compressBound(static_cast<uLong>(n));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, data, static_cast<uLong>(n), 6) != Z_OK)
        throw IoError("deflate failed");
    out.resize(bound);
    return out;
}

inline std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t n, size_t expect) {
    std::vector<uint8_t> out(expect);
    uLongf len = static_cast<uLongf>(expect);
    if (uncompress(out.data(), &len, data, static_cast<uLong>(n)) != Z_OK || len != expect)
        throw ParseError("inflate failed or wrong length");
    return out;
}

inline void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

inline uint32_t get_u32be(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PNG: 8-bit grayscale or RGB, no interlace. Writer emits filter 0 rows;
// reader handles all five standard filters.
// ---------------------------------------------------------------------------

inline void write_png(const std::string& path, const Image& im) {
    if (im.channels != 1 && im.channels != 3) throw InvalidConfig("png: 1 or 3 channels");
    std::vector<uint8_t> out{137, 80, 78, 71, 13, 10, 26, 10};
    auto chunk = [&](const char type[5], const std::vector<uint8_t>& body) {
        detail::put_u32be(out, static_cast<uint32_t>(body.size()));
        const size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), body.begin(), body.end());
        const uint32_t crc = static_cast<uint32_t>(
            crc32(0, out.data() + start, static_cast<uInt>(out.size() - start)));
        detail::put_u32be(out, crc);
    };
    std::vector<uint8_t> ihdr;
    detail::put_u32be(ihdr, static_cast<uint32_t>(im.w));
    detail::put_u32be(ihdr, static_cast<uint32_t>(im.h));
    ihdr.push_back(8);                                      // bit depth
    ihdr.push_back(im.channels == 3 ? 2 : 0);               // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);

    const size_t stride = static_cast<size_t>(im.w) * im.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * static_cast<size_t>(im.h));
    for (int y = 0; y < im.h; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), im.px.begin() + static_cast<long>(y * stride),
                   im.px.begin() + static_cast<long>((y + 1) * stride));
    }
    chunk("IDAT", detail::zlib_deflate(raw.data(), raw.size()));
    chunk("IEND", {});
    detail::write_file(path, out);
}

inline Image read_png(const std::string& path) {
    const std::vector<uint8_t> data = detail::read_file(path);
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (data.size() < 8 || std::memcmp(data.data(), sig, 8) != 0)
        throw ParseError(path + ": not a png");
    size_t pos = 8;
    Image im;
    std::vector<uint8_t> idat;
    int bit_depth = 0, color_type = -1;
    while (pos + 8 <= data.size()) {
        const uint32_t len = detail::get_u32be(&data[pos]);
        if (pos + 12 + len > data.size()) throw ParseError(path + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(&data[pos + 4]);
        const uint8_t* body = &data[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            im.w = static_cast<int>(detail::get_u32be(body));
            im.h = static_cast<int>(detail::get_u32be(body + 4));
            bit_depth = body[8];
            color_type = body[9];
            if (bit_depth != 8 || (color_type != 0 && color_type != 2) || body[12] != 0)
                throw ParseError(path + ": unsupported png variant");
            im.channels = color_type == 2 ? 3 : 1;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (im.w <= 0 || im.h <= 0 || idat.empty()) throw ParseError(path + ": missing png data");

    const size_t stride = static_cast<size_t>(im.w) * im.channels;
    const size_t raw_len = (stride + 1) * static_cast<size_t>(im.h);
    std::vector<uint8_t> raw = detail::zlib_inflate(idat.data(), idat.size(), raw_len);

    im.px.assign(stride * static_cast<size_t>(im.h), 0);
    const int bpp = im.channels;
    auto paeth = [](int a, int b, int c) {
        const int p = a + b - c;
        const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
        if (pa <= pb && pa <= pc) return a;
        if (pb <= pc) return b;
        return c;
    };
    for (int y = 0; y < im.h; ++y) {
        const uint8_t filter = raw[static_cast<size_t>(y) * (stride + 1)];
        const uint8_t* src = &raw[static_cast<size_t>(y) * (stride + 1) + 1];
        uint8_t* dst = &im.px[static_cast<size_t>(y) * stride];
        const uint8_t* up = y > 0 ? &im.px[static_cast<size_t>(y - 1) * stride] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw ParseError(path + ": bad png filter");
            }
            dst[i] = static_cast<uint8_t>(v & 0xff);
        }
    }
    return im;
}

// ---------------------------------------------------------------------------
// TIFF: little-endian, uncompressed, 8-bit gray or RGB, one strip; writer adds
// the GeoTIFF tiepoint and pixel-scale tags.
// ---------------------------------------------------------------------------

struct GeoRef {
    double origin_lon = 0;  // outer corner of pixel (0,0)
    double origin_lat = 0;
    double deg_per_px_x = 0;
    double deg_per_px_y = 0;  // positive; latitude decreases with row index
    bool valid = false;
};

namespace detail {

inline void put_u16le(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
}
inline void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}
inline uint16_t get_u16le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
inline uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void write_tiff(const std::string& path, const Image& im, const GeoRef& geo = {}) {
    if (im.channels != 1 && im.channels != 3) throw InvalidConfig("tiff: 1 or 3 channels");
    using namespace detail;
    std::vector<uint8_t> out;
    out.push_back('I');
    out.push_back('I');
    put_u16le(out, 42);
    put_u32le(out, 8);  // first IFD offset

    struct Entry {
        uint16_t tag, type;
        uint32_t count, value;
    };
    const uint32_t n_px = static_cast<uint32_t>(im.px.size());
    std::vector<Entry> entries;
    std::vector<uint8_t> extra;  // data blocks appended after the IFD
    const int n_base = im.channels == 3 ? 9 : 8;
    const int n_geo = geo.valid ? 2 : 0;
    const uint32_t ifd_off = 8;
    const uint32_t ifd_size = 2 + 12 * static_cast<uint32_t>(n_base + n_geo) + 4;
    const uint32_t extra_off = ifd_off + ifd_size;
    auto add_extra = [&](const void* p, size_t n) {
        const uint32_t off = extra_off + static_cast<uint32_t>(extra.size());
        const uint8_t* b = static_cast<const uint8_t*>(p);
        extra.insert(extra.end(), b, b + n);
        return off;
    };

    entries.push_back({256, 3, 1, static_cast<uint32_t>(im.w)});
    entries.push_back({257, 3, 1, static_cast<uint32_t>(im.h)});
    if (im.channels == 3) {
        uint8_t bits[6] = {8, 0, 8, 0, 8, 0};
        entries.push_back({258, 3, 3, add_extra(bits, 6)});
    } else {
        entries.push_back({258, 3, 1, 8});
    }
    entries.push_back({259, 3, 1, 1});  // no compression
    entries.push_back({262, 3, 1, static_cast<uint32_t>(im.channels == 3 ? 2 : 1)});
    entries.push_back({273, 4, 1, 0});  // strip offset, patched once extra is final
    entries.push_back({277, 3, 1, static_cast<uint32_t>(im.channels)});
    entries.push_back({278, 3, 1, static_cast<uint32_t>(im.h)});
    entries.push_back({279, 4, 1, n_px});
    if (geo.valid) {
        double scale[3] = {geo.deg_per_px_x, geo.deg_per_px_y, 0.0};
        entries.push_back({33550, 12, 3, add_extra(scale, 24)});
        double tie[6] = {0, 0, 0, geo.origin_lon, geo.origin_lat, 0};
        entries.push_back({33922, 12, 6, add_extra(tie, 48)});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.tag < b.tag; });
    for (auto& e : entries)
        if (e.tag == 273) e.value = extra_off + static_cast<uint32_t>(extra.size());

    put_u16le(out, static_cast<uint16_t>(entries.size()));
    for (const auto& e : entries) {
        put_u16le(out, e.tag);
        put_u16le(out, e.type);
        put_u32le(out, e.count);
        if (e.type == 3 && e.count == 1) {
            put_u16le(out, static_cast<uint16_t>(e.value));
            put_u16le(out, 0);
        } else {
            put_u32le(out, e.value);
        }
    }
    put_u32le(out, 0);  // no next IFD
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), im.px.begin(), im.px.end());
    detail::write_file(path, out);
}

inline Image read_tiff(const std::string& path, GeoRef* geo = nullptr) {
    using namespace detail;
    const std::vector<uint8_t> d = read_file(path);
    if (d.size() < 8 || d[0] != 'I' || d[1] != 'I' || get_u16le(&d[2]) != 42)
        throw ParseError(path + ": not a little-endian tiff");
    const uint32_t ifd = get_u32le(&d[4]);
    if (ifd + 2 > d.size()) throw ParseError(path + ": bad ifd offset");
    const uint16_t n = get_u16le(&d[ifd]);
    Image im;
    std::vector<uint32_t> strip_offsets, strip_counts;
    uint16_t compression = 1;
    if (geo) *geo = {};
    for (uint16_t i = 0; i < n; ++i) {
        const uint8_t* e = &d[ifd + 2 + static_cast<size_t>(i) * 12];
        const uint16_t tag = get_u16le(e);
        const uint16_t type = get_u16le(e + 2);
        const uint32_t count = get_u32le(e + 4);
        const uint8_t* val = e + 8;
        auto scalar = [&]() -> uint32_t {
            return type == 3 ? get_u16le(val) : get_u32le(val);
        };
        auto u32_list = [&](std::vector<uint32_t>& outv) {
            outv.clear();
            if (count == 1) {
                outv.push_back(scalar());
                return;
            }
            const uint32_t off = get_u32le(val);
            for (uint32_t k = 0; k < count; ++k)
                outv.push_back(type == 3 ? get_u16le(&d[off + k * 2]) : get_u32le(&d[off + k * 4]));
        };
        switch (tag) {
            case 256: im.w = static_cast<int>(scalar()); break;
            case 257: im.h = static_cast<int>(scalar()); break;
            case 259: compression = static_cast<uint16_t>(scalar()); break;
            case 273: u32_list(strip_offsets); break;
            case 277: im.channels = static_cast<int>(scalar()); break;
            case 279: u32_list(strip_counts); break;
            case 33550:
                if (geo && type == 12 && count >= 2) {
                    const uint32_t off = get_u32le(val);
                    std::memcpy(&geo->deg_per_px_x, &d[off], 8);
                    std::memcpy(&geo->deg_per_px_y, &d[off + 8], 8);
                }
                break;
            case 33922:
                if (geo && type == 12 && count >= 6) {
                    const uint32_t off = get_u32le(val);
                    std::memcpy(&geo->origin_lon, &d[off + 24], 8);
                    std::memcpy(&geo->origin_lat, &d[off + 32], 8);
                    geo->valid = true;
                }
                break;
            default: break;
        }
    }
    if (compression != 1) throw ParseError(path + ": only uncompressed tiff supported");
    if (im.w <= 0 || im.h <= 0 || (im.channels != 1 && im.channels != 3))
        throw ParseError(path + ": unsupported tiff layout");
    im.px.reserve(static_cast<size_t>(im.w) * im.h * im.channels);
    for (size_t s = 0; s < strip_offsets.size(); ++s) {
        const uint32_t off = strip_offsets[s];
        const uint32_t cnt = s < strip_counts.size() ? strip_counts[s] : 0;
        if (off + cnt > d.size()) throw ParseError(path + ": strip out of range");
        im.px.insert(im.px.end(), d.begin() + off, d.begin() + off + cnt);
    }
    if (im.px.size() != static_cast<size_t>(im.w) * im.h * im.channels)
        throw ParseError(path + ": pixel data size mismatch");
    return im;
}

}  // namespace demandscope::data
