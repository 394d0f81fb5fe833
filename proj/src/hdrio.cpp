#include "hdrcm/hdrio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hdrcm {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for reading");
    return f;
}

float byteswap_f32(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = ((u & 0x000000FFu) << 24) | ((u & 0x0000FF00u) << 8) |
        ((u & 0x00FF0000u) >> 8) | ((u & 0xFF000000u) >> 24);
    std::memcpy(&v, &u, 4);
    return v;
}

constexpr bool kHostLittle = std::endian::native == std::endian::little;

}  // namespace

void write_pfm(const std::string& path, const ImageF& img) {
    if (img.empty()) fail(path, "empty image");
    img.require_finite("write_pfm");
    auto f = open_out(path);
    f << (img.channels() == 3 ? "PF" : "Pf") << "\n"
      << img.width() << " " << img.height() << "\n"
      << "-1.0\n";
    // Rows are stored bottom-up.
    std::vector<float> row(static_cast<std::size_t>(img.width()) * img.channels());
    for (int y = img.height() - 1; y >= 0; --y) {
        std::size_t i = 0;
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                row[i++] = static_cast<float>(img.at(y, x, c));
        if constexpr (!kHostLittle)
            for (auto& v : row) v = byteswap_f32(v);
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) fail(path, "write error");
}

ImageF read_pfm(const std::string& path) {
    auto f = open_in(path);
    std::string kind;
    int w = 0, h = 0;
    double scale = 0.0;
    f >> kind >> w >> h >> scale;
    if (!f || (kind != "PF" && kind != "Pf")) fail(path, "malformed PFM header");
    if (w <= 0 || h <= 0) fail(path, "bad PFM dimensions");
    if (scale == 0.0) fail(path, "bad PFM scale");
    f.get();  // single whitespace byte after the scale line
    const int c = kind == "PF" ? 3 : 1;
    const bool file_little = scale < 0.0;

    ImageF img(h, w, c);
    std::vector<float> row(static_cast<std::size_t>(w) * c);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) fail(path, "truncated PFM payload");
        if (file_little != kHostLittle)
            for (auto& v : row) v = byteswap_f32(v);
        std::size_t i = 0;
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) = row[i++];
    }
    return img;
}

void encode_rgbe(double r, double g, double b, std::uint8_t out[4]) {
    r = r < 0.0 ? 0.0 : r;
    g = g < 0.0 ? 0.0 : g;
    b = b < 0.0 ? 0.0 : b;
    const double m = r > g ? (r > b ? r : b) : (g > b ? g : b);
    if (m < 1e-38) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e = 0;
    std::frexp(m, &e);  // m = f * 2^e, f in [0.5, 1)
    const double scale = std::ldexp(1.0, -e) * 256.0;
    out[0] = static_cast<std::uint8_t>(r * scale);
    out[1] = static_cast<std::uint8_t>(g * scale);
    out[2] = static_cast<std::uint8_t>(b * scale);
    out[3] = static_cast<std::uint8_t>(e + 128);
}

void decode_rgbe(const std::uint8_t in[4], double& r, double& g, double& b) {
    if (in[3] == 0) {
        r = g = b = 0.0;
        return;
    }
    const double s = std::ldexp(1.0, static_cast<int>(in[3]) - 136);
    r = in[0] * s;
    g = in[1] * s;
    b = in[2] * s;
}

namespace {

// New-style RLE of one channel plane (runs of 2..127, literals of 1..128).
void write_rle_channel(std::ofstream& f, const std::uint8_t* data, int n) {
    int cur = 0;
    while (cur < n) {
        int run_start = cur;
        int run_len = 1;
        // Find the next run of at least 4 identical bytes.
        while (run_start < n) {
            run_len = 1;
            while (run_start + run_len < n && run_len < 127 &&
                   data[run_start] == data[run_start + run_len])
                ++run_len;
            if (run_len >= 4) break;
            run_start += run_len;
        }
        // Emit literals up to the run.
        while (cur < (run_start < n ? run_start : n)) {
            int count = std::min((run_start < n ? run_start : n) - cur, 128);
            std::uint8_t hdr = static_cast<std::uint8_t>(count);
            f.write(reinterpret_cast<const char*>(&hdr), 1);
            f.write(reinterpret_cast<const char*>(data + cur), count);
            cur += count;
        }
        if (run_start < n && run_len >= 4) {
            std::uint8_t hdr = static_cast<std::uint8_t>(128 + run_len);
            f.write(reinterpret_cast<const char*>(&hdr), 1);
            f.write(reinterpret_cast<const char*>(&data[run_start]), 1);
            cur += run_len;
        }
    }
}

}  // namespace

void write_hdr(const std::string& path, const ImageF& img) {
    if (img.channels() != 3) fail(path, "write_hdr: expected a 3-channel image");
    img.require_finite("write_hdr");
    auto f = open_out(path);
    f << "#?RADIANCE\n"
      << "FORMAT=32-bit_rle_rgbe\n\n"
      << "-Y " << img.height() << " +X " << img.width() << "\n";

    const int w = img.width();
    const bool rle_allowed = w >= 8 && w <= 0x7FFF;
    std::vector<std::uint8_t> planes(static_cast<std::size_t>(w) * 4);
    for (int y = 0; y < img.height(); ++y) {
        if (!rle_allowed) {
            std::uint8_t px[4];
            for (int x = 0; x < w; ++x) {
                encode_rgbe(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), px);
                f.write(reinterpret_cast<const char*>(px), 4);
            }
            continue;
        }
        std::uint8_t hdr[4] = {2, 2, static_cast<std::uint8_t>(w >> 8),
                               static_cast<std::uint8_t>(w & 0xFF)};
        f.write(reinterpret_cast<const char*>(hdr), 4);
        for (int x = 0; x < w; ++x) {
            std::uint8_t px[4];
            encode_rgbe(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), px);
            for (int c = 0; c < 4; ++c) planes[static_cast<std::size_t>(c) * w + x] = px[c];
        }
        for (int c = 0; c < 4; ++c)
            write_rle_channel(f, planes.data() + static_cast<std::size_t>(c) * w, w);
    }
    if (!f) fail(path, "write error");
}

namespace {

void read_flat_pixels(std::ifstream& f, const std::string& path, ImageF& img, int y0, int x0) {
    std::uint8_t px[4];
    int y = y0, x = x0;
    while (y < img.height()) {
        if (!f.read(reinterpret_cast<char*>(px), 4)) fail(path, "truncated pixel data");
        decode_rgbe(px, img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
        if (++x == img.width()) {
            x = 0;
            ++y;
        }
    }
}

}  // namespace

ImageF read_hdr(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("#?", 0) != 0)
        fail(path, "missing #? magic");
    bool format_ok = false;
    while (std::getline(f, line)) {
        if (line.empty()) break;  // blank line ends the header
        if (line.rfind("FORMAT=", 0) == 0) {
            if (line != "FORMAT=32-bit_rle_rgbe") fail(path, "unknown FORMAT token");
            format_ok = true;
        }
        // other header lines (EXPOSURE, comments) are ignored
    }
    if (!format_ok) fail(path, "no FORMAT specifier");
    if (!std::getline(f, line)) fail(path, "missing resolution line");
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "-Y %d +X %d", &h, &w) != 2 || w <= 0 || h <= 0)
        fail(path, "bad resolution line");

    ImageF img(h, w, 3);
    std::vector<std::uint8_t> planes(static_cast<std::size_t>(w) * 4);
    for (int y = 0; y < h; ++y) {
        std::uint8_t hdr[4];
        if (!f.read(reinterpret_cast<char*>(hdr), 4)) fail(path, "truncated scanline");
        if (hdr[0] != 2 || hdr[1] != 2 || (hdr[2] & 0x80)) {
            // Flat (old-style) pixels; the four bytes already read are the
            // first pixel of the remainder.
            decode_rgbe(hdr, img.at(y, 0, 0), img.at(y, 0, 1), img.at(y, 0, 2));
            if (w == 1) {
                read_flat_pixels(f, path, img, y + 1, 0);
            } else {
                read_flat_pixels(f, path, img, y, 1);
            }
            return img;
        }
        if (((hdr[2] << 8) | hdr[3]) != w) fail(path, "wrong scanline width");
        for (int c = 0; c < 4; ++c) {
            std::uint8_t* dst = planes.data() + static_cast<std::size_t>(c) * w;
            int got = 0;
            while (got < w) {
                std::uint8_t code;
                if (!f.read(reinterpret_cast<char*>(&code), 1)) fail(path, "truncated RLE");
                if (code > 128) {
                    int count = code - 128;
                    if (count > w - got) fail(path, "corrupt run length");
                    std::uint8_t v;
                    if (!f.read(reinterpret_cast<char*>(&v), 1)) fail(path, "truncated RLE");
                    std::memset(dst + got, v, count);
                    got += count;
                } else {
                    int count = code;
                    if (count == 0 || count > w - got) fail(path, "corrupt literal length");
                    if (!f.read(reinterpret_cast<char*>(dst + got), count))
                        fail(path, "truncated RLE");
                    got += count;
                }
            }
        }
        for (int x = 0; x < w; ++x) {
            std::uint8_t px[4];
            for (int c = 0; c < 4; ++c) px[c] = planes[static_cast<std::size_t>(c) * w + x];
            decode_rgbe(px, img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
        }
    }
    return img;
}

void write_ppm(const std::string& path, const ImageF& img) {
    if (img.empty()) fail(path, "empty image");
    img.require_finite("write_ppm");
    auto f = open_out(path);
    f << (img.channels() == 3 ? "P6" : "P5") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * img.channels());
    for (int y = 0; y < img.height(); ++y) {
        std::size_t i = 0;
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double v = img.at(y, x, c);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                row[i++] = static_cast<std::uint8_t>(std::lround(255.0 * v));
            }
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size()));
    }
    if (!f) fail(path, "write error");
}

ImageF read_ppm(const std::string& path) {
    auto f = open_in(path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (!f || (magic != "P6" && magic != "P5")) fail(path, "not a binary PPM/PGM");
    if (w <= 0 || h <= 0) fail(path, "bad dimensions");
    if (maxval != 255) fail(path, "only 8-bit maxval 255 is supported");
    f.get();
    const int c = magic == "P6" ? 3 : 1;
    ImageF img(h, w, c);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * c);
    for (int y = 0; y < h; ++y) {
        if (!f.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(row.size())))
            fail(path, "truncated payload");
        std::size_t i = 0;
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) = row[i++] / 255.0;
    }
    return img;
}

}  // namespace hdrcm
