#include "hdrcm/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hdrcm {

ImageF::ImageF(int height, int width, int channels, double fill)
    : h_(height), w_(width), c_(channels) {
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
        throw std::invalid_argument("ImageF: bad shape " + std::to_string(height) + "x" +
                                    std::to_string(width) + "x" + std::to_string(channels));
    data_.assign(static_cast<std::size_t>(h_) * w_ * c_, fill);
}

void ImageF::require_finite(const char* what) const {
    for (double v : data_)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string(what) + ": non-finite value");
}

ImageF ImageF::crop(int y0, int x0, int height, int width) const {
    if (y0 < 0 || x0 < 0 || y0 + height > h_ || x0 + width > w_)
        throw std::out_of_range("ImageF::crop: window outside image");
    ImageF out(height, width, c_);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < c_; ++c)
                out.at(y, x, c) = at(y0 + y, x0 + x, c);
    return out;
}

std::uint64_t SeededRng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SeededRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_normal() {
    // Box-Muller; the sine branch is discarded so each draw consumes
    // exactly two uniforms and the stream stays position-independent.
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::fork(std::uint64_t lane) const {
    std::uint64_t z = state_ ^ (0xD1B54A32D192ED03ULL + lane * 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return SeededRng(z ^ (z >> 31));
}

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0,100]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted)
        if (!std::isfinite(v)) throw std::invalid_argument("percentile: non-finite input");
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p);
}

namespace {

std::vector<double> gaussian_kernel(double sigma, int& radius) {
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

ImageF gaussian_blur(const ImageF& img, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    int radius = 0;
    const std::vector<double> k = gaussian_kernel(sigma, radius);
    const int h = img.height(), w = img.width(), c = img.channels();

    ImageF tmp(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int xx = std::clamp(x + i, 0, w - 1);  // replicate border
                    acc += k[i + radius] * img.at(y, xx, ch);
                }
                tmp.at(y, x, ch) = acc;
            }

    ImageF out(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int yy = std::clamp(y + i, 0, h - 1);
                    acc += k[i + radius] * tmp.at(yy, x, ch);
                }
                out.at(y, x, ch) = acc;
            }
    out.require_finite("gaussian_blur");
    return out;
}

ImageF sample_normal(SeededRng& rng, int height, int width, int channels) {
    ImageF out(height, width, channels);
    for (double& v : out.values()) v = rng.next_normal();
    return out;
}

}  // namespace hdrcm
