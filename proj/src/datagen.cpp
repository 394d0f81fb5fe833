#include "hdrcm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hdrcm/colorspace.hpp"

namespace hdrcm {

namespace {

// Bilinear value-noise octave: a coarse random grid upsampled to h x w.
void add_octave(ImageF& field, SeededRng& rng, int cells, double amplitude) {
    const int h = field.height(), w = field.width();
    std::vector<double> grid((cells + 1) * (cells + 1));
    for (double& v : grid) v = rng.next_double();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h * cells;
            const double fx = static_cast<double>(x) / w * cells;
            const int gy = std::min(static_cast<int>(fy), cells - 1);
            const int gx = std::min(static_cast<int>(fx), cells - 1);
            const double ty = fy - gy, tx = fx - gx;
            const double v00 = grid[gy * (cells + 1) + gx];
            const double v01 = grid[gy * (cells + 1) + gx + 1];
            const double v10 = grid[(gy + 1) * (cells + 1) + gx];
            const double v11 = grid[(gy + 1) * (cells + 1) + gx + 1];
            const double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) +
                             ty * ((1 - tx) * v10 + tx * v11);
            field.at(y, x, 0) += amplitude * v;
        }
}

double scene_dynamic_range(const ImageF& hdr) {
    const ImageF y = luminance(hdr);
    double lo = y.at(0, 0, 0), hi = lo;
    for (double v : y.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi / std::max(lo, 1e-300);
}

ImageF gen_scene_once(const SceneConfig& cfg, SeededRng& rng) {
    const int h = cfg.height, w = cfg.width;

    // Smooth illumination field, exponentiated so shadows get deep.
    ImageF field(h, w, 1);
    double amp = 1.0;
    int cells = 4;
    for (int o = 0; o < cfg.octaves; ++o) {
        add_octave(field, rng, cells, amp);
        amp *= 0.5;
        cells *= 2;
    }
    ImageF illum(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            illum.at(y, x, 0) = std::exp(3.5 * (field.at(y, x, 0) - 1.2));

    // Colored albedo: base tint plus random rectangles and disks.
    ImageF albedo(h, w, 3);
    double base[3];
    for (double& c : base) c = 0.2 + 0.8 * rng.next_double();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) albedo.at(y, x, c) = base[c];

    const int n_shapes =
        cfg.n_shapes_min +
        static_cast<int>(rng.next_double() * (cfg.n_shapes_max - cfg.n_shapes_min + 1));
    for (int s = 0; s < n_shapes; ++s) {
        double color[3];
        for (double& c : color) c = 0.05 + 0.95 * rng.next_double();
        const bool disk = rng.next_double() < 0.5;
        const double cy = rng.next_double() * h, cx = rng.next_double() * w;
        const double ry = (0.05 + 0.25 * rng.next_double()) * h;
        const double rx = (0.05 + 0.25 * rng.next_double()) * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                bool in;
                if (disk) {
                    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
                    in = dy * dy + dx * dx <= 1.0;
                } else {
                    in = std::fabs(y - cy) <= ry && std::fabs(x - cx) <= rx;
                }
                if (in)
                    for (int c = 0; c < 3; ++c) albedo.at(y, x, c) = color[c];
            }
    }

    ImageF hdr(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                hdr.at(y, x, c) =
                    std::max(illum.at(y, x, 0) * albedo.at(y, x, c), 1e-5);

    // High-intensity light sources: small colored Gaussian blobs.
    const int n_lights = 1 + static_cast<int>(rng.next_double() * 3.0);
    for (int s = 0; s < n_lights; ++s) {
        const double log_lo = std::log(cfg.light_min), log_hi = std::log(cfg.light_max);
        const double intensity = std::exp(log_lo + rng.next_double() * (log_hi - log_lo));
        double color[3];
        for (double& c : color) c = 0.3 + 0.7 * rng.next_double();
        const double cy = rng.next_double() * h, cx = rng.next_double() * w;
        const double sigma = (0.02 + 0.06 * rng.next_double()) * std::min(h, w);
        const int rad = static_cast<int>(3.0 * sigma) + 1;
        for (int y = std::max(0, static_cast<int>(cy) - rad);
             y < std::min(h, static_cast<int>(cy) + rad); ++y)
            for (int x = std::max(0, static_cast<int>(cx) - rad);
                 x < std::min(w, static_cast<int>(cx) + rad); ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double g = std::exp(-0.5 * d2 / (sigma * sigma));
                for (int c = 0; c < 3; ++c)
                    hdr.at(y, x, c) += intensity * color[c] * g;
            }
    }
    return hdr;
}

}  // namespace

ImageF gen_hdr_scene(const SceneConfig& cfg, SeededRng& rng) {
    for (int attempt = 0; attempt < 32; ++attempt) {
        ImageF hdr = gen_scene_once(cfg, rng);
        if (scene_dynamic_range(hdr) >= cfg.min_dynamic_range) {
            hdr.require_finite("gen_hdr_scene");
            return hdr;
        }
    }
    throw std::runtime_error("gen_hdr_scene: dynamic-range rejection did not converge");
}

ImageF simulate_ldr(const ImageF& hdr, const LdrSimConfig& cfg, SeededRng& rng) {
    if (cfg.exp_min <= 0.0 || cfg.exp_max < cfg.exp_min)
        throw std::invalid_argument("simulate_ldr: bad exposure range");
    const double exposure =
        std::exp(std::log(cfg.exp_min) +
                 rng.next_double() * (std::log(cfg.exp_max) - std::log(cfg.exp_min)));

    ImageF out(hdr.height(), hdr.width(), hdr.channels());
    for (int y = 0; y < hdr.height(); ++y)
        for (int x = 0; x < hdr.width(); ++x)
            for (int c = 0; c < hdr.channels(); ++c) {
                double v = std::clamp(exposure * hdr.at(y, x, c), 0.0, 1.0);
                if (cfg.sigma_read > 0.0 || cfg.sigma_shot > 0.0)
                    v += cfg.sigma_read * rng.next_normal() +
                         cfg.sigma_shot * std::sqrt(v) * rng.next_normal();
                v = srgb_encode_scalar(std::clamp(v, 0.0, 1.0));
                if (cfg.quantize) v = std::round(255.0 * v) / 255.0;
                out.at(y, x, c) = v;
            }
    return out;
}

TrainPair make_pair(const SceneConfig& scene_cfg, const LdrSimConfig& ldr_cfg,
                    SeededRng& rng, double mu) {
    TrainPair pair;
    const ImageF hdr = gen_hdr_scene(scene_cfg, rng);
    const double p99 = percentile(luminance(hdr).values(), 99.0);
    pair.hdr_norm = ImageF(hdr.height(), hdr.width(), 3);
    for (std::size_t i = 0; i < hdr.size(); ++i)
        pair.hdr_norm.data()[i] = hdr.data()[i] / p99;
    pair.x0_working = mu_law(pair.hdr_norm, mu);

    // Re-draw the exposure until both exposure tails are present.
    for (int attempt = 0; attempt < 16; ++attempt) {
        pair.y0 = simulate_ldr(pair.hdr_norm, ldr_cfg, rng);
        pair.masks = compute_masks(pair.y0);
        double over = 0.0, under = 0.0;
        for (double v : pair.masks.w_over.values()) over += v;
        for (double v : pair.masks.w_under.values()) under += v;
        const double n = static_cast<double>(pair.masks.w_over.size());
        if (!pair.masks.degenerate && over / n >= 0.005 && under / n >= 0.005) break;
    }
    return pair;
}

}  // namespace hdrcm
