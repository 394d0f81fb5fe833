#pragma once

#include "hdrcm/expomask.hpp"
#include "hdrcm/image.hpp"

namespace hdrcm {

// Procedural HDR scene: a smooth multi-octave illumination field times
// random colored shapes, plus small high-intensity light sources. Values
// are strictly positive with a guaranteed wide dynamic range.
struct SceneConfig {
    int height = 128, width = 128;
    int n_shapes_min = 2, n_shapes_max = 8;
    double light_min = 2.0, light_max = 500.0;  // linear source intensities
    int octaves = 4;
    double min_dynamic_range = 100.0;  // required max/min luminance ratio
};

// Physically ordered LDR simulation: exposure scaling, clipping, read +
// shot noise in the linear domain, sRGB response, 8-bit quantization.
struct LdrSimConfig {
    double exp_min = 0.125;   // exposure scale drawn log-uniformly
    double exp_max = 8.0;
    double sigma_read = 0.01;
    double sigma_shot = 0.02;
    bool quantize = true;
};

ImageF gen_hdr_scene(const SceneConfig& cfg, SeededRng& rng);

// Exposure scale is drawn from the config range by the caller-provided
// rng; pass exp_min == exp_max to pin it.
ImageF simulate_ldr(const ImageF& hdr, const LdrSimConfig& cfg, SeededRng& rng);

// A training/eval pair in the model's working domain:
//   x0 = mu_law(clip(hdr / p99_luminance, 0, 1)), y0 = simulated LDR,
//   masks from y0. Pairs whose masks never touch the exposure tails are
//   re-drawn with a fresh exposure (bounded retries).
struct TrainPair {
    ImageF hdr_norm;     // linear HDR normalized by its 99th luminance percentile
    ImageF x0_working;   // mu-law compressed, clipped to [0,1]
    ImageF y0;           // LDR in [0,1]
    ExposureMasks masks;
};

TrainPair make_pair(const SceneConfig& scene_cfg, const LdrSimConfig& ldr_cfg,
                    SeededRng& rng, double mu = 5000.0);

}  // namespace hdrcm
