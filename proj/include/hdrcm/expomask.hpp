#pragma once

#include "hdrcm/image.hpp"

namespace hdrcm {

struct MaskConfig {
    double p_lo = 2.0;     // lower luminance percentile
    double p_hi = 98.0;    // upper luminance percentile
    double tau = 0.02;     // transition-band margin
    double eps_q = 1e-4;   // percentile-spread degeneracy threshold
    void validate() const;
};

// Soft exposure partition of an LDR image. Per pixel, all weights lie in
// [0,1], w_over * w_under = 0, and w_over + w_under + w_good = 1.
// `degenerate` is set when the luminance spread collapses (q_hi - q_lo <
// eps_q) and the image is treated as entirely well exposed.
struct ExposureMasks {
    ImageF w_over, w_under, w_good;
    bool degenerate = false;
};

// Percentile-banded soft masks from the image's own luminance statistics.
ExposureMasks compute_masks(const ImageF& ldr_rgb, const MaskConfig& cfg = {});

// Same computation from a precomputed luminance plane. The statistics are
// affine-equivariant in Y, which this entry point exposes for testing on
// unclipped synthetic luminance maps.
ExposureMasks masks_from_luminance(const ImageF& y, const MaskConfig& cfg = {});

}  // namespace hdrcm
