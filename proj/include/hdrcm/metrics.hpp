#pragma once

#include <string>
#include <vector>

#include "hdrcm/image.hpp"

namespace hdrcm {

inline constexpr double kPsnrCeilingDb = 99.0;  // reported for exact matches

enum class PsnrDomain { Linear, Mu, Pu };

// Per-pair evaluation record. PSNRs in dB, SSIMs unitless, delta_e2000 in
// mean CIEDE2000 units.
struct MetricReport {
    double psnr_l = 0.0, psnr_mu = 0.0, psnr_pu = 0.0;
    double ssim_mu = 0.0, msssim_mu = 0.0;
    double delta_e2000 = 0.0;
};

// PSNR between pred and ref after both are normalized by the reference's
// 99th-percentile luminance and mapped through the domain transform
// (whose output is rescaled to [0,1]). MSE = 0 reports the ceiling.
double psnr(const ImageF& pred, const ImageF& ref, PsnrDomain domain,
            double mu = 5000.0, double peak_nits = 100.0);

// Single-scale SSIM on 1-channel images in [0,1]: 11x11 Gaussian window
// (sigma 1.5), K1 = 0.01, K2 = 0.03, valid-window statistics.
double ssim(const ImageF& a, const ImageF& b);

// MS-SSIM over up to 5 dyadic scales with the standard published weights
// and 2x2 block-mean downsampling. Images smaller than 176 pixels in
// either dimension get fewer scales (renormalized weights) and a warning
// on stderr.
double msssim(const ImageF& a, const ImageF& b);

// Full CIEDE2000 color difference (with the hue rotation term) between
// two Lab triples.
double ciede2000(double l1, double a1, double b1,
                 double l2, double a2, double b2);

// Mean per-pixel CIEDE2000 between two RGB images after 99th-percentile
// normalization by the reference, mu-law compression and Lab conversion.
double delta_e2000(const ImageF& pred, const ImageF& ref, double mu = 5000.0);

// Runs the whole suite on one pair (pred, ref both linear HDR).
MetricReport evaluate_pair(const ImageF& pred, const ImageF& ref,
                           double mu = 5000.0, double peak_nits = 100.0);

std::string metric_csv_header();
std::string metric_csv_row(const std::string& name, const MetricReport& r);

}  // namespace hdrcm
