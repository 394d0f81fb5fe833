#pragma once

#include "hdrcm/image.hpp"

namespace hdrcm {

// CIE L*a*b* planes (L* in [0,100], a*/b* roughly [-128,128]).
// Produced only by linear_to_lab.
struct LabImage {
    ImageF planes;  // 3-channel: L*, a*, b*
};

// Rec.709 luma weights over linear RGB: Y = 0.2126 R + 0.7152 G + 0.0722 B.
ImageF luminance(const ImageF& rgb);

// Linear-light Rec.709 RGB (D65) -> CIE L*a*b*. Negative inputs are
// clipped to 0 first.
LabImage linear_to_lab(const ImageF& rgb);
ImageF lab_to_linear(const LabImage& lab);

// Scalar forms shared by the metrics and loss kernels.
void linear_to_lab_pixel(double r, double g, double b,
                         double& L, double& a, double& bb);
void lab_to_linear_pixel(double L, double a, double bb,
                         double& r, double& g, double& b);
// Jacobian d(L*,a*,b*)/d(r,g,b) at a linear-RGB point (r,g,b >= 0).
void linear_to_lab_jacobian(double r, double g, double b, double jac[3][3]);

// mu-law range compression T(x) = ln(1 + mu x) / ln(1 + mu), x clipped to
// [0,1] first. T(0) = 0, T(1) = 1, strictly monotone.
ImageF mu_law(const ImageF& x, double mu = 5000.0);
ImageF mu_law_inv(const ImageF& y, double mu = 5000.0);
double mu_law_scalar(double x, double mu = 5000.0);
double mu_law_inv_scalar(double y, double mu = 5000.0);
// Derivatives on the open interval (used by the loss backward passes).
double mu_law_deriv_scalar(double x, double mu = 5000.0);
double mu_law_inv_deriv_scalar(double y, double mu = 5000.0);

// PU21 perceptual encoding (banding variant). Input values are relative
// luminance; they are scaled by peak_nits to absolute cd/m^2 and clamped
// to the calibrated [0.005, 10000] range before encoding.
ImageF pu21_encode(const ImageF& x, double peak_nits = 100.0);
double pu21_encode_scalar(double y_cd_m2);

// Standard piecewise sRGB transfer on [0,1].
ImageF srgb_encode(const ImageF& x);
ImageF srgb_decode(const ImageF& y);
double srgb_encode_scalar(double v);
double srgb_decode_scalar(double v);

}  // namespace hdrcm
