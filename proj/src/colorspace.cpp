#include "hdrcm/colorspace.hpp"

#include <cmath>
#include <stdexcept>

namespace hdrcm {

namespace {

constexpr double kDelta = 6.0 / 29.0;
constexpr double kDelta3 = kDelta * kDelta * kDelta;

// RGB <-> XYZ derived from the Rec.709 primaries and D65 white
// (ITU-R BT.709-6 chromaticities) at double precision, so that (1,1,1)
// maps exactly onto the white point and grays are exactly neutral.
struct ColorMatrices {
    double m[3][3];     // RGB -> XYZ
    double minv[3][3];  // XYZ -> RGB
    double white[3];

    ColorMatrices() {
        const double prim[3][2] = {{0.64, 0.33}, {0.30, 0.60}, {0.15, 0.06}};
        const double xw = 0.3127, yw = 0.3290;
        double p[3][3];  // XYZ of unit-Y primaries, columns R,G,B
        for (int c = 0; c < 3; ++c) {
            p[0][c] = prim[c][0] / prim[c][1];
            p[1][c] = 1.0;
            p[2][c] = (1.0 - prim[c][0] - prim[c][1]) / prim[c][1];
        }
        white[0] = xw / yw;
        white[1] = 1.0;
        white[2] = (1.0 - xw - yw) / yw;
        double pinv[3][3];
        invert3(p, pinv);
        for (int c = 0; c < 3; ++c) {
            const double s =
                pinv[c][0] * white[0] + pinv[c][1] * white[1] + pinv[c][2] * white[2];
            for (int r = 0; r < 3; ++r) m[r][c] = p[r][c] * s;
        }
        invert3(m, minv);
    }

    static void invert3(const double a[3][3], double out[3][3]) {
        const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        out[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
        out[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
        out[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
        out[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
        out[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
        out[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
        out[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
        out[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
        out[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    }
};
const ColorMatrices kCM;

double lab_f(double t) {
    return t > kDelta3 ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double u) {
    return u > kDelta ? u * u * u : 3.0 * kDelta * kDelta * (u - 4.0 / 29.0);
}

// PU21 banding coefficients (published parameter set).
constexpr double kPu21[7] = {1.070275272,  0.4088273932, 0.153224308, 0.2520326168,
                             1.063512885,  1.14115047,   521.4527484};

}  // namespace

ImageF luminance(const ImageF& rgb) {
    if (rgb.channels() != 3)
        throw std::invalid_argument("luminance: expected a 3-channel image");
    ImageF out(rgb.height(), rgb.width(), 1);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out.at(y, x, 0) = 0.2126 * rgb.at(y, x, 0) + 0.7152 * rgb.at(y, x, 1) +
                              0.0722 * rgb.at(y, x, 2);
    return out;
}

void linear_to_lab_pixel(double r, double g, double b,
                         double& L, double& a, double& bb) {
    r = r < 0.0 ? 0.0 : r;
    g = g < 0.0 ? 0.0 : g;
    b = b < 0.0 ? 0.0 : b;
    const double X = kCM.m[0][0] * r + kCM.m[0][1] * g + kCM.m[0][2] * b;
    const double Y = kCM.m[1][0] * r + kCM.m[1][1] * g + kCM.m[1][2] * b;
    const double Z = kCM.m[2][0] * r + kCM.m[2][1] * g + kCM.m[2][2] * b;
    const double fx = lab_f(X / kCM.white[0]);
    const double fy = lab_f(Y / kCM.white[1]);
    const double fz = lab_f(Z / kCM.white[2]);
    L = 116.0 * fy - 16.0;
    a = 500.0 * (fx - fy);
    bb = 200.0 * (fy - fz);
}

void lab_to_linear_pixel(double L, double a, double bb,
                         double& r, double& g, double& b) {
    const double fy = (L + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - bb / 200.0;
    const double X = kCM.white[0] * lab_f_inv(fx);
    const double Y = kCM.white[1] * lab_f_inv(fy);
    const double Z = kCM.white[2] * lab_f_inv(fz);
    r = kCM.minv[0][0] * X + kCM.minv[0][1] * Y + kCM.minv[0][2] * Z;
    g = kCM.minv[1][0] * X + kCM.minv[1][1] * Y + kCM.minv[1][2] * Z;
    b = kCM.minv[2][0] * X + kCM.minv[2][1] * Y + kCM.minv[2][2] * Z;
}

void linear_to_lab_jacobian(double r, double g, double b, double jac[3][3]) {
    r = r < 0.0 ? 0.0 : r;
    g = g < 0.0 ? 0.0 : g;
    b = b < 0.0 ? 0.0 : b;
    const double X = kCM.m[0][0] * r + kCM.m[0][1] * g + kCM.m[0][2] * b;
    const double Y = kCM.m[1][0] * r + kCM.m[1][1] * g + kCM.m[1][2] * b;
    const double Z = kCM.m[2][0] * r + kCM.m[2][1] * g + kCM.m[2][2] * b;
    auto fprime = [](double t) {
        return t > kDelta3 ? 1.0 / (3.0 * std::cbrt(t * t))
                           : 1.0 / (3.0 * kDelta * kDelta);
    };
    // d f(X/Xn) / d channel j
    double dfx[3], dfy[3], dfz[3];
    for (int j = 0; j < 3; ++j) {
        dfx[j] = fprime(X / kCM.white[0]) * kCM.m[0][j] / kCM.white[0];
        dfy[j] = fprime(Y / kCM.white[1]) * kCM.m[1][j] / kCM.white[1];
        dfz[j] = fprime(Z / kCM.white[2]) * kCM.m[2][j] / kCM.white[2];
    }
    for (int j = 0; j < 3; ++j) {
        jac[0][j] = 116.0 * dfy[j];
        jac[1][j] = 500.0 * (dfx[j] - dfy[j]);
        jac[2][j] = 200.0 * (dfy[j] - dfz[j]);
    }
}

LabImage linear_to_lab(const ImageF& rgb) {
    if (rgb.channels() != 3)
        throw std::invalid_argument("linear_to_lab: expected a 3-channel image");
    LabImage out{ImageF(rgb.height(), rgb.width(), 3)};
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            double L, a, b;
            linear_to_lab_pixel(rgb.at(y, x, 0), rgb.at(y, x, 1), rgb.at(y, x, 2), L, a, b);
            out.planes.at(y, x, 0) = L;
            out.planes.at(y, x, 1) = a;
            out.planes.at(y, x, 2) = b;
        }
    return out;
}

ImageF lab_to_linear(const LabImage& lab) {
    const ImageF& p = lab.planes;
    ImageF out(p.height(), p.width(), 3);
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
            double r, g, b;
            lab_to_linear_pixel(p.at(y, x, 0), p.at(y, x, 1), p.at(y, x, 2), r, g, b);
            out.at(y, x, 0) = r;
            out.at(y, x, 1) = g;
            out.at(y, x, 2) = b;
        }
    return out;
}

double mu_law_scalar(double x, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("mu_law: mu must be > 0");
    x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
    return std::log1p(mu * x) / std::log1p(mu);
}

double mu_law_inv_scalar(double y, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("mu_law_inv: mu must be > 0");
    y = y < 0.0 ? 0.0 : (y > 1.0 ? 1.0 : y);
    return std::expm1(y * std::log1p(mu)) / mu;
}

double mu_law_deriv_scalar(double x, double mu) {
    return mu / ((1.0 + mu * x) * std::log1p(mu));
}

double mu_law_inv_deriv_scalar(double y, double mu) {
    const double l = std::log1p(mu);
    return l * std::exp(y * l) / mu;
}

ImageF mu_law(const ImageF& x, double mu) {
    ImageF out(x.height(), x.width(), x.channels());
    const double* in = x.data();
    double* o = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = mu_law_scalar(in[i], mu);
    return out;
}

ImageF mu_law_inv(const ImageF& y, double mu) {
    ImageF out(y.height(), y.width(), y.channels());
    const double* in = y.data();
    double* o = out.data();
    for (std::size_t i = 0; i < y.size(); ++i) o[i] = mu_law_inv_scalar(in[i], mu);
    return out;
}

double pu21_encode_scalar(double y_cd_m2) {
    double y = y_cd_m2 < 0.005 ? 0.005 : (y_cd_m2 > 10000.0 ? 10000.0 : y_cd_m2);
    const double yp = std::pow(y, kPu21[3]);
    return kPu21[6] *
           (std::pow((kPu21[0] + kPu21[1] * yp) / (1.0 + kPu21[2] * yp), kPu21[4]) - kPu21[5]);
}

ImageF pu21_encode(const ImageF& x, double peak_nits) {
    ImageF out(x.height(), x.width(), x.channels());
    const double* in = x.data();
    double* o = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = pu21_encode_scalar(in[i] * peak_nits);
    return out;
}

double srgb_encode_scalar(double v) {
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_decode_scalar(double v) {
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

ImageF srgb_encode(const ImageF& x) {
    ImageF out(x.height(), x.width(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = srgb_encode_scalar(x.data()[i]);
    return out;
}

ImageF srgb_decode(const ImageF& y) {
    ImageF out(y.height(), y.width(), y.channels());
    for (std::size_t i = 0; i < y.size(); ++i) out.data()[i] = srgb_decode_scalar(y.data()[i]);
    return out;
}

}  // namespace hdrcm
