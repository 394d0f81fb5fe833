#include "hdrcm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hdrcm/colorspace.hpp"

namespace hdrcm {

namespace {

constexpr double kK1 = 0.01, kK2 = 0.03;
constexpr int kWinRadius = 5;  // 11x11 window
constexpr double kWinSigma = 1.5;
constexpr double kMsssimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

double p99_luminance(const ImageF& img) {
    const ImageF y = img.channels() == 3 ? luminance(img) : img;
    return percentile(y.values(), 99.0);
}

ImageF scaled(const ImageF& img, double s) {
    ImageF out(img.height(), img.width(), img.channels());
    for (std::size_t i = 0; i < img.size(); ++i) out.data()[i] = img.data()[i] * s;
    return out;
}

// Domain transform rescaled so [0,1] input maps onto [0,1] output.
ImageF to_domain(const ImageF& x, PsnrDomain domain, double mu, double peak_nits) {
    switch (domain) {
        case PsnrDomain::Linear: {
            ImageF out = x;
            for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
            return out;
        }
        case PsnrDomain::Mu:
            return mu_law(x, mu);
        case PsnrDomain::Pu:
        default: {
            const double lo = pu21_encode_scalar(0.005);
            const double hi = pu21_encode_scalar(peak_nits);
            ImageF out = pu21_encode(x, peak_nits);
            for (double& v : out.values()) v = (v - lo) / (hi - lo);
            return out;
        }
    }
}

// Separable valid-mode Gaussian filtering of a 1-channel image.
ImageF gauss_valid(const ImageF& img, const std::vector<double>& k) {
    const int r = (static_cast<int>(k.size()) - 1) / 2;
    const int h = img.height(), w = img.width();
    if (h < 2 * r + 1 || w < 2 * r + 1)
        throw std::invalid_argument("ssim: image smaller than the filter window");
    ImageF tmp(h, w - 2 * r, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w - 2 * r; ++x) {
            double acc = 0.0;
            for (int i = 0; i < 2 * r + 1; ++i) acc += k[i] * img.at(y, x + i, 0);
            tmp.at(y, x, 0) = acc;
        }
    ImageF out(h - 2 * r, w - 2 * r, 1);
    for (int y = 0; y < h - 2 * r; ++y)
        for (int x = 0; x < w - 2 * r; ++x) {
            double acc = 0.0;
            for (int i = 0; i < 2 * r + 1; ++i) acc += k[i] * tmp.at(y + i, x, 0);
            out.at(y, x, 0) = acc;
        }
    return out;
}

std::vector<double> ssim_kernel() {
    std::vector<double> k(2 * kWinRadius + 1);
    double sum = 0.0;
    for (int i = -kWinRadius; i <= kWinRadius; ++i) {
        k[i + kWinRadius] = std::exp(-0.5 * (i / kWinSigma) * (i / kWinSigma));
        sum += k[i + kWinRadius];
    }
    for (double& v : k) v /= sum;
    return k;
}

ImageF mul_images(const ImageF& a, const ImageF& b) {
    ImageF out(a.height(), a.width(), 1);
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

// Mean of the full SSIM map (l * cs per window) and mean of the
// contrast-structure term alone, over valid windows.
void ssim_terms(const ImageF& a, const ImageF& b, double& mean_lcs, double& mean_cs) {
    const auto k = ssim_kernel();
    const double c1 = kK1 * kK1, c2 = kK2 * kK2;
    const ImageF mu1 = gauss_valid(a, k), mu2 = gauss_valid(b, k);
    const ImageF saa = gauss_valid(mul_images(a, a), k);
    const ImageF sbb = gauss_valid(mul_images(b, b), k);
    const ImageF sab = gauss_valid(mul_images(a, b), k);
    double lcs_sum = 0.0, cs_sum = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
        const double m1 = mu1.data()[i], m2 = mu2.data()[i];
        const double v1 = saa.data()[i] - m1 * m1;
        const double v2 = sbb.data()[i] - m2 * m2;
        const double cov = sab.data()[i] - m1 * m2;
        const double l = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
        const double cs = (2.0 * cov + c2) / (v1 + v2 + c2);
        lcs_sum += l * cs;
        cs_sum += cs;
    }
    mean_lcs = lcs_sum / static_cast<double>(mu1.size());
    mean_cs = cs_sum / static_cast<double>(mu1.size());
}

ImageF downsample2(const ImageF& img) {
    const int h2 = img.height() / 2, w2 = img.width() / 2;
    ImageF out(h2, w2, 1);
    for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x)
            out.at(y, x, 0) = 0.25 * (img.at(2 * y, 2 * x, 0) + img.at(2 * y, 2 * x + 1, 0) +
                                      img.at(2 * y + 1, 2 * x, 0) + img.at(2 * y + 1, 2 * x + 1, 0));
    return out;
}

}  // namespace

double psnr(const ImageF& pred, const ImageF& ref, PsnrDomain domain, double mu,
            double peak_nits) {
    if (!pred.same_shape(ref)) throw std::invalid_argument("psnr: shape mismatch");
    const double anchor = p99_luminance(ref);
    const double s = anchor > 0.0 ? 1.0 / anchor : 1.0;
    const ImageF a = to_domain(scaled(pred, s), domain, mu, peak_nits);
    const ImageF b = to_domain(scaled(ref, s), domain, mu, peak_nits);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return kPsnrCeilingDb;
    return std::min(kPsnrCeilingDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageF& a, const ImageF& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    if (a.channels() != 1) throw std::invalid_argument("ssim: expected 1-channel images");
    double mean_lcs = 0.0, mean_cs = 0.0;
    ssim_terms(a, b, mean_lcs, mean_cs);
    return mean_lcs;
}

double msssim(const ImageF& a, const ImageF& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("msssim: shape mismatch");
    if (a.channels() != 1) throw std::invalid_argument("msssim: expected 1-channel images");
    const int min_dim = std::min(a.height(), a.width());
    int scales = 1;
    while (scales < 5 && (min_dim >> scales) >= 2 * kWinRadius + 1) ++scales;
    if (scales < 5)
        std::fprintf(stderr,
                     "msssim: %dx%d too small for 5 scales, using %d (weights renormalized)\n",
                     a.height(), a.width(), scales);
    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += kMsssimWeights[s];

    ImageF x = a, y = b;
    double result = 1.0;
    for (int s = 0; s < scales; ++s) {
        double mean_lcs = 0.0, mean_cs = 0.0;
        ssim_terms(x, y, mean_lcs, mean_cs);
        const double w = scales == 5 ? kMsssimWeights[s] : kMsssimWeights[s] / wsum;
        if (s == scales - 1) {
            result *= std::pow(std::max(mean_lcs, 0.0), w);
        } else {
            result *= std::pow(std::max(mean_cs, 0.0), w);
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return result;
}

double ciede2000(double l1, double a1, double b1, double l2, double a2, double b2) {
    constexpr double deg2rad = std::numbers::pi / 180.0;
    const double c1 = std::sqrt(a1 * a1 + b1 * b1);
    const double c2 = std::sqrt(a2 * a2 + b2 * b2);
    const double cbar = 0.5 * (c1 + c2);
    const double cbar7 = std::pow(cbar, 7.0);
    const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + std::pow(25.0, 7.0))));
    const double ap1 = (1.0 + g) * a1;
    const double ap2 = (1.0 + g) * a2;
    const double cp1 = std::sqrt(ap1 * ap1 + b1 * b1);
    const double cp2 = std::sqrt(ap2 * ap2 + b2 * b2);

    auto hue = [](double ap, double b) {
        if (ap == 0.0 && b == 0.0) return 0.0;
        double h = std::atan2(b, ap) / deg2rad;
        return h < 0.0 ? h + 360.0 : h;
    };
    const double hp1 = hue(ap1, b1);
    const double hp2 = hue(ap2, b2);

    const double dlp = l2 - l1;
    const double dcp = cp2 - cp1;
    double dhp_angle = 0.0;
    if (cp1 * cp2 != 0.0) {
        double diff = hp2 - hp1;
        if (diff > 180.0)
            diff -= 360.0;
        else if (diff < -180.0)
            diff += 360.0;
        dhp_angle = diff;
    }
    const double dhp = 2.0 * std::sqrt(cp1 * cp2) * std::sin(0.5 * dhp_angle * deg2rad);

    const double lbar = 0.5 * (l1 + l2);
    const double cpbar = 0.5 * (cp1 + cp2);
    double hpbar;
    if (cp1 * cp2 == 0.0) {
        hpbar = hp1 + hp2;
    } else {
        const double diff = std::fabs(hp1 - hp2);
        const double sum = hp1 + hp2;
        if (diff <= 180.0)
            hpbar = 0.5 * sum;
        else if (sum < 360.0)
            hpbar = 0.5 * (sum + 360.0);
        else
            hpbar = 0.5 * (sum - 360.0);
    }

    const double t = 1.0 - 0.17 * std::cos((hpbar - 30.0) * deg2rad) +
                     0.24 * std::cos(2.0 * hpbar * deg2rad) +
                     0.32 * std::cos((3.0 * hpbar + 6.0) * deg2rad) -
                     0.20 * std::cos((4.0 * hpbar - 63.0) * deg2rad);
    const double dtheta = 30.0 * std::exp(-((hpbar - 275.0) / 25.0) * ((hpbar - 275.0) / 25.0));
    const double cpbar7 = std::pow(cpbar, 7.0);
    const double rc = 2.0 * std::sqrt(cpbar7 / (cpbar7 + std::pow(25.0, 7.0)));
    const double lterm = (lbar - 50.0) * (lbar - 50.0);
    const double sl = 1.0 + 0.015 * lterm / std::sqrt(20.0 + lterm);
    const double sc = 1.0 + 0.045 * cpbar;
    const double sh = 1.0 + 0.015 * cpbar * t;
    const double rt = -std::sin(2.0 * dtheta * deg2rad) * rc;

    const double tl = dlp / sl;
    const double tc = dcp / sc;
    const double th = dhp / sh;
    return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double delta_e2000(const ImageF& pred, const ImageF& ref, double mu) {
    if (!pred.same_shape(ref) || pred.channels() != 3)
        throw std::invalid_argument("delta_e2000: expected matching 3-channel images");
    const double anchor = p99_luminance(ref);
    const double s = anchor > 0.0 ? 1.0 / anchor : 1.0;
    const LabImage la = linear_to_lab(mu_law(scaled(pred, s), mu));
    const LabImage lb = linear_to_lab(mu_law(scaled(ref, s), mu));
    double sum = 0.0;
    const int n = pred.height() * pred.width();
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x)
            sum += ciede2000(la.planes.at(y, x, 0), la.planes.at(y, x, 1), la.planes.at(y, x, 2),
                             lb.planes.at(y, x, 0), lb.planes.at(y, x, 1), lb.planes.at(y, x, 2));
    return sum / n;
}

MetricReport evaluate_pair(const ImageF& pred, const ImageF& ref, double mu,
                           double peak_nits) {
    MetricReport r;
    r.psnr_l = psnr(pred, ref, PsnrDomain::Linear, mu, peak_nits);
    r.psnr_mu = psnr(pred, ref, PsnrDomain::Mu, mu, peak_nits);
    r.psnr_pu = psnr(pred, ref, PsnrDomain::Pu, mu, peak_nits);
    const double anchor = p99_luminance(ref);
    const double s = anchor > 0.0 ? 1.0 / anchor : 1.0;
    const ImageF ya = luminance(mu_law(scaled(pred, s), mu));
    const ImageF yb = luminance(mu_law(scaled(ref, s), mu));
    r.ssim_mu = ssim(ya, yb);
    r.msssim_mu = msssim(ya, yb);
    r.delta_e2000 = delta_e2000(pred, ref, mu);
    return r;
}

std::string metric_csv_header() {
    return "name,psnr_l,psnr_mu,psnr_pu,ssim_mu,msssim_mu,delta_e2000";
}

std::string metric_csv_row(const std::string& name, const MetricReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << name << "," << r.psnr_l << "," << r.psnr_mu << "," << r.psnr_pu << ","
       << r.ssim_mu << "," << r.msssim_mu << "," << r.delta_e2000;
    return os.str();
}

}  // namespace hdrcm
