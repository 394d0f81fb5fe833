#include "hdrcm/losses.hpp"

#include <algorithm>
#include <stdexcept>

namespace hdrcm {

void ElcConfig::validate() const {
    if (kappa_L_lo < 0 || kappa_L_hi < 0 || kappa_C_hi < 0 || kappa_C_lo < 0)
        throw std::invalid_argument("ElcConfig: kappas must be >= 0");
    if (delta_s <= 0 || delta_h <= 0)
        throw std::invalid_argument("ElcConfig: deltas must be > 0");
    if (alpha_exp <= 0) throw std::invalid_argument("ElcConfig: alpha_exp must be > 0");
    if (c0 <= 0) throw std::invalid_argument("ElcConfig: c0 must be > 0");
    if (eps_charb <= 0) throw std::invalid_argument("ElcConfig: eps_charb must be > 0");
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void elc_weights(const ImageF& y_lum, const ExposureMasks& masks, const LabImage& gt_lab,
                 const ElcConfig& cfg, ImageF& w_L, ImageF& w_C) {
    cfg.validate();
    if (y_lum.channels() != 1)
        throw std::invalid_argument("elc_weights: expected a luminance plane");
    const int h = y_lum.height(), w = y_lum.width();
    w_L = ImageF(h, w, 1);
    w_C = ImageF(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (cfg.uniform) {
                w_L.at(y, x, 0) = cfg.lambda_L0;
                w_C.at(y, x, 0) = cfg.lambda_C0;
                continue;
            }
            const double Y = y_lum.at(y, x, 0);
            const double s_y = sigmoid((cfg.tau_s - Y) / cfg.delta_s);
            const double h_y = sigmoid((Y - cfg.tau_h) / cfg.delta_h);
            const double a0 = gt_lab.planes.at(y, x, 1);
            const double b0 = gt_lab.planes.at(y, x, 2);
            const double chroma0 = std::sqrt(a0 * a0 + b0 * b0);
            const double a_spec = 1.0 / (1.0 + chroma0 / cfg.c0);
            const double wo = std::pow(masks.w_over.at(y, x, 0), cfg.alpha_exp);
            const double wu = std::pow(masks.w_under.at(y, x, 0), cfg.alpha_exp);
            w_L.at(y, x, 0) =
                cfg.lambda_L0 * (1.0 + cfg.kappa_L_lo * s_y * wu + cfg.kappa_L_hi * a_spec * wo);
            w_C.at(y, x, 0) = cfg.lambda_C0 * (cfg.kappa_C_hi * wo * (1.0 - a_spec) * h_y +
                                               cfg.kappa_C_lo * wu * (1.0 - s_y));
        }
}

ElcResult elc_loss(const ImageF& pred_hdr, const ImageF& gt_hdr, const ImageF& y0,
                   const ExposureMasks& masks, const ElcConfig& cfg, double mu,
                   bool want_grad) {
    cfg.validate();
    if (!pred_hdr.same_shape(gt_hdr) || pred_hdr.channels() != 3)
        throw std::invalid_argument("elc_loss: expected matching 3-channel HDR images");
    const int h = pred_hdr.height(), w = pred_hdr.width();

    const ImageF gt_t = mu_law(gt_hdr, mu);
    const LabImage gt_lab = linear_to_lab(gt_t);
    ImageF w_L, w_C;
    elc_weights(luminance(y0), masks, gt_lab, cfg, w_L, w_C);

    ElcResult res;
    if (want_grad) res.grad_pred = ImageF(h, w, 3);
    const double inv_n = 1.0 / (static_cast<double>(h) * w);
    const double e2 = cfg.eps_charb * cfg.eps_charb;

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double pr = pred_hdr.at(y, x, 0);
            const double pg = pred_hdr.at(y, x, 1);
            const double pb = pred_hdr.at(y, x, 2);
            const double tr = mu_law_scalar(pr, mu);
            const double tg = mu_law_scalar(pg, mu);
            const double tb = mu_law_scalar(pb, mu);
            double lh, ah, bh;
            linear_to_lab_pixel(tr, tg, tb, lh, ah, bh);
            const double dl = lh - gt_lab.planes.at(y, x, 0);
            const double da = ah - gt_lab.planes.at(y, x, 1);
            const double db = bh - gt_lab.planes.at(y, x, 2);
            const double rho_l = std::sqrt(dl * dl + e2);
            const double rho_c = std::sqrt(da * da + db * db + e2);
            const double wl = w_L.at(y, x, 0);
            const double wc = w_C.at(y, x, 0);
            res.loss += inv_n * (wl * rho_l + wc * rho_c);
            if (!std::isfinite(res.loss))
                throw std::runtime_error("elc_loss: non-finite loss");
            if (!want_grad) continue;

            // d loss / d Lab-hat
            const double g_l = inv_n * wl * dl / rho_l;
            const double g_a = inv_n * wc * da / rho_c;
            const double g_b = inv_n * wc * db / rho_c;
            double jac[3][3];
            linear_to_lab_jacobian(tr, tg, tb, jac);
            const double t_in[3] = {pr, pg, pb};
            for (int j = 0; j < 3; ++j) {
                const double g_t = g_l * jac[0][j] + g_a * jac[1][j] + g_b * jac[2][j];
                const double inside = t_in[j] > 0.0 && t_in[j] < 1.0 ? 1.0 : 0.0;
                res.grad_pred.at(y, x, j) =
                    g_t * mu_law_deriv_scalar(std::clamp(t_in[j], 0.0, 1.0), mu) * inside;
            }
        }
    return res;
}

}  // namespace hdrcm
