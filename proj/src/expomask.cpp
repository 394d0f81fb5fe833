#include "hdrcm/expomask.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hdrcm/colorspace.hpp"

namespace hdrcm {

void MaskConfig::validate() const {
    if (!(0.0 <= p_lo && p_lo < p_hi && p_hi <= 100.0))
        throw std::invalid_argument("MaskConfig: need 0 <= p_lo < p_hi <= 100");
    if (!(tau > 0.0 && tau < 0.5))
        throw std::invalid_argument("MaskConfig: need 0 < tau < 0.5");
    if (eps_q <= 0.0) throw std::invalid_argument("MaskConfig: eps_q must be > 0");
}

ExposureMasks masks_from_luminance(const ImageF& y, const MaskConfig& cfg) {
    cfg.validate();
    if (y.channels() != 1)
        throw std::invalid_argument("masks_from_luminance: expected a 1-channel image");
    y.require_finite("masks_from_luminance");

    std::vector<double> sorted(y.values().begin(), y.values().end());
    std::sort(sorted.begin(), sorted.end());
    const double q_lo = percentile_sorted(sorted, cfg.p_lo);
    const double q_hi = percentile_sorted(sorted, cfg.p_hi);

    const int h = y.height(), w = y.width();
    ExposureMasks m{ImageF(h, w, 1), ImageF(h, w, 1), ImageF(h, w, 1), false};

    if (q_hi - q_lo < cfg.eps_q) {
        // Near-constant luminance: no evidence of exposure failure.
        m.degenerate = true;
        for (double& v : m.w_good.values()) v = 1.0;
        return m;
    }

    const double band = cfg.tau * (q_hi - q_lo);
    const double l_core = q_lo + band;
    const double h_core = q_hi - band;

    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            const double Y = y.at(yy, xx, 0);
            const double m_low = std::clamp((l_core - Y) / band, 0.0, 1.0);
            const double m_high = std::clamp((Y - h_core) / band, 0.0, 1.0);
            const double w_over = m_high * (1.0 - m_low);
            const double w_under = m_low * (1.0 - m_high);
            m.w_over.at(yy, xx, 0) = w_over;
            m.w_under.at(yy, xx, 0) = w_under;
            m.w_good.at(yy, xx, 0) = 1.0 - std::max(w_over, w_under);
        }
    return m;
}

ExposureMasks compute_masks(const ImageF& ldr_rgb, const MaskConfig& cfg) {
    return masks_from_luminance(luminance(ldr_rgb), cfg);
}

}  // namespace hdrcm
