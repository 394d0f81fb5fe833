#include "hdrcm/trajectory.hpp"

#include <stdexcept>

namespace hdrcm {

void Schedule::validate() const {
    if (!(final_t > 0.0) || !(eps_t > 0.0) || eps_t >= final_t)
        throw std::invalid_argument("Schedule: need 0 < eps_t < T");
    if (steps < 1) throw std::invalid_argument("Schedule: steps must be >= 1");
    if (sigma_g_scale < 0.0 || sigma_u_scale < 0.0 || sigma_o_scale < 0.0)
        throw std::invalid_argument("Schedule: sigma scales must be >= 0");
    if (sigma_o_scale < sigma_g_scale)
        throw std::invalid_argument("Schedule: need sigma_o(t) >= sigma_g(t)");
    if (blur_sigma <= 0.0) throw std::invalid_argument("Schedule: blur_sigma must be > 0");
}

std::vector<double> time_grid(const Schedule& sched) {
    sched.validate();
    std::vector<double> grid(sched.steps + 1);
    const double step = (sched.final_t - sched.eps_t) / sched.steps;
    for (int i = 0; i <= sched.steps; ++i) grid[i] = sched.eps_t + step * i;
    grid.back() = sched.final_t;  // exact endpoint
    return grid;
}

ImageF sample_state(const ImageF& x0, const ImageF& y0, const ExposureMasks& masks,
                    double t, const ImageF& eps, const Schedule& sched,
                    TrajectoryMode mode) {
    sched.validate();
    if (t < sched.eps_t || t > sched.final_t)
        throw std::invalid_argument("sample_state: t outside [eps_t, T]");
    if (!x0.same_shape(y0) || !x0.same_shape(eps))
        throw std::invalid_argument("sample_state: x0/y0/eps shape mismatch");
    if (masks.w_over.height() != x0.height() || masks.w_over.width() != x0.width())
        throw std::invalid_argument("sample_state: mask shape mismatch");

    const double a = sched.alpha(t);
    const double so = sched.sigma_o(t);
    const double su = sched.sigma_u(t);
    const double sg = sched.sigma_g(t);

    // The low-pass guidance only enters the under-exposed trajectory.
    const ImageF y_low = mode == TrajectoryMode::ThreeMask
                             ? gaussian_blur(y0, sched.blur_sigma)
                             : ImageF();
    ImageF out(x0.height(), x0.width(), x0.channels());

    for (int y = 0; y < x0.height(); ++y)
        for (int x = 0; x < x0.width(); ++x) {
            const double wo = masks.w_over.at(y, x, 0);
            const double wu = masks.w_under.at(y, x, 0);
            const double wg = masks.w_good.at(y, x, 0);
            for (int c = 0; c < x0.channels(); ++c) {
                const double base = (1.0 - a) * x0.at(y, x, c);
                const double e = eps.at(y, x, c);
                const double x_good = base + a * y0.at(y, x, c) + sg * e;
                double v;
                switch (mode) {
                    case TrajectoryMode::Baseline:
                        v = x_good;
                        break;
                    case TrajectoryMode::TwoMask: {
                        const double x_over = base + so * e;
                        v = (wo + wu) * x_over + wg * x_good;
                        break;
                    }
                    case TrajectoryMode::ThreeMask:
                    default: {
                        const double x_over = base + so * e;
                        const double x_under =
                            base + a * sched.lambda_u * y_low.at(y, x, c) + su * e;
                        v = wo * x_over + wu * x_under + wg * x_good;
                        break;
                    }
                }
                out.at(y, x, c) = v;
            }
        }
    out.require_finite("sample_state");
    return out;
}

ImageF terminal_state(const ImageF& y0, const ExposureMasks& masks, const ImageF& eps,
                      const Schedule& sched, TrajectoryMode mode) {
    const ImageF zero(y0.height(), y0.width(), y0.channels(), 0.0);
    return sample_state(zero, y0, masks, sched.final_t, eps, sched, mode);
}

}  // namespace hdrcm
