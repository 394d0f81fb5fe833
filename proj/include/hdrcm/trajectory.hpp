#pragma once

#include <vector>

#include "hdrcm/expomask.hpp"
#include "hdrcm/image.hpp"

namespace hdrcm {

// Time grid and coefficient functions of the forward trajectories.
// alpha(t) = t/T is linear so alpha(T) = 1 exactly, which makes the
// terminal state independent of the target image. The noise scales are
// linear in t with sigma_o >= sigma_g at every t: saturated regions get
// the strongest generative perturbation.
struct Schedule {
    double final_t = 1.0;    // T
    double eps_t = 0.002;    // minimal time
    int steps = 40;          // discretization steps N (grid has N+1 points)
    double sigma_g_scale = 0.5;
    double sigma_u_scale = 0.5;
    double sigma_o_scale = 1.0;
    double lambda_u = 1.0;   // weight of the low-pass guidance in dark regions
    double blur_sigma = 2.0; // low-pass operator width

    double alpha(double t) const { return t / final_t; }
    double sigma_o(double t) const { return sigma_o_scale * t; }
    double sigma_u(double t) const { return sigma_u_scale * t; }
    double sigma_g(double t) const { return sigma_g_scale * t; }
    void validate() const;
};

enum class TrajectoryMode { Baseline, TwoMask, ThreeMask };

// Strictly increasing uniform grid of steps+1 times from eps_t to T.
// Adjacent pairs (t_{i+1}, t_i) feed consistency training.
std::vector<double> time_grid(const Schedule& sched);

// Noisy state x_t at time t. All three regional trajectories share the
// same noise draw, so the blend is affine in (x0, y0, blur(y0), eps) and
// free of noise seams at mask transitions.
//   over : (1-a) x0 + sigma_o(t) eps
//   under: (1-a) x0 + a lambda_u blur(y0) + sigma_u(t) eps
//   good : (1-a) x0 + a y0 + sigma_g(t) eps
// ThreeMask blends all three by the masks; TwoMask sends both ill-posed
// regions (w_over + w_under) down the over-exposed trajectory; Baseline
// applies the good-region form everywhere.
ImageF sample_state(const ImageF& x0, const ImageF& y0, const ExposureMasks& masks,
                    double t, const ImageF& eps, const Schedule& sched,
                    TrajectoryMode mode);

// Inference initialization: sample_state at t = T where the x0
// coefficient vanishes, so no target image is required.
ImageF terminal_state(const ImageF& y0, const ExposureMasks& masks, const ImageF& eps,
                      const Schedule& sched, TrajectoryMode mode);

}  // namespace hdrcm
