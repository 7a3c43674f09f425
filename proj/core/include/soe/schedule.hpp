#pragma once

#include <vector>

#include "soe/tensor.hpp"

namespace soe {

/// Variance-preserving noise schedule: z_t = alpha(t) * z + sigma(t) * eps
/// with alpha^2 + sigma^2 = 1 at every step.
struct NoiseSchedule {
    int total_steps = 0;        // T
    std::vector<double> alpha;  // indexed 0..T
    std::vector<double> sigma;
};

/// Cosine-shaped schedule: alpha(t) = cos(theta(t)) for a linear theta ramp,
/// so the VP identity holds exactly. alpha(0) >= 0.999, alpha(T) <= 0.01,
/// strictly decreasing.
NoiseSchedule make_schedule(int total_steps);

Tensor add_noise(const Tensor& z, int t, const Tensor& eps, const NoiseSchedule& sched);

/// Deterministic (eta = 0) DDIM update from t to t-1:
/// zhat0 = (z_t - sigma(t) eps_hat) / alpha(t); returns alpha(t-1) zhat0 + sigma(t-1) eps_hat.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, const NoiseSchedule& sched);

}  // namespace soe
