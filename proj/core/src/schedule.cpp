#include "soe/schedule.hpp"

#include <cmath>
#include <numbers>

#include "soe/errors.hpp"

namespace soe {

namespace {

// theta(0) = 0 makes the t = 0 endpoint exact (alpha = 1, sigma = 0), so an
// oracle denoiser reconstructs the clean latent to machine precision.
// theta(T) = pi/2 - 0.005 gives alpha(T) ~ 0.005, comfortably inside the
// ddim_step singularity guard.
constexpr double kThetaStart = 0.0;
const double kThetaEnd = std::numbers::pi / 2.0 - 0.005;

void check_timestep(int t, const NoiseSchedule& sched, const char* op) {
    if (t < 0 || t > sched.total_steps) {
        throw UsageError(std::string(op) + ": timestep " + std::to_string(t) +
                         " outside [0, " + std::to_string(sched.total_steps) + "]");
    }
}

}  // namespace

NoiseSchedule make_schedule(int total_steps) {
    if (total_steps < 2) {
        throw ConfigError("schedule needs at least 2 timesteps");
    }
    NoiseSchedule s;
    s.total_steps = total_steps;
    s.alpha.resize(static_cast<std::size_t>(total_steps) + 1);
    s.sigma.resize(static_cast<std::size_t>(total_steps) + 1);
    for (int t = 0; t <= total_steps; ++t) {
        const double theta =
            kThetaStart + (kThetaEnd - kThetaStart) * static_cast<double>(t) / total_steps;
        s.alpha[static_cast<std::size_t>(t)] = std::cos(theta);
        s.sigma[static_cast<std::size_t>(t)] = std::sin(theta);
    }
    return s;
}

Tensor add_noise(const Tensor& z, int t, const Tensor& eps, const NoiseSchedule& sched) {
    check_timestep(t, sched, "add_noise");
    if (!z.same_shape(eps)) {
        throw DimensionError("add_noise: z and eps shapes differ");
    }
    const double a = sched.alpha[static_cast<std::size_t>(t)];
    const double s = sched.sigma[static_cast<std::size_t>(t)];
    return add_scaled(scale(z, a), eps, s);
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, const NoiseSchedule& sched) {
    if (t < 1) {
        throw UsageError("ddim_step: t must be >= 1");
    }
    check_timestep(t, sched, "ddim_step");
    if (!z_t.same_shape(eps_hat)) {
        throw DimensionError("ddim_step: z_t and eps_hat shapes differ");
    }
    const double a_t = sched.alpha[static_cast<std::size_t>(t)];
    if (a_t < 1e-12) {
        throw ScheduleError("ddim_step: alpha(t) is numerically singular");
    }
    const double s_t = sched.sigma[static_cast<std::size_t>(t)];
    const double a_prev = sched.alpha[static_cast<std::size_t>(t - 1)];
    const double s_prev = sched.sigma[static_cast<std::size_t>(t - 1)];
    Tensor zhat0 = scale(add_scaled(z_t, eps_hat, -s_t), 1.0 / a_t);
    return add_scaled(scale(zhat0, a_prev), eps_hat, s_prev);
}

}  // namespace soe
