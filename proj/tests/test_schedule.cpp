#include <doctest.h>

#include <random>

#include "soe/errors.hpp"
#include "soe/rng.hpp"
#include "soe/schedule.hpp"

using namespace soe;

TEST_CASE("schedule endpoints and variance-preserving identity") {
    const NoiseSchedule s = make_schedule(50);
    CHECK(s.alpha[0] >= 0.999);
    CHECK(s.alpha[50] <= 0.01);
    for (int t = 0; t <= 50; ++t) {
        const double a = s.alpha[static_cast<std::size_t>(t)];
        const double sg = s.sigma[static_cast<std::size_t>(t)];
        CHECK(std::abs(a * a + sg * sg - 1.0) < 1e-9);
    }
}

TEST_CASE("alpha decreases strictly across all steps") {
    const NoiseSchedule s = make_schedule(50);
    for (int t = 1; t <= 50; ++t) {
        CHECK(s.alpha[static_cast<std::size_t>(t)] < s.alpha[static_cast<std::size_t>(t - 1)]);
    }
}

TEST_CASE("schedule needs at least two steps") {
    CHECK_THROWS_AS(make_schedule(1), ConfigError);
}

TEST_CASE("add_noise endpoints") {
    const NoiseSchedule s = make_schedule(40);
    std::mt19937_64 rng(2);
    const Tensor z = Tensor::randn({4, 3}, rng);
    const Tensor eps = Tensor::randn({4, 3}, rng);
    // t = 0 is exact identity under this schedule
    CHECK(max_abs_diff(add_noise(z, 0, eps, s), z) == 0.0);
    // t = T is nearly pure noise
    CHECK(max_abs_diff(add_noise(z, 40, eps, s), eps) <= s.alpha[40] * z.max_abs() + 1e-12);
}

TEST_CASE("add_noise matches the direct formula") {
    NoiseSchedule s;
    s.total_steps = 1;
    s.alpha = {1.0, 0.8};
    s.sigma = {0.0, 0.6};
    const Tensor z({2}, {1.0, 0.0});
    const Tensor eps({2}, {0.0, 1.0});
    const Tensor out = add_noise(z, 1, eps, s);
    CHECK(out[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("add_noise rejects shape mismatches") {
    const NoiseSchedule s = make_schedule(10);
    CHECK_THROWS_AS(add_noise(Tensor::zeros({2}), 1, Tensor::zeros({3}), s), DimensionError);
}

TEST_CASE("ddim_step inverts the scalar example") {
    NoiseSchedule s;
    s.total_steps = 1;
    s.alpha = {1.0, 0.8};
    s.sigma = {0.0, 0.6};
    const Tensor z_t({1}, {0.8 * 2.0 + 0.6 * 1.0});
    const Tensor eps({1}, {1.0});
    const Tensor out = ddim_step(z_t, eps, 1, s);
    CHECK(out.item() == doctest::Approx(2.0).epsilon(1e-12));  // zhat0 exactly, alpha(0)=1
}

TEST_CASE("oracle denoiser reconstructs the clean latent") {
    const NoiseSchedule s = make_schedule(50);
    std::mt19937_64 rng(3);
    const Tensor z = Tensor::randn({4, 8, 8}, rng);
    const Tensor eps = Tensor::randn({4, 8, 8}, rng);
    Tensor z_t = add_noise(z, 50, eps, s);
    for (int t = 50; t >= 1; --t) {
        z_t = ddim_step(z_t, eps, t, s);
    }
    CHECK(max_abs_diff(z_t, z) < 1e-8);
}

TEST_CASE("ddim_step guards the schedule edge cases") {
    const NoiseSchedule s = make_schedule(10);
    CHECK_THROWS_AS(ddim_step(Tensor::zeros({2}), Tensor::zeros({2}), 0, s), UsageError);

    NoiseSchedule singular;
    singular.total_steps = 1;
    singular.alpha = {1.0, 1e-13};
    singular.sigma = {0.0, 1.0};
    CHECK_THROWS_AS(ddim_step(Tensor::zeros({2}), Tensor::zeros({2}), 1, singular),
                    ScheduleError);
}
