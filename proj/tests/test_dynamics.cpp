#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "giorom/datagen.hpp"
#include "giorom/dynamics.hpp"
#include "giorom/rng.hpp"

using namespace giorom;

namespace {

Tensor constant_frames(int64_t F, int64_t Q, double step) {
    Tensor frames({F, Q, 2});
    for (int64_t n = 0; n < F; ++n)
        for (int64_t i = 0; i < Q; ++i) {
            frames.mut_data()[(n * Q + i) * 2 + 0] = 0.1 * static_cast<double>(i) + step * static_cast<double>(n);
            frames.mut_data()[(n * Q + i) * 2 + 1] = 0.5;
        }
    return frames;
}

}  // namespace

TEST_CASE("velocities: static, drift, quadratic") {
    Tensor still({3, 2, 2});
    for (int64_t i = 0; i < still.numel(); ++i) still.mut_data()[i] = 0.25;
    Tensor v = velocities_from_positions(still);
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(v.flat(i) == doctest::Approx(0.0));

    Tensor drift = constant_frames(5, 2, 0.01);
    Tensor vd = velocities_from_positions(drift);
    for (int64_t n = 0; n < 4; ++n)
        for (int64_t i = 0; i < 2; ++i) {
            CHECK(vd(n, i, 0) == doctest::Approx(0.01));
            CHECK(vd(n, i, 1) == doctest::Approx(0.0));
        }

    // X = t^2 / 2 -> V_n = n - 1/2
    Tensor quad({6, 1, 2});
    for (int64_t n = 0; n < 6; ++n) {
        quad.mut_data()[n * 2] = 0.5 * static_cast<double>(n) * static_cast<double>(n);
        quad.mut_data()[n * 2 + 1] = 0.0;
    }
    Tensor vq = velocities_from_positions(quad);
    for (int64_t n = 1; n < 6; ++n)
        CHECK(vq(n - 1, 0, 0) == doctest::Approx(static_cast<double>(n) - 0.5));
}

TEST_CASE("random walk noise: zero sigma, determinism, terminal statistics") {
    Rng rng(1);
    Tensor window({4, 6, 2});
    for (int64_t i = 0; i < window.numel(); ++i) window.mut_data()[i] = rng.normal();

    NoisyWindow clean = inject_random_walk_noise(window, {0.0, 5});
    for (int64_t i = 0; i < window.numel(); ++i) CHECK(clean.window.flat(i) == window.flat(i));
    for (int64_t i = 0; i < clean.terminal.numel(); ++i) CHECK(clean.terminal.flat(i) == 0.0);

    NoisyWindow a = inject_random_walk_noise(window, {3e-4, 7});
    NoisyWindow b = inject_random_walk_noise(window, {3e-4, 7});
    for (int64_t i = 0; i < a.window.numel(); ++i) CHECK(a.window.flat(i) == b.window.flat(i));

    // empirical std of the terminal noise over many samples
    const double sigma = 3e-4;
    Tensor big({50000, 6, 1});
    NoisyWindow nw = inject_random_walk_noise(big, {sigma, 11});
    double sum2 = 0.0;
    for (int64_t i = 0; i < nw.terminal.numel(); ++i) sum2 += nw.terminal.flat(i) * nw.terminal.flat(i);
    const double emp = std::sqrt(sum2 / static_cast<double>(nw.terminal.numel()));
    CHECK(std::fabs(emp - sigma) / sigma < 0.02);

    // the walk accumulates: later window rows carry more noise on average
    double first = 0.0, last = 0.0;
    for (int64_t i = 0; i < 50000; ++i) {
        first += std::pow(nw.window(i, 0, 0) - big(i, 0, 0), 2);
        last += std::pow(nw.window(i, 5, 0) - big(i, 5, 0), 2);
    }
    CHECK(last > 3.0 * first);
}

TEST_CASE("training target: second difference with noise adjustment") {
    Rng rng(3);
    Tensor xm({5, 2}), x0({5, 2}), xp({5, 2}), noise({5, 2});
    for (int64_t i = 0; i < 10; ++i) {
        xm.mut_data()[i] = rng.normal();
        x0.mut_data()[i] = rng.normal();
        xp.mut_data()[i] = rng.normal();
        noise.mut_data()[i] = 0.01 * rng.normal();
    }
    Tensor zero({5, 2});
    Tensor t0 = training_target(xm, x0, xp, zero);
    for (int64_t i = 0; i < 10; ++i)
        CHECK(std::fabs(t0.flat(i) - (xp.flat(i) - 2 * x0.flat(i) + xm.flat(i))) < 1e-12);

    // constant velocity: zero acceleration
    Tensor a({2, 2}, {0, 0, 1, 1}), b({2, 2}, {0.1, 0.1, 1.1, 1.1}), c({2, 2}, {0.2, 0.2, 1.2, 1.2});
    Tensor z2({2, 2});
    Tensor tc = training_target(a, b, c, z2);
    for (int64_t i = 0; i < 4; ++i) CHECK(tc.flat(i) == doctest::Approx(0.0));

    // with terminal noise the correction is subtracted
    Tensor tn = training_target(xm, x0, xp, noise);
    for (int64_t i = 0; i < 10; ++i) CHECK(tn.flat(i) == doctest::Approx(t0.flat(i) - noise.flat(i)));
}

TEST_CASE("euler step: hand case and closed-form constant acceleration") {
    // one step: V=1, A=2 -> V'=3, X shifts by 3
    Tensor frames({2, 1, 2});
    frames.mut_data()[0] = 0.0;
    frames.mut_data()[1] = 0.0;
    frames.mut_data()[2] = 1.0;  // V = 1 on axis 0
    frames.mut_data()[3] = 0.0;
    RolloutState s = initial_state(frames);
    Tensor acc({1, 2}, {2.0, 0.0});
    RolloutState s2 = euler_step(s, acc);
    CHECK(s2.window(0, 0, 0) == doctest::Approx(3.0));
    CHECK(s2.positions(0, 0) == doctest::Approx(4.0));

    // A = 0: constant-velocity advance
    RolloutState s3 = euler_step(s, Tensor({1, 2}));
    CHECK(s3.positions(0, 0) == doctest::Approx(2.0));

    // constant acceleration from rest over k steps: X(k) = k(k+1)/2 * g
    const double g = 1e-6;
    Tensor rest({2, 1, 2});
    for (int64_t i = 0; i < 4; ++i) rest.mut_data()[i] = 0.0;
    RolloutState st = initial_state(rest);
    for (int64_t k = 1; k <= 1000; ++k) {
        st = euler_step(st, Tensor({1, 2}, {g, 0.0}));
        const double expect = 0.5 * static_cast<double>(k) * static_cast<double>(k + 1) * g;
        REQUIRE(std::fabs(st.positions(0, 0) - expect) < 1e-12);
    }
}

TEST_CASE("euler round trip recovers the new velocity") {
    Rng rng(4);
    Tensor frames({7, 3, 2});
    for (int64_t i = 0; i < frames.numel(); ++i) frames.mut_data()[i] = 0.3 + 0.01 * rng.normal();
    RolloutState s = initial_state(frames);
    Tensor acc({3, 2});
    for (int64_t i = 0; i < 6; ++i) acc.mut_data()[i] = 1e-4 * rng.normal();
    RolloutState s2 = euler_step(s, acc);
    // velocities_from_positions over (X_n, X_{n+1}) gives V_{n+1} back; with
    // dt = 1 the only reconstruction error is the rounding of X_n + v
    Tensor pair({2, 3, 2});
    for (int64_t i = 0; i < 6; ++i) {
        pair.mut_data()[i] = s.positions.flat(i);
        pair.mut_data()[6 + i] = s2.positions.flat(i);
    }
    Tensor v = velocities_from_positions(pair);
    for (int64_t i = 0; i < 3; ++i)
        for (int a = 0; a < 2; ++a)
            CHECK(std::fabs(v(0, i, a) - s2.window(i, 5, a)) <= 2e-16 * std::fabs(s2.positions(i, a)));
}

TEST_CASE("rollout: zero model extrapolates inertially; K=0 returns input") {
    Tensor frames({3, 2, 2});
    for (int64_t n = 0; n < 3; ++n)
        for (int64_t i = 0; i < 2; ++i) {
            frames.mut_data()[(n * 2 + i) * 2 + 0] = 0.1 + 0.01 * static_cast<double>(n);
            frames.mut_data()[(n * 2 + i) * 2 + 1] = 0.2 + 0.02 * static_cast<double>(n);
        }
    const Bounds b{{0, 0}, {10, 10}};
    const AccelerationField zero = [](const RolloutState& s) {
        return Tensor({s.particles(), 2});
    };
    Tensor out = rollout(zero, frames, 4, b);
    REQUIRE(out.extent(0) == 5);
    for (int64_t k = 0; k <= 4; ++k)
        for (int64_t i = 0; i < 2; ++i) {
            CHECK(out(k, i, 0) == doctest::Approx(0.12 + 0.01 * static_cast<double>(k)));
            CHECK(out(k, i, 1) == doctest::Approx(0.24 + 0.02 * static_cast<double>(k)));
        }
    Tensor same = rollout(zero, frames, 0, b);
    REQUIRE(same.extent(0) == 1);
    for (int64_t i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) CHECK(same(0, i, a) == frames(2, i, a));
}

TEST_CASE("rollout with constant gravity matches datagen free flight") {
    MaterialParams p = default_fluid_params();
    p.stiffness = 0.0;
    p.damping = 0.0;
    p.gravity = {0.0, -2e-6};
    Trajectory t = generate_fluidlike(3, 60, p, 19);
    // feed the first 4 frames, roll 40 steps with the exact gravity field
    Tensor init({4, t.particles, 2});
    for (int64_t n = 0; n < 4; ++n)
        for (int64_t i = 0; i < t.particles; ++i)
            for (int a = 0; a < 2; ++a) init.mut_data()[(n * t.particles + i) * 2 + a] = t.at(n, i, a);
    const AccelerationField gravity = [&](const RolloutState& s) {
        Tensor a({s.particles(), 2});
        for (int64_t i = 0; i < s.particles(); ++i) a.mut_data()[i * 2 + 1] = -2e-6;
        return a;
    };
    Tensor out = rollout(gravity, init, 40, t.bounds, t.dt);
    for (int64_t k = 0; k <= 40; ++k)
        for (int64_t i = 0; i < t.particles; ++i)
            for (int a = 0; a < 2; ++a) {
                // float32 storage of the ground truth limits the comparison
                REQUIRE(std::fabs(out(k, i, a) - t.at(3 + k, i, a)) < 2e-6);
            }
}

TEST_CASE("rollout determinism and blow-up detection") {
    Tensor frames({3, 1, 2});
    frames.mut_data()[0] = 0.5;
    frames.mut_data()[1] = 0.5;
    frames.mut_data()[2] = 0.5;
    frames.mut_data()[3] = 0.5;
    frames.mut_data()[4] = 0.5;
    frames.mut_data()[5] = 0.5;
    const Bounds b{{0, 0}, {1, 1}};
    const AccelerationField wild = [](const RolloutState& s) {
        Tensor a({s.particles(), 2});
        a.mut_data()[0] = 0.2;  // runs out of the box quickly
        return a;
    };
    CHECK_THROWS_AS(rollout(wild, frames, 50, b), BlowupError);

    const AccelerationField mild = [](const RolloutState& s) {
        Tensor a({s.particles(), 2});
        a.mut_data()[0] = 1e-4;
        return a;
    };
    Tensor r1 = rollout(mild, frames, 20, b);
    Tensor r2 = rollout(mild, frames, 20, b);
    for (int64_t i = 0; i < r1.numel(); ++i) CHECK(r1.flat(i) == r2.flat(i));
}
