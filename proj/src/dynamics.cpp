#include "giorom/dynamics.hpp"

#include <cmath>

namespace giorom {

Tensor RolloutState::last_velocity() const {
    const int64_t Q = particles();
    const int w = window_len();
    const int d = dim();
    Tensor v({Q, d});
    double* vd = v.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int a = 0; a < d; ++a) vd[i * d + a] = window(i, w - 1, a);
    return v;
}

Tensor velocities_from_positions(const Tensor& frames, double dt) {
    if (frames.ndim() != 3) throw ShapeError("velocities_from_positions expects [F, Q, d]");
    const int64_t F = frames.extent(0), Q = frames.extent(1), d = frames.extent(2);
    if (F < 2) throw ShapeError("need at least two frames for velocities");
    Tensor v({F - 1, Q, d});
    double* vd = v.mut_data();
    const double inv_dt = 1.0 / dt;
    for (int64_t n = 1; n < F; ++n)
        for (int64_t i = 0; i < Q; ++i)
            for (int64_t a = 0; a < d; ++a)
                vd[((n - 1) * Q + i) * d + a] = (frames(n, i, a) - frames(n - 1, i, a)) * inv_dt;
    return v;
}

NoisyWindow inject_random_walk_noise(const Tensor& window, const NoiseConfig& cfg) {
    if (window.ndim() != 3) throw ShapeError("noise injection expects window [Q, w, d]");
    const int64_t Q = window.extent(0), w = window.extent(1), d = window.extent(2);
    NoisyWindow out;
    out.window = Tensor(window.shape());
    out.terminal = Tensor({Q, d});
    double* wd = out.window.mut_data();
    double* td = out.terminal.mut_data();
    if (cfg.sigma == 0.0) {
        for (int64_t i = 0; i < window.numel(); ++i) wd[i] = window.flat(i);
        return out;
    }
    Rng rng(cfg.seed);
    const double step_std = cfg.sigma / std::sqrt(static_cast<double>(w));
    for (int64_t i = 0; i < Q; ++i)
        for (int64_t a = 0; a < d; ++a) {
            double walk = 0.0;
            for (int64_t k = 0; k < w; ++k) {
                walk += step_std * rng.normal();
                wd[(i * w + k) * d + a] = window(i, k, a) + walk;
            }
            td[i * d + a] = walk;
        }
    return out;
}

Tensor training_target(const Tensor& x_prev, const Tensor& x_curr, const Tensor& x_next,
                       const Tensor& terminal_noise, double dt) {
    if (!x_prev.same_shape(x_curr) || !x_curr.same_shape(x_next) || !x_curr.same_shape(terminal_noise))
        throw ShapeError("training_target: frame shape mismatch");
    Tensor t(x_curr.shape());
    double* td = t.mut_data();
    const double inv_dt2 = 1.0 / (dt * dt);
    const double inv_dt = 1.0 / dt;
    for (int64_t i = 0; i < t.numel(); ++i)
        td[i] = (x_next.flat(i) - 2.0 * x_curr.flat(i) + x_prev.flat(i)) * inv_dt2 -
                terminal_noise.flat(i) * inv_dt;
    return t;
}

RolloutState initial_state(const Tensor& frames, double dt) {
    if (frames.ndim() != 3) throw ShapeError("initial_state expects [w+1, Q, d]");
    const int64_t F = frames.extent(0), Q = frames.extent(1), d = frames.extent(2);
    if (F < 2) throw ShapeError("initial_state needs at least 2 frames");
    RolloutState s;
    s.dt = dt;
    s.positions = Tensor({Q, d});
    double* pd = s.positions.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int64_t a = 0; a < d; ++a) pd[i * d + a] = frames(F - 1, i, a);
    const Tensor v = velocities_from_positions(frames, dt);  // [F-1, Q, d]
    s.window = Tensor({Q, F - 1, d});
    double* wd = s.window.mut_data();
    for (int64_t k = 0; k < F - 1; ++k)
        for (int64_t i = 0; i < Q; ++i)
            for (int64_t a = 0; a < d; ++a) wd[(i * (F - 1) + k) * d + a] = v(k, i, a);
    return s;
}

RolloutState euler_step(const RolloutState& state, const Tensor& accel) {
    const int64_t Q = state.particles();
    const int w = state.window_len();
    const int d = state.dim();
    if (accel.ndim() != 2 || accel.extent(0) != Q || accel.extent(1) != d)
        throw ShapeError("euler_step: acceleration shape mismatch");
    RolloutState next;
    next.dt = state.dt;
    next.step = state.step + 1;
    next.positions = Tensor({Q, d});
    next.window = Tensor({Q, w, d});
    double* pd = next.positions.mut_data();
    double* wd = next.window.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int a = 0; a < d; ++a) {
            const double v_new = state.window(i, w - 1, a) + state.dt * accel(i, a);
            pd[i * d + a] = state.positions(i, a) + state.dt * v_new;
            for (int k = 0; k < w - 1; ++k) wd[(i * w + k) * d + a] = state.window(i, k + 1, a);
            wd[(i * w + w - 1) * d + a] = v_new;
        }
    return next;
}

Tensor rollout(const AccelerationField& accel, const Tensor& initial_frames, int64_t steps,
               const Bounds& bounds, double dt) {
    if (steps < 0) throw DataError("rollout steps must be >= 0");
    RolloutState state = initial_state(initial_frames, dt);
    const int64_t Q = state.particles();
    const int d = state.dim();
    // frame 0 is the last input frame; K = 0 returns the input unchanged
    Tensor out({steps + 1, Q, d});
    double* od = out.mut_data();
    for (int64_t i = 0; i < Q * d; ++i) od[i] = state.positions.flat(i);
    const double margin = 0.1 * bounds.diagonal();
    for (int64_t k = 1; k <= steps; ++k) {
        const Tensor a = accel(state);
        state = euler_step(state, a);
        for (int64_t i = 0; i < Q; ++i)
            for (int ax = 0; ax < d; ++ax) {
                const double x = state.positions(i, ax);
                if (x < bounds.lo[static_cast<std::size_t>(ax)] - margin ||
                    x > bounds.hi[static_cast<std::size_t>(ax)] + margin)
                    throw BlowupError("rollout blow-up at step " + std::to_string(k) + ": particle " +
                                      std::to_string(i) + " axis " + std::to_string(ax) + " at " +
                                      std::to_string(x));
                od[(k * Q + i) * d + ax] = x;
            }
    }
    return out;
}

}  // namespace giorom
