#pragma once

#include <cstdint>
#include <functional>

#include "giorom/geometry.hpp"
#include "giorom/rng.hpp"
#include "giorom/tensor.hpp"

namespace giorom {

// Sliding state advanced by semi-implicit Euler: the updated velocity moves
// the position. Window rows are ordered oldest -> newest.
struct RolloutState {
    Tensor positions;  // [Q, d]
    Tensor window;     // [Q, w, d]
    int64_t step = 0;
    double dt = 1.0;

    int64_t particles() const { return positions.extent(0); }
    int dim() const { return static_cast<int>(positions.extent(1)); }
    int window_len() const { return static_cast<int>(window.extent(1)); }
    Tensor last_velocity() const;  // [Q, d]
};

struct NoiseConfig {
    double sigma = 3e-4;  // std of the terminal accumulated noise
    std::uint64_t seed = 0;
};

// V_{t_n} = (X_{t_n} - X_{t_{n-1}}) / dt for frames [F, Q, d] -> [F-1, Q, d].
Tensor velocities_from_positions(const Tensor& frames, double dt = 1.0);

// Random-walk corruption of a velocity window [Q, w, d]: per-step increments
// ~ N(0, sigma^2 / w) accumulate across the window, so the terminal noise has
// std sigma. Returns the noisy window and the terminal accumulated noise.
struct NoisyWindow {
    Tensor window;    // [Q, w, d]
    Tensor terminal;  // [Q, d]
};
NoisyWindow inject_random_walk_noise(const Tensor& window, const NoiseConfig& cfg);

// Noise-adjusted acceleration target: the clean second difference minus the
// terminal velocity noise, so the model learns to cancel the corruption.
Tensor training_target(const Tensor& x_prev, const Tensor& x_curr, const Tensor& x_next,
                       const Tensor& terminal_noise, double dt = 1.0);

// Builds the initial state from w+1 frames [w+1, Q, d].
RolloutState initial_state(const Tensor& frames, double dt = 1.0);

// V' = V + dt*A; X' = X + dt*V'; window shifted by one.
RolloutState euler_step(const RolloutState& state, const Tensor& accel);

// World-unit acceleration supplied by the caller (the trained operator, an
// inertial zero model, a constant-gravity probe, ...).
using AccelerationField = std::function<Tensor(const RolloutState&)>;

// Autoregressive advance for K steps. Aborts with BlowupError when any
// particle leaves the bounds by more than 10% of the box diagonal.
// Returns predicted positions [K, Q, d]; K = 0 yields the input positions
// unchanged (zero predicted frames).
Tensor rollout(const AccelerationField& accel, const Tensor& initial_frames, int64_t steps,
               const Bounds& bounds, double dt = 1.0);

}  // namespace giorom
