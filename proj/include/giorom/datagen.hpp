#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "giorom/geometry.hpp"
#include "giorom/tensor.hpp"

namespace giorom {

enum class Material : std::uint8_t { Fluid = 0, Elastic = 1 };

// Time-indexed particle positions. Positions are stored as float32, the
// on-disk representation; consumers promote to float64.
struct Trajectory {
    int dim = 2;
    int64_t particles = 0;
    int64_t frames = 0;  // N + 1
    double dt = 1.0;
    Bounds bounds;
    Material material = Material::Fluid;
    std::uint64_t seed = 0;
    std::vector<float> positions;         // [frames, Q, d]
    std::vector<std::uint8_t> particle_type;  // [Q]

    double at(int64_t frame, int64_t p, int axis) const {
        return static_cast<double>(
            positions[static_cast<std::size_t>((frame * particles + p) * dim + axis)]);
    }
    Tensor frame(int64_t n) const;             // [Q, d] float64
    PointCloud cloud_at(int64_t n) const;      // object_id from particle_type
    void validate() const;
};

struct MaterialParams {
    std::vector<double> gravity;     // size d
    double restitution = 0.3;        // wall bounce, in [0, 1]
    double stiffness = 6e-3;         // short-range repulsion / spring scale
    double damping = 0.02;           // per-step velocity decay, in [0, 1]
    double interaction_radius = 0.03;
};

MaterialParams default_fluid_params();
MaterialParams default_elastic_params();

// Symplectic-Euler particles under gravity with linear-spring repulsion
// inside the interaction radius and restitution wall bounces.
Trajectory generate_fluidlike(int64_t particles, int64_t steps, const MaterialParams& params,
                              std::uint64_t seed);

// Damped spring lattice (4-neighborhood plus diagonals) dropped under
// gravity. particles must be a perfect square.
Trajectory generate_elasticlike(int64_t particles, int64_t steps, const MaterialParams& params,
                                std::uint64_t seed);

// Container format, all little-endian: magic "GTRJ", u8 version, u8 d,
// u32 Q, u32 frames, f64 dt, f64 bounds[2d] (lo then hi), u8 material,
// u64 seed, f32 positions[frames*Q*d], u8 particle_type[Q].
void save_trajectory(const std::string& path, const Trajectory& t);
Trajectory load_trajectory(const std::string& path);

}  // namespace giorom
