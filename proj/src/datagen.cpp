#include "giorom/datagen.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "giorom/rng.hpp"

namespace giorom {

static_assert(std::endian::native == std::endian::little,
              "trajectory container assumes a little-endian host");

Tensor Trajectory::frame(int64_t n) const {
    Tensor t({particles, dim});
    double* d = t.mut_data();
    for (int64_t i = 0; i < particles * dim; ++i)
        d[i] = static_cast<double>(positions[static_cast<std::size_t>(n * particles * dim + i)]);
    return t;
}

PointCloud Trajectory::cloud_at(int64_t n) const {
    PointCloud c;
    c.positions = frame(n);
    c.object_id.assign(particle_type.begin(), particle_type.end());
    c.bounds = bounds;
    return c;
}

void Trajectory::validate() const {
    if (dim != 2 && dim != 3) throw DataError("trajectory dimension must be 2 or 3");
    if (particles < 1 || frames < 1) throw DataError("empty trajectory");
    if (positions.size() != static_cast<std::size_t>(frames * particles * dim))
        throw DataError("trajectory position payload size mismatch");
    if (particle_type.size() != static_cast<std::size_t>(particles))
        throw DataError("trajectory particle_type size mismatch");
}

MaterialParams default_fluid_params() {
    MaterialParams p;
    p.gravity = {0.0, -1.2e-4};
    p.restitution = 0.25;
    p.stiffness = 5e-3;
    p.damping = 0.08;
    p.interaction_radius = 0.024;
    return p;
}

MaterialParams default_elastic_params() {
    MaterialParams p;
    p.gravity = {0.0, -1.5e-4};
    p.restitution = 0.2;
    p.stiffness = 2e-3;
    p.damping = 0.08;
    p.interaction_radius = 0.05;  // unused by the lattice generator
    return p;
}

namespace {

struct SimState {
    std::vector<double> x, v;  // [Q, d]
    int64_t Q;
    int d;
};

// Reflect at the walls with restitution; a final clamp guarantees
// containment even for extreme penetrations.
void bounce(SimState& s, const Bounds& b, double restitution) {
    for (int64_t i = 0; i < s.Q; ++i)
        for (int a = 0; a < s.d; ++a) {
            double& x = s.x[static_cast<std::size_t>(i * s.d + a)];
            double& v = s.v[static_cast<std::size_t>(i * s.d + a)];
            const double lo = b.lo[static_cast<std::size_t>(a)], hi = b.hi[static_cast<std::size_t>(a)];
            if (x < lo) {
                x = lo + (lo - x) * restitution;
                v = -v * restitution;
            } else if (x > hi) {
                x = hi - (x - hi) * restitution;
                v = -v * restitution;
            }
            x = std::min(hi, std::max(lo, x));
        }
}

void record(Trajectory& t, const SimState& s) {
    for (int64_t i = 0; i < s.Q * s.d; ++i)
        t.positions.push_back(static_cast<float>(s.x[static_cast<std::size_t>(i)]));
}

Trajectory make_header(int64_t Q, int64_t steps, int d, Material mat, const Bounds& b,
                       std::uint64_t seed) {
    Trajectory t;
    t.dim = d;
    t.particles = Q;
    t.frames = steps + 1;
    t.dt = 1.0;
    t.bounds = b;
    t.material = mat;
    t.seed = seed;
    t.positions.reserve(static_cast<std::size_t>((steps + 1) * Q * d));
    t.particle_type.assign(static_cast<std::size_t>(Q), static_cast<std::uint8_t>(mat));
    return t;
}

}  // namespace

Trajectory generate_fluidlike(int64_t particles, int64_t steps, const MaterialParams& params,
                              std::uint64_t seed) {
    if (particles < 2) throw DataError("fluid generator needs at least 2 particles");
    const int d = 2;
    Bounds b{{0.0, 0.0}, {1.0, 1.0}};
    Rng rng(seed);

    SimState s;
    s.Q = particles;
    s.d = d;
    s.x.resize(static_cast<std::size_t>(particles * d));
    s.v.resize(static_cast<std::size_t>(particles * d));

    // jittered block of side ~0.4 in the upper half, with a shared drift
    // applied after burn-in; kept clear of the walls so the pressure-release
    // expansion stays inside the box
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(particles))));
    const double side = 0.4;
    const double spacing = side / cols;
    const double cx = 0.38 + 0.24 * rng.uniform();
    const double base_y = 0.35 + 0.15 * rng.uniform();
    const double drift_x = rng.uniform(-8e-4, 8e-4);
    const double drift_y = rng.uniform(-4e-4, 0.0);
    for (int64_t i = 0; i < particles; ++i) {
        const int r = static_cast<int>(i) / cols;
        const int c = static_cast<int>(i) % cols;
        double px = cx - side / 2 + (c + 0.5) * spacing + 0.15 * spacing * rng.normal();
        double py = base_y + (r + 0.5) * spacing + 0.15 * spacing * rng.normal();
        px = std::min(b.hi[0] - 1e-6, std::max(b.lo[0] + 1e-6, px));
        py = std::min(b.hi[1] - 1e-6, std::max(b.lo[1] + 1e-6, py));
        s.x[static_cast<std::size_t>(i * d + 0)] = px;
        s.x[static_cast<std::size_t>(i * d + 1)] = py;
        s.v[static_cast<std::size_t>(i * d + 0)] = 0.0;
        s.v[static_cast<std::size_t>(i * d + 1)] = 0.0;
    }

    const std::vector<double> g = params.gravity.empty() ? std::vector<double>{0.0, -1.5e-4} : params.gravity;
    const double h = params.interaction_radius;

    std::vector<double> acc(static_cast<std::size_t>(particles * d));
    PointCloud pc;
    pc.object_id.assign(static_cast<std::size_t>(particles), 0);
    pc.bounds = b;
    auto advance = [&](const std::vector<double>& gravity, double damping) {
        for (int64_t i = 0; i < particles; ++i)
            for (int a = 0; a < d; ++a) acc[static_cast<std::size_t>(i * d + a)] = gravity[static_cast<std::size_t>(a)];
        if (params.stiffness != 0.0 || damping != 0.0) {
            pc.positions = Tensor({particles, d}, s.x);
            RadiusGraph graph = build_radius_graph(pc, h);
            for (std::size_t e = 0; e < graph.receivers.size(); ++e) {
                const int64_t i = graph.receivers[e], j = graph.senders[e];
                double dist2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double diff = s.x[static_cast<std::size_t>(i * d + a)] - s.x[static_cast<std::size_t>(j * d + a)];
                    dist2 += diff * diff;
                }
                const double dist = std::sqrt(dist2);
                if (dist < 1e-12) continue;  // coincident particles exert no force
                const double w = 1.0 - dist / h;
                for (int a = 0; a < d; ++a) {
                    const double diff = s.x[static_cast<std::size_t>(i * d + a)] - s.x[static_cast<std::size_t>(j * d + a)];
                    // linear repulsion plus a pairwise dashpot; free flight stays exact
                    acc[static_cast<std::size_t>(i * d + a)] +=
                        params.stiffness * w * diff / dist +
                        damping * w * (s.v[static_cast<std::size_t>(j * d + a)] - s.v[static_cast<std::size_t>(i * d + a)]);
                }
            }
        }
        for (int64_t i = 0; i < particles * d; ++i) {
            s.v[static_cast<std::size_t>(i)] += acc[static_cast<std::size_t>(i)];
            s.x[static_cast<std::size_t>(i)] += s.v[static_cast<std::size_t>(i)];
        }
        bounce(s, b, params.restitution);
    };

    // unrecorded burn-in without gravity relieves the packing pressure of the
    // jittered spawn grid; a strong global drag keeps the release quasi-static
    // so recorded trajectories start near equilibrium
    const std::vector<double> no_gravity(static_cast<std::size_t>(d), 0.0);
    for (int64_t n = 0; n < 80; ++n) {
        advance(no_gravity, std::max(params.damping, 0.12));
        for (double& v : s.v) v *= 0.8;
    }
    for (int64_t i = 0; i < particles; ++i) {
        s.v[static_cast<std::size_t>(i * d + 0)] = drift_x;
        s.v[static_cast<std::size_t>(i * d + 1)] = drift_y;
    }

    Trajectory t = make_header(particles, steps, d, Material::Fluid, b, seed);
    record(t, s);
    for (int64_t n = 0; n < steps; ++n) {
        advance(g, params.damping);
        record(t, s);
    }
    return t;
}

Trajectory generate_elasticlike(int64_t particles, int64_t steps, const MaterialParams& params,
                                std::uint64_t seed) {
    const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(particles))));
    if (static_cast<int64_t>(side) * side != particles)
        throw DataError("elastic generator needs a perfect-square particle count");
    const int d = 2;
    Bounds b{{0.0, 0.0}, {1.0, 1.0}};
    Rng rng(seed);

    SimState s;
    s.Q = particles;
    s.d = d;
    s.x.resize(static_cast<std::size_t>(particles * d));
    s.v.assign(static_cast<std::size_t>(particles * d), 0.0);

    const std::vector<double> g = params.gravity.empty() ? std::vector<double>{0.0, -1.5e-4} : params.gravity;
    const bool at_rest = g[0] == 0.0 && g[1] == 0.0;

    const double extent = 0.3;
    const double spacing = extent / (side - 1);
    const double cx = 0.35 + 0.3 * rng.uniform();
    const double base_y = 0.45 + 0.2 * rng.uniform();
    const double drift_x = at_rest ? 0.0 : rng.uniform(-6e-4, 6e-4);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            const int64_t i = static_cast<int64_t>(r) * side + c;
            s.x[static_cast<std::size_t>(i * d + 0)] = cx - extent / 2 + c * spacing;
            s.x[static_cast<std::size_t>(i * d + 1)] = base_y + r * spacing;
            s.v[static_cast<std::size_t>(i * d + 0)] = drift_x;
        }

    // lattice springs: 4-neighborhood plus diagonals, rest length from the
    // initial configuration
    struct Spring {
        int64_t a, bidx;
        double rest;
    };
    std::vector<Spring> springs;
    auto idx = [side](int r, int c) { return static_cast<int64_t>(r) * side + c; };
    const int offs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            for (const auto& o : offs) {
                const int rr = r + o[0], cc = c + o[1];
                if (rr < 0 || rr >= side || cc < 0 || cc >= side) continue;
                const double rest = spacing * std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1]));
                springs.push_back({idx(r, c), idx(rr, cc), rest});
            }

    Trajectory t = make_header(particles, steps, d, Material::Elastic, b, seed);
    record(t, s);

    std::vector<double> acc(static_cast<std::size_t>(particles * d));
    for (int64_t n = 0; n < steps; ++n) {
        for (int64_t i = 0; i < particles; ++i)
            for (int a = 0; a < d; ++a) acc[static_cast<std::size_t>(i * d + a)] = g[static_cast<std::size_t>(a)];
        for (const Spring& sp : springs) {
            double dist2 = 0.0;
            for (int a = 0; a < d; ++a) {
                const double diff = s.x[static_cast<std::size_t>(sp.a * d + a)] - s.x[static_cast<std::size_t>(sp.bidx * d + a)];
                dist2 += diff * diff;
            }
            const double dist = std::sqrt(dist2);
            if (dist < 1e-12) continue;
            const double f = params.stiffness * (dist - sp.rest) / dist;
            for (int a = 0; a < d; ++a) {
                const double diff = s.x[static_cast<std::size_t>(sp.a * d + a)] - s.x[static_cast<std::size_t>(sp.bidx * d + a)];
                const double rel_v = s.v[static_cast<std::size_t>(sp.bidx * d + a)] - s.v[static_cast<std::size_t>(sp.a * d + a)];
                const double pull = -f * diff + params.damping * rel_v;
                acc[static_cast<std::size_t>(sp.a * d + a)] += pull;
                acc[static_cast<std::size_t>(sp.bidx * d + a)] -= pull;
            }
        }
        for (int64_t i = 0; i < particles * d; ++i) {
            s.v[static_cast<std::size_t>(i)] += acc[static_cast<std::size_t>(i)];
            s.x[static_cast<std::size_t>(i)] += s.v[static_cast<std::size_t>(i)];
        }
        bounce(s, b, params.restitution);
        record(t, s);
    }
    return t;
}

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("truncated trajectory file");
    return v;
}

}  // namespace

void save_trajectory(const std::string& path, const Trajectory& t) {
    t.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write trajectory: " + path);
    os.write("GTRJ", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.particles));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.frames));
    put<double>(os, t.dt);
    for (int a = 0; a < t.dim; ++a) put<double>(os, t.bounds.lo[static_cast<std::size_t>(a)]);
    for (int a = 0; a < t.dim; ++a) put<double>(os, t.bounds.hi[static_cast<std::size_t>(a)]);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.material));
    put<std::uint64_t>(os, t.seed);
    os.write(reinterpret_cast<const char*>(t.positions.data()),
             static_cast<std::streamsize>(t.positions.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(t.particle_type.data()),
             static_cast<std::streamsize>(t.particle_type.size()));
    if (!os) throw DataError("failed writing trajectory: " + path);
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open trajectory: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GTRJ", 4) != 0) throw DataError("not a trajectory file: " + path);
    const auto version = get<std::uint8_t>(is);
    if (version != 1) throw DataError("unsupported trajectory version");
    Trajectory t;
    t.dim = get<std::uint8_t>(is);
    t.particles = get<std::uint32_t>(is);
    t.frames = get<std::uint32_t>(is);
    t.dt = get<double>(is);
    t.bounds.lo.resize(static_cast<std::size_t>(t.dim));
    t.bounds.hi.resize(static_cast<std::size_t>(t.dim));
    for (int a = 0; a < t.dim; ++a) t.bounds.lo[static_cast<std::size_t>(a)] = get<double>(is);
    for (int a = 0; a < t.dim; ++a) t.bounds.hi[static_cast<std::size_t>(a)] = get<double>(is);
    t.material = static_cast<Material>(get<std::uint8_t>(is));
    t.seed = get<std::uint64_t>(is);
    t.positions.resize(static_cast<std::size_t>(t.frames * t.particles * t.dim));
    is.read(reinterpret_cast<char*>(t.positions.data()),
            static_cast<std::streamsize>(t.positions.size() * sizeof(float)));
    t.particle_type.resize(static_cast<std::size_t>(t.particles));
    is.read(reinterpret_cast<char*>(t.particle_type.data()),
            static_cast<std::streamsize>(t.particle_type.size()));
    if (!is) throw DataError("truncated trajectory payload: " + path);
    t.validate();
    return t;
}

}  // namespace giorom
