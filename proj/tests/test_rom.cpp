#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "giorom/rng.hpp"
#include "giorom/rom.hpp"

using namespace giorom;

namespace {

Tensor random_points(int64_t N, Rng& rng) {
    Tensor t({N, 2});
    for (int64_t i = 0; i < N * 2; ++i) t.mut_data()[i] = rng.uniform();
    return t;
}

// synthetic trajectory whose displacements are exactly U*(X) q_t for the
// given basis network
Trajectory planted_trajectory(const RomBasis& planted, const Tensor& ref,
                              const std::vector<Tensor>& qs) {
    Trajectory t;
    t.dim = 2;
    t.particles = ref.extent(0);
    t.frames = static_cast<int64_t>(qs.size()) + 1;
    t.dt = 1.0;
    t.bounds = Bounds{{-10, -10}, {10, 10}};
    t.material = Material::Fluid;
    t.seed = 0;
    t.particle_type.assign(static_cast<std::size_t>(t.particles), 0);
    for (int64_t i = 0; i < ref.numel(); ++i) t.positions.push_back(static_cast<float>(ref.flat(i)));
    for (const Tensor& q : qs) {
        RomWeights w;
        w.q = q;
        Tensor frame = upsample(planted, w, ref);
        for (int64_t i = 0; i < frame.numel(); ++i) t.positions.push_back(static_cast<float>(frame.flat(i)));
    }
    return t;
}

}  // namespace

TEST_CASE("solve_weights: zero displacement gives zero weights") {
    RomBasis basis(RomBasisConfig{2, 4, 4, {32, 32}}, 3);
    Rng rng(4);
    Tensor ref = random_points(40, rng);
    RomWeights w = solve_weights(basis, ref, ref);
    for (int64_t i = 0; i < w.q.numel(); ++i) CHECK(std::fabs(w.q.flat(i)) < 1e-9);
    CHECK(w.residual < 1e-9);
    CHECK(!w.rank_deficient);
}

TEST_CASE("solve_weights recovers planted weights to 1e-8") {
    RomBasisConfig cfg{2, 6, 4, {32, 32}};
    RomBasis basis(cfg, 7);
    Rng rng(8);
    const int64_t Q = 2 * cfg.rank;  // well-spread, twice the rank
    Tensor ref = random_points(Q, rng);
    Tensor q_star({cfg.rank});
    for (int i = 0; i < cfg.rank; ++i) q_star.mut_data()[i] = rng.normal();
    RomWeights planted;
    planted.q = q_star;
    Tensor displaced = upsample(basis, planted, ref);
    RomWeights rec = solve_weights(basis, displaced, ref);
    for (int i = 0; i < cfg.rank; ++i) CHECK(std::fabs(rec.q.flat(i) - q_star.flat(i)) < 1e-8);
}

TEST_CASE("solve_weights flags underdetermined systems") {
    RomBasis basis(RomBasisConfig{2, 8, 4, {32, 32}}, 9);
    Rng rng(10);
    Tensor ref = random_points(1, rng);  // Q = 1 < r
    Tensor displaced({1, 2}, {ref(0, 0) + 0.01, ref(0, 1)});
    RomWeights w = solve_weights(basis, displaced, ref);
    CHECK(w.rank_deficient);
    CHECK(w.condition > 1e12);
}

TEST_CASE("upsample: zero weights are the identity; consistency at the reduced points") {
    RomBasis basis(RomBasisConfig{2, 5, 4, {32, 32}}, 11);
    Rng rng(12);
    Tensor query = random_points(30, rng);
    RomWeights zero;
    zero.q = Tensor({5});
    Tensor out = upsample(basis, zero, query);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out.flat(i) == doctest::Approx(query.flat(i)));

    // P = Q with identical points reproduces the solve residual
    Tensor ref = random_points(25, rng);
    Tensor target = random_points(25, rng);  // arbitrary displaced cloud
    RomWeights w = solve_weights(basis, target, ref);
    Tensor recon = upsample(basis, w, ref);
    double resid = 0.0;
    for (int64_t i = 0; i < recon.numel(); ++i) {
        const double diff = recon.flat(i) - target.flat(i);
        resid += diff * diff;
    }
    CHECK(std::sqrt(resid / static_cast<double>(recon.numel())) == doctest::Approx(w.residual).epsilon(1e-9));
}

TEST_CASE("second solve on reconstructed displacements is idempotent") {
    RomBasis basis(RomBasisConfig{2, 6, 4, {32, 32}}, 13);
    Rng rng(14);
    Tensor ref = random_points(40, rng);
    Tensor q_star({6});
    for (int i = 0; i < 6; ++i) q_star.mut_data()[i] = rng.normal();
    RomWeights planted;
    planted.q = q_star;
    Tensor displaced = upsample(basis, planted, ref);
    RomWeights first = solve_weights(basis, displaced, ref);
    Tensor recon = upsample(basis, first, ref);
    RomWeights second = solve_weights(basis, recon, ref);
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(second.q.flat(i) - first.q.flat(i)) < 1e-10);
}

TEST_CASE("rank 0 is rejected") {
    CHECK_THROWS_AS(RomBasis(RomBasisConfig{2, 0, 4, {32}}, 1), DataError);
    RomFitOptions opts;
    opts.rank = 0;
    CHECK_THROWS_AS(fit_basis({Trajectory{}}, opts), DataError);
}

TEST_CASE("fit_basis: rigid translations are reconstructed by a rank-1 basis") {
    // phi_t(X) = X + c_t
    Rng rng(15);
    Tensor ref = random_points(60, rng);
    Trajectory t;
    t.dim = 2;
    t.particles = 60;
    t.frames = 9;
    t.dt = 1.0;
    t.bounds = Bounds{{-10, -10}, {10, 10}};
    t.material = Material::Fluid;
    t.particle_type.assign(60, 0);
    for (int64_t i = 0; i < ref.numel(); ++i) t.positions.push_back(static_cast<float>(ref.flat(i)));
    for (int64_t n = 1; n < 9; ++n) {
        const double cx = 0.05 * static_cast<double>(n), cy = -0.03 * static_cast<double>(n);
        for (int64_t i = 0; i < 60; ++i) {
            t.positions.push_back(static_cast<float>(ref(i, 0) + cx));
            t.positions.push_back(static_cast<float>(ref(i, 1) + cy));
        }
    }
    RomFitOptions opts;
    opts.rank = 2;
    opts.epochs = 40;
    opts.frame_stride = 1;
    opts.seed = 16;
    RomBasis basis = fit_basis({t}, opts);
    // reconstruction error on the training snapshots
    double worst = 0.0;
    for (int64_t n = 1; n < 9; ++n) {
        Tensor target({60, 2});
        for (int64_t i = 0; i < 60; ++i)
            for (int a = 0; a < 2; ++a) target.mut_data()[i * 2 + a] = t.at(n, i, a);
        RomWeights w = solve_weights(basis, target, ref);
        Tensor recon = upsample(basis, w, ref);
        double mse = 0.0;
        for (int64_t i = 0; i < recon.numel(); ++i) {
            const double diff = recon.flat(i) - target.flat(i);
            mse += diff * diff;
        }
        worst = std::max(worst, mse / static_cast<double>(recon.numel()));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("fit_basis recovers a planted subspace on held-out snapshots") {
    // planted basis fields: constant + linear maps (rank 3), reachable by the
    // network family; held-out snapshots use unseen weight vectors
    Rng rng(17);
    const int rank = 3;
    Tensor ref = random_points(120, rng);
    auto planted_field = [&](const Tensor& X, const Tensor& q) {
        Tensor d({X.extent(0), 2});
        for (int64_t i = 0; i < X.extent(0); ++i) {
            d.mut_data()[i * 2 + 0] = q.flat(0) * 0.05 + q.flat(1) * 0.04 * X(i, 0);
            d.mut_data()[i * 2 + 1] = q.flat(0) * -0.03 + q.flat(2) * 0.05 * X(i, 1);
        }
        return d;
    };
    Trajectory t;
    t.dim = 2;
    t.particles = 120;
    t.dt = 1.0;
    t.bounds = Bounds{{-10, -10}, {10, 10}};
    t.material = Material::Fluid;
    t.particle_type.assign(120, 0);
    for (int64_t i = 0; i < ref.numel(); ++i) t.positions.push_back(static_cast<float>(ref.flat(i)));
    std::vector<Tensor> train_qs, test_qs;
    for (int n = 0; n < 12; ++n) {
        Tensor q({rank});
        for (int i = 0; i < rank; ++i) q.mut_data()[i] = rng.normal();
        (n < 9 ? train_qs : test_qs).push_back(q);
    }
    for (const Tensor& q : train_qs) {
        Tensor d = planted_field(ref, q);
        for (int64_t i = 0; i < 120; ++i)
            for (int a = 0; a < 2; ++a)
                t.positions.push_back(static_cast<float>(ref(i, a) + d.flat(i * 2 + a)));
    }
    t.frames = 10;

    RomFitOptions opts;
    opts.rank = rank;
    opts.epochs = 400;
    opts.frame_stride = 1;
    opts.seed = 18;
    opts.polish_rounds = 4;
    RomBasis basis = fit_basis({t}, opts);

    double worst_rel = 0.0;
    for (const Tensor& q : test_qs) {
        Tensor d = planted_field(ref, q);
        Tensor target({120, 2});
        double norm = 0.0;
        for (int64_t i = 0; i < 240; ++i) {
            target.mut_data()[i] = ref.flat(i) + d.flat(i);
            norm += d.flat(i) * d.flat(i);
        }
        RomWeights w = solve_weights(basis, target, ref);
        Tensor recon = upsample(basis, w, ref);
        double err = 0.0;
        for (int64_t i = 0; i < 240; ++i) {
            const double diff = recon.flat(i) - target.flat(i);
            err += diff * diff;
        }
        worst_rel = std::max(worst_rel, std::sqrt(err / norm));
    }
    CHECK(worst_rel < 1e-4);
}

TEST_CASE("solve is equivariant to rigid translation when the span contains constants") {
    // build a basis, then augment the data rather than the net: translation
    // of all positions shifts displacements by a constant; with a planted
    // constant-capable field the recovered reconstruction must follow
    Rng rng(19);
    Tensor ref = random_points(80, rng);
    Trajectory t;
    t.dim = 2;
    t.particles = 80;
    t.dt = 1.0;
    t.bounds = Bounds{{-10, -10}, {10, 10}};
    t.material = Material::Fluid;
    t.particle_type.assign(80, 0);
    for (int64_t i = 0; i < ref.numel(); ++i) t.positions.push_back(static_cast<float>(ref.flat(i)));
    // random translations spanning both constant directions
    for (int n = 1; n <= 8; ++n) {
        const double cx = 0.08 * rng.normal(), cy = 0.08 * rng.normal();
        for (int64_t i = 0; i < 80; ++i) {
            t.positions.push_back(static_cast<float>(ref(i, 0) + cx));
            t.positions.push_back(static_cast<float>(ref(i, 1) + cy));
        }
    }
    t.frames = 9;
    RomFitOptions opts;
    opts.rank = 2;
    opts.epochs = 80;
    opts.frame_stride = 1;
    opts.seed = 20;
    RomBasis basis = fit_basis({t}, opts);

    Tensor shifted({80, 2});
    const double sx = 0.1, sy = -0.06;
    for (int64_t i = 0; i < 80; ++i) {
        shifted.mut_data()[i * 2 + 0] = ref(i, 0) + sx;
        shifted.mut_data()[i * 2 + 1] = ref(i, 1) + sy;
    }
    RomWeights w = solve_weights(basis, shifted, ref);
    Tensor recon = upsample(basis, w, ref);
    for (int64_t i = 0; i < 80; ++i) {
        CHECK(std::fabs(recon(i, 0) - shifted(i, 0)) < 2e-3);
        CHECK(std::fabs(recon(i, 1) - shifted(i, 1)) < 2e-3);
    }
}

TEST_CASE("upsample cost is linear in the query count") {
    RomBasis basis(RomBasisConfig{2, 16, 4, {128, 128, 128, 128}}, 21);
    Rng rng(22);
    RomWeights w;
    w.q = Tensor({16});
    for (int i = 0; i < 16; ++i) w.q.mut_data()[i] = 0.01 * rng.normal();
    std::vector<double> ps = {1e3, 1e4, 1e5};
    std::vector<double> times;
    for (double pd : ps) {
        const int64_t P = static_cast<int64_t>(pd);
        Tensor query = random_points(P, rng);
        std::vector<double> reps;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            upsample(basis, w, query);
            reps.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        times.push_back(*std::min_element(reps.begin(), reps.end()));
    }
    // log-log slope via least squares
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double lx = std::log10(ps[i]), ly = std::log10(times[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    CHECK(slope > 0.8);
    CHECK(slope < 1.2);
}

TEST_CASE("volume metrics: lattice and approach") {
    // static unit lattice: min distance 1, max speed 0
    Tensor frames({3, 4, 2});
    const double coords[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int64_t n = 0; n < 3; ++n)
        for (int64_t i = 0; i < 4; ++i)
            for (int a = 0; a < 2; ++a) frames.mut_data()[(n * 4 + i) * 2 + a] = coords[i][a];
    VolumeMetrics vm = volume_metrics(frames);
    CHECK(vm.mean_min_distance == doctest::Approx(1.0));
    CHECK(vm.mean_max_speed == doctest::Approx(0.0));

    // two approaching particles: per-step min distance decreases
    Tensor seq({5, 2, 2});
    for (int64_t n = 0; n < 5; ++n) {
        seq.mut_data()[(n * 2 + 0) * 2 + 0] = 0.0;
        seq.mut_data()[(n * 2 + 0) * 2 + 1] = 0.0;
        seq.mut_data()[(n * 2 + 1) * 2 + 0] = 1.0 - 0.1 * static_cast<double>(n);
        seq.mut_data()[(n * 2 + 1) * 2 + 1] = 0.0;
    }
    double prev = 2.0;
    for (int64_t n = 0; n < 5; ++n) {
        Tensor one({1, 2, 2});
        for (int64_t i = 0; i < 4; ++i) one.mut_data()[i] = seq.flat(n * 4 + i);
        const double d = volume_metrics(one).mean_min_distance;
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("rom checkpoint round trip") {
    RomBasis basis(RomBasisConfig{2, 6, 4, {32, 32}}, 23);
    basis.snapshot_rms = 0.123;
    basis.snapshot_count = 17;
    const std::string path = "/tmp/giorom_test_rom.ckpt";
    save_rom_checkpoint(path, basis);
    RomBasis back = load_rom_checkpoint(path);
    CHECK(back.config().rank == 6);
    CHECK(back.snapshot_rms == doctest::Approx(0.123));
    CHECK(back.snapshot_count == 17);
    Rng rng(24);
    Tensor q = random_points(10, rng);
    Tensor a = basis.eval_const(q);
    Tensor b = back.eval_const(q);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.flat(i) == b.flat(i));
    std::remove(path.c_str());
}
