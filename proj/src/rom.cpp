#include "giorom/rom.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "giorom/autodiff.hpp"
#include "giorom/dynamics.hpp"

namespace giorom {

namespace {

// Cholesky solve of (A + jitter*I) x = b for a symmetric positive
// semi-definite A, in place on copies. n is small (rank-sized).
std::vector<double> spd_solve(std::vector<double> A, std::vector<double> b, int n, double jitter) {
    for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(i * n + i)] += jitter;
    // factor A = L L^T
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A[static_cast<std::size_t>(i * n + j)];
            for (int k = 0; k < j; ++k) s -= A[static_cast<std::size_t>(i * n + k)] * A[static_cast<std::size_t>(j * n + k)];
            if (i == j) {
                A[static_cast<std::size_t>(i * n + i)] = std::sqrt(std::max(s, 1e-300));
            } else {
                A[static_cast<std::size_t>(i * n + j)] = s / A[static_cast<std::size_t>(j * n + j)];
            }
        }
    }
    // forward/backward substitution
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= A[static_cast<std::size_t>(i * n + k)] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / A[static_cast<std::size_t>(i * n + i)];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= A[static_cast<std::size_t>(k * n + i)] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / A[static_cast<std::size_t>(i * n + i)];
    }
    return b;
}

// Eigenvalue range of a small symmetric matrix by cyclic Jacobi rotations.
std::pair<double, double> sym_eig_range(std::vector<double> A, int n) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A[static_cast<std::size_t>(p * n + q)] * A[static_cast<std::size_t>(p * n + q)];
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = A[static_cast<std::size_t>(p * n + q)];
                if (std::fabs(apq) < 1e-300) continue;
                const double app = A[static_cast<std::size_t>(p * n + p)];
                const double aqq = A[static_cast<std::size_t>(q * n + q)];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double akp = A[static_cast<std::size_t>(k * n + p)];
                    const double akq = A[static_cast<std::size_t>(k * n + q)];
                    A[static_cast<std::size_t>(k * n + p)] = c * akp - s * akq;
                    A[static_cast<std::size_t>(k * n + q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A[static_cast<std::size_t>(p * n + k)];
                    const double aqk = A[static_cast<std::size_t>(q * n + k)];
                    A[static_cast<std::size_t>(p * n + k)] = c * apk - s * aqk;
                    A[static_cast<std::size_t>(q * n + k)] = s * apk + c * aqk;
                }
            }
    }
    double lo = A[0], hi = A[0];
    for (int i = 0; i < n; ++i) {
        lo = std::min(lo, A[static_cast<std::size_t>(i * n + i)]);
        hi = std::max(hi, A[static_cast<std::size_t>(i * n + i)]);
    }
    return {lo, hi};
}

}  // namespace

RomBasis::RomBasis(RomBasisConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.rank < 1) throw DataError("rom basis rank must be >= 1");
    Rng rng(seed);
    std::vector<int> widths;
    widths.push_back(cfg_.encoded_width());
    for (int h : cfg_.hidden) widths.push_back(h);
    widths.push_back(cfg_.dim * cfg_.rank);
    field_ = Mlp{"field", widths};
    field_.register_params(params_, rng);
}

Tensor RomBasis::encode(const Tensor& positions) const {
    const int64_t N = positions.extent(0);
    const int d = cfg_.dim;
    const int L = cfg_.enc_levels;
    Tensor enc({N, cfg_.encoded_width()});
    double* ed = enc.mut_data();
    const int width = cfg_.encoded_width();
    for (int64_t i = 0; i < N; ++i) {
        int col = 0;
        for (int a = 0; a < d; ++a) ed[i * width + col++] = positions(i, a);
        for (int l = 0; l < L; ++l) {
            const double f = M_PI * std::pow(2.0, l);
            for (int a = 0; a < d; ++a) {
                ed[i * width + col++] = std::sin(f * positions(i, a));
                ed[i * width + col++] = std::cos(f * positions(i, a));
            }
        }
    }
    return enc;
}

Var RomBasis::eval(const ParamFn& P, const Tensor& positions) const {
    return field_.forward(P, Var(encode(positions)));
}

Tensor RomBasis::eval_const(const Tensor& positions) const {
    ConstParams cp(params_);
    return field_.forward([&cp](const std::string& n) { return cp[n]; }, Var(encode(positions))).v;
}

namespace {

struct Snapshot {
    Tensor reference;     // [Q, d]
    Tensor displacement;  // [Q, d]
};

std::vector<Snapshot> collect_snapshots(const std::vector<Trajectory>& trajectories, int stride) {
    std::vector<Snapshot> snaps;
    for (const Trajectory& t : trajectories) {
        const Tensor ref = t.frame(0);
        for (int64_t n = 1; n < t.frames; n += stride) {
            Snapshot s;
            s.reference = ref;
            s.displacement = t_sub(t.frame(n), ref);
            snaps.push_back(std::move(s));
        }
    }
    return snaps;
}

// Exact least-squares refinement of the output layer given fixed per-snapshot
// weights: for each output axis the unknowns (last-layer columns and bias)
// enter linearly, so a ridge-damped normal-equation solve is exact.
void polish_last_layer(RomBasis& basis, const std::vector<Snapshot>& snaps,
                       const std::vector<Tensor>& qs) {
    const RomBasisConfig& cfg = basis.config();
    const int d = cfg.dim, r = cfg.rank;
    const std::size_t last = cfg.hidden.size();
    const std::string wname = "field.l" + std::to_string(last) + ".W";
    const std::string bname = "field.l" + std::to_string(last) + ".b";
    const int hdim = cfg.hidden.back();
    const int ncols = (hdim + 1) * r;  // per-axis unknowns

    // penultimate features per snapshot reference set
    Mlp trunk{"field", [&] {
                  std::vector<int> w;
                  w.push_back(cfg.encoded_width());
                  for (int h : cfg.hidden) w.push_back(h);
                  return w;
              }()};
    ConstParams cp(basis.params());
    auto features = [&](const Tensor& ref) {
        Var h = Var(basis.encode(ref));
        for (std::size_t l = 0; l + 1 < trunk.widths.size(); ++l) {
            h = ad::linear(h, cp[trunk.layer_name(l) + ".W"], cp[trunk.layer_name(l) + ".b"]);
            h = ad::gelu(h);  // hidden activations only; output layer solved below
        }
        return h.v;
    };

    Tensor W = basis.params().at(wname);
    Tensor b = basis.params().at(bname);
    Tensor newW(W.shape()), newb(b.shape());
    for (int64_t i = 0; i < W.numel(); ++i) newW.mut_data()[i] = W.flat(i);
    for (int64_t i = 0; i < b.numel(); ++i) newb.mut_data()[i] = b.flat(i);

    for (int axis = 0; axis < d; ++axis) {
        std::vector<double> G(static_cast<std::size_t>(ncols) * ncols, 0.0);
        std::vector<double> rhs(static_cast<std::size_t>(ncols), 0.0);
        std::vector<double> row(static_cast<std::size_t>(ncols));
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            const Tensor h = features(snaps[s].reference);
            const Tensor& q = qs[s];
            const int64_t Q = snaps[s].reference.extent(0);
            for (int64_t k = 0; k < Q; ++k) {
                for (int f = 0; f < hdim; ++f)
                    for (int j = 0; j < r; ++j) row[static_cast<std::size_t>(f * r + j)] = h(k, f) * q.flat(j);
                for (int j = 0; j < r; ++j) row[static_cast<std::size_t>(hdim * r + j)] = q.flat(j);
                const double target = snaps[s].displacement(k, axis);
                for (int i = 0; i < ncols; ++i) {
                    rhs[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)] * target;
                    for (int j = i; j < ncols; ++j)
                        G[static_cast<std::size_t>(i * ncols + j)] += row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
                }
            }
        }
        for (int i = 0; i < ncols; ++i)
            for (int j = 0; j < i; ++j) G[static_cast<std::size_t>(i * ncols + j)] = G[static_cast<std::size_t>(j * ncols + i)];

        // column equilibration keeps the ridge bias proportional to each
        // column's own scale; refinement then removes most of what is left
        std::vector<double> scale(static_cast<std::size_t>(ncols));
        for (int i = 0; i < ncols; ++i)
            scale[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(std::max(G[static_cast<std::size_t>(i * ncols + i)], 1e-30));
        std::vector<double> Geq(static_cast<std::size_t>(ncols) * ncols);
        std::vector<double> rhs_eq(static_cast<std::size_t>(ncols));
        for (int i = 0; i < ncols; ++i) {
            rhs_eq[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(i)];
            for (int j = 0; j < ncols; ++j)
                Geq[static_cast<std::size_t>(i * ncols + j)] =
                    G[static_cast<std::size_t>(i * ncols + j)] * scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)];
        }
        std::vector<double> y = spd_solve(Geq, rhs_eq, ncols, 1e-12);
        for (int refine = 0; refine < 2; ++refine) {
            std::vector<double> resid(static_cast<std::size_t>(ncols));
            for (int i = 0; i < ncols; ++i) {
                double gi = 0.0;
                for (int j = 0; j < ncols; ++j) gi += Geq[static_cast<std::size_t>(i * ncols + j)] * y[static_cast<std::size_t>(j)];
                resid[static_cast<std::size_t>(i)] = rhs_eq[static_cast<std::size_t>(i)] - gi;
            }
            const std::vector<double> dy = spd_solve(Geq, resid, ncols, 1e-12);
            for (int i = 0; i < ncols; ++i) y[static_cast<std::size_t>(i)] += dy[static_cast<std::size_t>(i)];
        }
        std::vector<double> sol(static_cast<std::size_t>(ncols));
        for (int i = 0; i < ncols; ++i) sol[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(i)];
        for (int f = 0; f < hdim; ++f)
            for (int j = 0; j < r; ++j)
                newW.mut_data()[static_cast<int64_t>(f) * (d * r) + axis * r + j] = sol[static_cast<std::size_t>(f * r + j)];
        for (int j = 0; j < r; ++j) newb.mut_data()[axis * r + j] = sol[static_cast<std::size_t>(hdim * r + j)];
    }
    basis.params().set(wname, newW);
    basis.params().set(bname, newb);
}

}  // namespace

RomBasis fit_basis(const std::vector<Trajectory>& trajectories, const RomFitOptions& opts) {
    if (trajectories.empty()) throw DataError("fit_basis needs at least one trajectory");
    if (opts.rank < 1) throw DataError("fit_basis: rank must be >= 1");

    RomBasisConfig cfg;
    cfg.dim = trajectories.front().dim;
    cfg.rank = opts.rank;
    RomBasis basis(cfg, opts.seed);

    std::vector<Snapshot> snaps = collect_snapshots(trajectories, opts.frame_stride);
    if (static_cast<int>(snaps.size()) < opts.rank)
        std::cerr << "fit_basis: rank " << opts.rank << " exceeds snapshot count " << snaps.size()
                  << "; basis will be rank-deficient\n";

    double rms = 0.0;
    int64_t count = 0;
    for (const Snapshot& s : snaps) {
        for (int64_t i = 0; i < s.displacement.numel(); ++i)
            rms += s.displacement.flat(i) * s.displacement.flat(i);
        count += s.displacement.numel();
    }
    basis.snapshot_rms = std::sqrt(rms / std::max<int64_t>(count, 1));
    basis.snapshot_count = static_cast<int64_t>(snaps.size());

    Adam opt(opts.lr, opts.lr_decay);
    Rng rng(opts.seed ^ 0xabcdef12345ULL);
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<std::size_t> order(snaps.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.randint(i))]);
        for (std::size_t oi : order) {
            const Snapshot& s = snaps[oi];
            const RomWeights w = solve_weights(basis, t_add(s.reference, s.displacement), s.reference);
            Tape tape;
            TapedParams taped(tape, basis.params());
            Var U = basis.eval([&taped](const std::string& n) { return taped[n]; }, s.reference);
            Var recon = ad::blockwise_matvec(U, Var(w.q), cfg.dim);
            Var loss = ad::mse(recon, Var(s.displacement));
            gradient(loss, tape, taped);
            opt.step(basis.params());
        }
    }
    for (int round = 0; round < opts.polish_rounds; ++round) {
        std::vector<Tensor> qs;
        qs.reserve(snaps.size());
        for (const Snapshot& s : snaps)
            qs.push_back(solve_weights(basis, t_add(s.reference, s.displacement), s.reference).q);
        polish_last_layer(basis, snaps, qs);
    }
    return basis;
}

RomWeights solve_weights(const RomBasis& basis, const Tensor& reduced_positions,
                         const Tensor& reference_positions) {
    if (!reduced_positions.same_shape(reference_positions))
        throw ShapeError("solve_weights: position shape mismatch");
    const int64_t Q = reference_positions.extent(0);
    const int d = basis.config().dim;
    const int r = basis.config().rank;

    const Tensor U = basis.eval_const(reference_positions);  // [Q, d*r]
    std::vector<double> M(static_cast<std::size_t>(r) * r, 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(r), 0.0);
    for (int64_t k = 0; k < Q; ++k)
        for (int a = 0; a < d; ++a) {
            const double* row = U.data() + (k * d + a) * r;
            const double target = reduced_positions(k, a) - reference_positions(k, a);
            for (int i = 0; i < r; ++i) {
                rhs[static_cast<std::size_t>(i)] += row[i] * target;
                for (int j = i; j < r; ++j) M[static_cast<std::size_t>(i * r + j)] += row[i] * row[j];
            }
        }
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < i; ++j) M[static_cast<std::size_t>(i * r + j)] = M[static_cast<std::size_t>(j * r + i)];

    const auto [emin, emax] = sym_eig_range(M, r);
    RomWeights out;
    out.condition = emax / std::max(emin, 1e-300);
    out.rank_deficient = out.condition > 1e12;

    // damped solve plus iterative refinement against the undamped normal
    // matrix; the refinement removes the O(lambda/eig) bias while the damped
    // factorization keeps rank-deficient systems stable (the right-hand side
    // lies in range(M), so null-space components stay put)
    std::vector<double> q = spd_solve(M, rhs, r, 1e-8);
    for (int refine = 0; refine < 2; ++refine) {
        std::vector<double> resid(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) {
            double mi = 0.0;
            for (int j = 0; j < r; ++j) mi += M[static_cast<std::size_t>(i * r + j)] * q[static_cast<std::size_t>(j)];
            resid[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] - mi;
        }
        const std::vector<double> dq = spd_solve(M, resid, r, 1e-8);
        for (int i = 0; i < r; ++i) q[static_cast<std::size_t>(i)] += dq[static_cast<std::size_t>(i)];
    }
    out.q = Tensor({r}, q);

    double resid = 0.0;
    for (int64_t k = 0; k < Q; ++k)
        for (int a = 0; a < d; ++a) {
            const double* row = U.data() + (k * d + a) * r;
            double recon = 0.0;
            for (int i = 0; i < r; ++i) recon += row[i] * q[static_cast<std::size_t>(i)];
            const double diff = recon - (reduced_positions(k, a) - reference_positions(k, a));
            resid += diff * diff;
        }
    out.residual = std::sqrt(resid / static_cast<double>(Q * d));
    return out;
}

Tensor upsample(const RomBasis& basis, const RomWeights& weights, const Tensor& query_points) {
    const int64_t P = query_points.extent(0);
    const int d = basis.config().dim;
    const int r = basis.config().rank;
    const Tensor U = basis.eval_const(query_points);  // [P, d*r]
    Tensor out({P, d});
    double* od = out.mut_data();
    for (int64_t j = 0; j < P; ++j)
        for (int a = 0; a < d; ++a) {
            double acc = query_points(j, a);
            const double* row = U.data() + (j * d + a) * r;
            for (int i = 0; i < r; ++i) acc += row[i] * weights.q.flat(i);
            od[j * d + a] = acc;
        }
    return out;
}

VolumeMetrics volume_metrics(const Tensor& frames, double dt) {
    if (frames.ndim() != 3) throw ShapeError("volume_metrics expects [F, Q, d]");
    const int64_t F = frames.extent(0), Q = frames.extent(1), d = frames.extent(2);
    if (Q < 2) throw DataError("volume_metrics needs at least 2 particles");
    VolumeMetrics vm;
    double min_sum = 0.0, speed_sum = 0.0;
    for (int64_t n = 0; n < F; ++n) {
        double min_dist = std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < Q; ++i)
            for (int64_t j = i + 1; j < Q; ++j) {
                double s = 0.0;
                for (int64_t a = 0; a < d; ++a) {
                    const double diff = frames(n, i, a) - frames(n, j, a);
                    s += diff * diff;
                }
                min_dist = std::min(min_dist, s);
            }
        min_sum += std::sqrt(min_dist);
        if (n > 0) {
            double max_speed = 0.0;
            for (int64_t i = 0; i < Q; ++i) {
                double s = 0.0;
                for (int64_t a = 0; a < d; ++a) {
                    const double diff = frames(n, i, a) - frames(n - 1, i, a);
                    s += diff * diff;
                }
                max_speed = std::max(max_speed, s);
            }
            speed_sum += std::sqrt(max_speed) / dt;
        }
    }
    vm.mean_min_distance = min_sum / static_cast<double>(F);
    vm.mean_max_speed = F > 1 ? speed_sum / static_cast<double>(F - 1) : 0.0;
    return vm;
}

void save_rom_checkpoint(const std::string& path, const RomBasis& basis) {
    nlohmann::json meta;
    meta["kind"] = "rom";
    meta["dim"] = basis.config().dim;
    meta["rank"] = basis.config().rank;
    meta["enc_levels"] = basis.config().enc_levels;
    meta["hidden"] = basis.config().hidden;
    meta["snapshot_rms"] = basis.snapshot_rms;
    meta["snapshot_count"] = basis.snapshot_count;
    save_checkpoint(path, meta.dump(2), basis.params());
}

RomBasis load_rom_checkpoint(const std::string& path) {
    ParamStore raw;
    const std::string meta_text = load_checkpoint(path, raw);
    const auto meta = nlohmann::json::parse(meta_text);
    if (meta.value("kind", "") != "rom") throw DataError("not a rom checkpoint: " + path);
    RomBasisConfig cfg;
    cfg.dim = meta.at("dim");
    cfg.rank = meta.at("rank");
    cfg.enc_levels = meta.at("enc_levels");
    cfg.hidden = meta.at("hidden").get<std::vector<int>>();
    RomBasis basis(cfg, 0);
    basis.snapshot_rms = meta.at("snapshot_rms");
    basis.snapshot_count = meta.at("snapshot_count");
    for (const auto& [name, p] : raw.params()) basis.params().set(name, p);
    return basis;
}

}  // namespace giorom
