#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "giorom/datagen.hpp"
#include "giorom/nn.hpp"
#include "giorom/operator_model.hpp"

namespace giorom {

struct RomBasisConfig {
    int dim = 2;
    int rank = 16;
    int enc_levels = 4;  // sinusoidal frequency bands
    std::vector<int> hidden = {128, 128, 128, 128};

    int encoded_width() const { return dim * (1 + 2 * enc_levels); }
};

// Neural-field basis U: R^d -> R^{d x r}. Displacements are modeled as
// phi(X) - X = U(X) q with a per-step weight vector q.
class RomBasis {
public:
    RomBasis(RomBasisConfig cfg, std::uint64_t seed);

    const RomBasisConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    Tensor encode(const Tensor& positions) const;       // [N, d] -> [N, enc]
    Var eval(const ParamFn& P, const Tensor& positions) const;  // [N, d*r]
    Tensor eval_const(const Tensor& positions) const;

    double snapshot_rms = 0.0;  // training displacement scale
    int64_t snapshot_count = 0;

private:
    RomBasisConfig cfg_;
    ParamStore params_;
    Mlp field_;
};

struct RomWeights {
    Tensor q;  // [r]
    double residual = 0.0;     // RMS of the least-squares residual
    bool rank_deficient = false;
    double condition = 0.0;
};

struct RomFitOptions {
    int rank = 16;
    int epochs = 30;
    std::uint64_t seed = 0;
    int frame_stride = 4;   // snapshot subsampling along time
    double lr = 2e-3;
    double lr_decay = 0.9995;
    int polish_rounds = 2;  // closed-form last-layer refinements after Adam
};

// Joint fit of the neural-field basis over displacement snapshots:
// alternating closed-form q solves and Adam steps on the field, with an
// optional exact last-layer least-squares refinement at the end.
RomBasis fit_basis(const std::vector<Trajectory>& trajectories, const RomFitOptions& opts);

// q = argmin sum_k || phi(X^k) - X^k - U(X^k) q ||^2 via Tikhonov-damped
// normal equations (lambda = 1e-8). Systems with condition > 1e12 are
// flagged rank-deficient.
RomWeights solve_weights(const RomBasis& basis, const Tensor& reduced_positions,
                         const Tensor& reference_positions);

// phi(X^j) = X^j + U(X^j) q at arbitrary query points; cost linear in P.
Tensor upsample(const RomBasis& basis, const RomWeights& weights, const Tensor& query_points);

struct VolumeMetrics {
    double mean_min_distance = 0.0;  // mean over steps of min nearest-neighbor distance
    double mean_max_speed = 0.0;     // mean over steps of max particle speed
};
VolumeMetrics volume_metrics(const Tensor& frames, double dt = 1.0);  // [F, Q, d]

void save_rom_checkpoint(const std::string& path, const RomBasis& basis);
RomBasis load_rom_checkpoint(const std::string& path);

}  // namespace giorom
