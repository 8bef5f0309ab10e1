#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "giorom/datagen.hpp"
#include "giorom/dynamics.hpp"
#include "giorom/nn.hpp"
#include "giorom/operator_model.hpp"

namespace giorom {

// Per-axis standardization statistics for velocities and accelerations,
// accumulated with Welford updates and frozen before training.
class NormStats {
public:
    explicit NormStats(int dim = 2) : dim_(dim) {
        vel_mean_.assign(static_cast<std::size_t>(dim), 0.0);
        vel_m2_.assign(static_cast<std::size_t>(dim), 0.0);
        acc_mean_.assign(static_cast<std::size_t>(dim), 0.0);
        acc_m2_.assign(static_cast<std::size_t>(dim), 0.0);
    }

    void observe_velocity(const double* v);
    void observe_acceleration(const double* a);
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    int dim() const { return dim_; }

    double vel_mean(int a) const { return vel_mean_[static_cast<std::size_t>(a)]; }
    double vel_std(int a) const { return std_of(vel_m2_[static_cast<std::size_t>(a)], vel_count_); }
    double acc_mean(int a) const { return acc_mean_[static_cast<std::size_t>(a)]; }
    double acc_std(int a) const { return std_of(acc_m2_[static_cast<std::size_t>(a)], acc_count_); }

    // window [Q, w, d] -> normalized flat [Q, w*d]
    Tensor normalize_window(const Tensor& window) const;
    Tensor normalize_acceleration(const Tensor& acc) const;
    Tensor denormalize_acceleration(const Tensor& acc_norm) const;

    std::string to_json() const;
    static NormStats from_json(const std::string& text);

private:
    static double std_of(double m2, int64_t n) {
        if (n < 2) return 1.0;
        return std::max(std::sqrt(m2 / static_cast<double>(n)), 1e-8);
    }
    int dim_;
    std::vector<double> vel_mean_, vel_m2_, acc_mean_, acc_m2_;
    int64_t vel_count_ = 0, acc_count_ = 0;
    bool frozen_ = false;
};

struct FractionRange {
    double lo = 0.2, hi = 0.25;
};

struct TrainConfig {
    double lr0 = 1e-4;
    double gamma = std::pow(0.1, 1.0 / 5e6);
    int batch = 4;
    int64_t total_steps = 50000;
    double sigma = 3e-4;
    int window = 6;
    std::uint64_t seed = 0;
    double radius_seed_scale = 0.25;  // r0 = scale * diag / sqrt(Q)
    // per-sample training radius is the connected radius times U(1, this);
    // > 1 exposes the model to a band of neighborhood sizes (still a single
    // component, since the connected radius is the lower end)
    double radius_augment_max = 1.0;
    // per-material subsampling brackets: fluid/water, elastic, plasticine, sand
    std::array<FractionRange, 4> fractions = {FractionRange{0.20, 0.25}, FractionRange{0.01, 0.03},
                                              FractionRange{0.10, 0.15}, FractionRange{0.35, 0.45}};
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    int64_t size() const { return static_cast<int64_t>(trajectories.size()); }
};

Dataset load_dataset(const std::string& dir);

double mse_loss(const Tensor& pred, const Tensor& target);

// Position MSE convention: mean over particles of squared Euclidean error
// (sum over axes), then mean over steps for rollout aggregates.
double position_mse(const Tensor& a, const Tensor& b);

struct ValidationResult {
    double one_step_mse = 0.0;       // normalized acceleration units
    double rollout_mse = 0.0;        // world position units
    double inertial_rollout_mse = 0.0;
};

class Trainer {
public:
    Trainer(OperatorModel& model, TrainConfig cfg);

    // One pass of velocity/acceleration statistics over the dataset, then
    // frozen for the rest of the run.
    void warm_stats(const Dataset& data);

    // One optimizer step over a sampled minibatch; returns the batch loss.
    double train_step(const Dataset& data);

    // Full run with CSV logging (step,loss,lr,wall_time_s).
    void run(const Dataset& data, const std::string& log_csv_path);

    ValidationResult validate(const Dataset& heldout, int64_t rollout_steps,
                              double fraction, std::uint64_t seed) const;

    const NormStats& stats() const { return stats_; }
    NormStats& stats_mut() { return stats_; }
    double connected_radius_estimate() const { return radius_ema_; }
    void set_radius_estimate(double r) { radius_ema_ = r; }
    const LatentGrid& grid() const { return grid_; }
    void ensure_grid(const Bounds& bounds);
    int64_t steps_done() const { return opt_.step_count(); }
    double last_lr() const { return opt_.learning_rate(); }

private:
    OperatorModel& model_;
    TrainConfig cfg_;
    NormStats stats_;
    Adam opt_;
    Rng rng_;
    LatentGrid grid_;
    bool grid_ready_ = false;
    double radius_ema_ = 0.0;
};

// Model-backed acceleration field for rollouts: graph at a fixed radius,
// normalized featurization, denormalized output. No noise.
AccelerationField model_accel_field(const OperatorModel& model, const NormStats& stats,
                                    double radius, const LatentGrid& grid,
                                    std::vector<int> types, Bounds bounds);

// Constant-velocity extrapolation baseline (zero predicted acceleration).
AccelerationField inertial_field(int dim);

// ---- checkpoint glue ----

struct CheckpointMeta {
    ModelConfig model;
    NormStats stats;
    double radius = 0.0;
    double sigma = 0.0;
    int64_t steps = 0;
    std::uint64_t seed = 0;
};

void save_model_checkpoint(const std::string& path, const OperatorModel& model,
                           const NormStats& stats, double radius, double sigma, int64_t steps,
                           std::uint64_t seed);

struct LoadedModel {
    OperatorModel model;
    CheckpointMeta meta;
};
LoadedModel load_model_checkpoint(const std::string& path);

// Seed radius heuristic for the connected-radius search.
double initial_search_radius(const PointCloud& cloud, double scale);

}  // namespace giorom
