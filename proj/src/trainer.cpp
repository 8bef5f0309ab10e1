#include "giorom/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "giorom/autodiff.hpp"

namespace giorom {

void NormStats::observe_velocity(const double* v) {
    if (frozen_) throw DataError("stats are frozen");
    ++vel_count_;
    for (int a = 0; a < dim_; ++a) {
        const double delta = v[a] - vel_mean_[static_cast<std::size_t>(a)];
        vel_mean_[static_cast<std::size_t>(a)] += delta / static_cast<double>(vel_count_);
        vel_m2_[static_cast<std::size_t>(a)] += delta * (v[a] - vel_mean_[static_cast<std::size_t>(a)]);
    }
}

void NormStats::observe_acceleration(const double* x) {
    if (frozen_) throw DataError("stats are frozen");
    ++acc_count_;
    for (int a = 0; a < dim_; ++a) {
        const double delta = x[a] - acc_mean_[static_cast<std::size_t>(a)];
        acc_mean_[static_cast<std::size_t>(a)] += delta / static_cast<double>(acc_count_);
        acc_m2_[static_cast<std::size_t>(a)] += delta * (x[a] - acc_mean_[static_cast<std::size_t>(a)]);
    }
}

Tensor NormStats::normalize_window(const Tensor& window) const {
    const int64_t Q = window.extent(0), w = window.extent(1), d = window.extent(2);
    Tensor out({Q, w * d});
    double* od = out.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int64_t k = 0; k < w; ++k)
            for (int64_t a = 0; a < d; ++a)
                od[i * w * d + k * d + a] =
                    (window(i, k, a) - vel_mean(static_cast<int>(a))) / vel_std(static_cast<int>(a));
    return out;
}

Tensor NormStats::normalize_acceleration(const Tensor& acc) const {
    const int64_t Q = acc.extent(0), d = acc.extent(1);
    Tensor out({Q, d});
    double* od = out.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int64_t a = 0; a < d; ++a)
            od[i * d + a] = (acc(i, a) - acc_mean(static_cast<int>(a))) / acc_std(static_cast<int>(a));
    return out;
}

Tensor NormStats::denormalize_acceleration(const Tensor& acc_norm) const {
    const int64_t Q = acc_norm.extent(0), d = acc_norm.extent(1);
    Tensor out({Q, d});
    double* od = out.mut_data();
    for (int64_t i = 0; i < Q; ++i)
        for (int64_t a = 0; a < d; ++a)
            od[i * d + a] = acc_norm(i, a) * acc_std(static_cast<int>(a)) + acc_mean(static_cast<int>(a));
    return out;
}

std::string NormStats::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["vel_mean"] = vel_mean_;
    j["vel_m2"] = vel_m2_;
    j["acc_mean"] = acc_mean_;
    j["acc_m2"] = acc_m2_;
    j["vel_count"] = vel_count_;
    j["acc_count"] = acc_count_;
    j["frozen"] = frozen_;
    return j.dump();
}

NormStats NormStats::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    NormStats s(j.at("dim").get<int>());
    s.vel_mean_ = j.at("vel_mean").get<std::vector<double>>();
    s.vel_m2_ = j.at("vel_m2").get<std::vector<double>>();
    s.acc_mean_ = j.at("acc_mean").get<std::vector<double>>();
    s.acc_m2_ = j.at("acc_m2").get<std::vector<double>>();
    s.vel_count_ = j.at("vel_count").get<int64_t>();
    s.acc_count_ = j.at("acc_count").get<int64_t>();
    s.frozen_ = j.at("frozen").get<bool>();
    return s;
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".gtrj") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .gtrj trajectories in " + dir);
    Dataset data;
    for (const auto& f : files) data.trajectories.push_back(load_trajectory(f));
    return data;
}

double mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw ShapeError("loss: shape mismatch " + pred.shape_str() + " vs " + target.shape_str());
    double s = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const double d = pred.flat(i) - target.flat(i);
        s += d * d;
    }
    return s / static_cast<double>(pred.numel());
}

double position_mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("position_mse: shape mismatch");
    const int64_t Q = a.extent(0), d = a.extent(1);
    double s = 0.0;
    for (int64_t i = 0; i < Q * d; ++i) {
        const double diff = a.flat(i) - b.flat(i);
        s += diff * diff;
    }
    return s / static_cast<double>(Q);
}

double initial_search_radius(const PointCloud& cloud, double scale) {
    const double diag = cloud.bounds.diagonal();
    const double q = std::max<double>(1.0, std::sqrt(static_cast<double>(cloud.size())));
    return std::max(1e-6, scale * diag / q);
}

Trainer::Trainer(OperatorModel& model, TrainConfig cfg)
    : model_(model),
      cfg_(cfg),
      stats_(model.config().dim),
      opt_(cfg.lr0, cfg.gamma),
      rng_(cfg.seed) {}

void Trainer::ensure_grid(const Bounds& bounds) {
    if (grid_ready_) return;
    grid_ = make_latent_grid(bounds, model_.config().grid_res);
    if (model_.config().gno_radius <= 0.0) model_.config_mut().gno_radius = 2.0 * grid_.spacing0;
    grid_ready_ = true;
}

void Trainer::warm_stats(const Dataset& data) {
    if (stats_.frozen()) return;
    for (const Trajectory& t : data.trajectories) {
        const int d = t.dim;
        std::vector<double> v(static_cast<std::size_t>(d)), acc(static_cast<std::size_t>(d));
        for (int64_t n = 1; n < t.frames; ++n)
            for (int64_t i = 0; i < t.particles; ++i) {
                for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(a)] = (t.at(n, i, a) - t.at(n - 1, i, a)) / t.dt;
                stats_.observe_velocity(v.data());
                if (n + 1 < t.frames) {
                    for (int a = 0; a < d; ++a)
                        acc[static_cast<std::size_t>(a)] =
                            (t.at(n + 1, i, a) - 2.0 * t.at(n, i, a) + t.at(n - 1, i, a)) / (t.dt * t.dt);
                    stats_.observe_acceleration(acc.data());
                }
            }
        ensure_grid(t.bounds);
    }
    stats_.freeze();
}

double Trainer::train_step(const Dataset& data) {
    if (!stats_.frozen()) throw DataError("train_step before warm_stats");
    const int w = cfg_.window;
    const int d = model_.config().dim;

    Tape tape;
    TapedParams taped(tape, model_.params());
    Var total;
    bool first = true;

    for (int b = 0; b < cfg_.batch; ++b) {
        const auto& traj = data.trajectories[rng_.randint(static_cast<std::uint64_t>(data.size()))];
        const int64_t n_lo = w, n_hi = traj.frames - 2;  // need frames n-w .. n+1
        const int64_t n = n_lo + static_cast<int64_t>(rng_.randint(static_cast<std::uint64_t>(n_hi - n_lo + 1)));
        const auto& fr = cfg_.fractions[static_cast<std::size_t>(traj.material)];
        const double fraction = rng_.uniform(fr.lo, fr.hi);

        const PointCloud full = traj.cloud_at(n);
        SubsampleResult sub = subsample(full, fraction, rng_.raw());
        const int64_t Qs = sub.cloud.size();

        const double r0 = initial_search_radius(sub.cloud, cfg_.radius_seed_scale);
        const double r_connected = find_connected_radius(sub.cloud, r0);
        double radius = r_connected;
        if (cfg_.radius_augment_max > 1.0) radius *= rng_.uniform(1.0, cfg_.radius_augment_max);
        RadiusGraph graph = build_radius_graph(sub.cloud, radius);
        radius_ema_ = radius_ema_ == 0.0 ? r_connected : 0.99 * radius_ema_ + 0.01 * r_connected;

        // velocity window and target frames on the selected particles
        Tensor window({Qs, w, d});
        Tensor x_prev({Qs, d}), x_curr({Qs, d}), x_next({Qs, d});
        {
            double* wd = window.mut_data();
            double* xp = x_prev.mut_data();
            double* xc = x_curr.mut_data();
            double* xn = x_next.mut_data();
            for (int64_t i = 0; i < Qs; ++i) {
                const int64_t src = sub.indices[static_cast<std::size_t>(i)];
                for (int k = 0; k < w; ++k) {
                    const int64_t f = n - w + 1 + k;
                    for (int a = 0; a < d; ++a)
                        wd[(i * w + k) * d + a] = (traj.at(f, src, a) - traj.at(f - 1, src, a)) / traj.dt;
                }
                for (int a = 0; a < d; ++a) {
                    xp[i * d + a] = traj.at(n - 1, src, a);
                    xc[i * d + a] = traj.at(n, src, a);
                    xn[i * d + a] = traj.at(n + 1, src, a);
                }
            }
        }
        NoiseConfig noise_cfg{cfg_.sigma, rng_.raw()};
        NoisyWindow noisy = inject_random_walk_noise(window, noise_cfg);
        Tensor target = training_target(x_prev, x_curr, x_next, noisy.terminal, traj.dt);

        std::vector<int> types(sub.cloud.object_id.begin(), sub.cloud.object_id.end());
        Var pred = model_.forward(taped, sub.cloud, graph, stats_.normalize_window(noisy.window),
                                  types, grid_);
        Var sample_loss = ad::mse(pred, Var(stats_.normalize_acceleration(target)));
        total = first ? sample_loss : ad::add(total, sample_loss);
        first = false;
    }
    total = ad::scale(total, 1.0 / cfg_.batch);
    const double loss_value = total.v.item();
    gradient(total, tape, taped);
    opt_.step(model_.params());
    return loss_value;
}

void Trainer::run(const Dataset& data, const std::string& log_csv_path) {
    warm_stats(data);
    std::ofstream log;
    if (!log_csv_path.empty()) {
        log.open(log_csv_path);
        log << "step,loss,lr,wall_time_s\n";
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (int64_t s = 0; s < cfg_.total_steps; ++s) {
        const double lr_now = opt_.learning_rate();
        const double loss = train_step(data);
        if (log.is_open() && (s % 50 == 0 || s + 1 == cfg_.total_steps)) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log << s << "," << loss << "," << lr_now << "," << wall << "\n";
        }
    }
}

ValidationResult Trainer::validate(const Dataset& heldout, int64_t rollout_steps, double fraction,
                                   std::uint64_t seed) const {
    ValidationResult res;
    const int w = cfg_.window;
    const int d = model_.config().dim;
    int64_t one_step_count = 0;
    double one_step_sum = 0.0;
    double rollout_sum = 0.0, inertial_sum = 0.0;
    Rng rng(seed);

    for (const Trajectory& traj : heldout.trajectories) {
        const PointCloud full = traj.cloud_at(w);
        SubsampleResult sub = subsample(full, fraction, rng.raw());
        const int64_t Qs = sub.cloud.size();
        std::vector<int> types(sub.cloud.object_id.begin(), sub.cloud.object_id.end());

        // one-step MSE on clean windows, sampled every 10 frames
        for (int64_t n = w; n + 1 < traj.frames; n += 10) {
            Tensor window({Qs, w, d});
            Tensor x_prev({Qs, d}), x_curr({Qs, d}), x_next({Qs, d});
            Tensor pos({Qs, d});
            for (int64_t i = 0; i < Qs; ++i) {
                const int64_t src = sub.indices[static_cast<std::size_t>(i)];
                for (int k = 0; k < w; ++k) {
                    const int64_t f = n - w + 1 + k;
                    for (int a = 0; a < d; ++a)
                        window.mut_data()[(i * w + k) * d + a] = (traj.at(f, src, a) - traj.at(f - 1, src, a)) / traj.dt;
                }
                for (int a = 0; a < d; ++a) {
                    x_prev.mut_data()[i * d + a] = traj.at(n - 1, src, a);
                    x_curr.mut_data()[i * d + a] = traj.at(n, src, a);
                    x_next.mut_data()[i * d + a] = traj.at(n + 1, src, a);
                    pos.mut_data()[i * d + a] = traj.at(n, src, a);
                }
            }
            PointCloud cloud{pos, sub.cloud.object_id, traj.bounds};
            const double r0 = initial_search_radius(cloud, cfg_.radius_seed_scale);
            const double radius = find_connected_radius(cloud, r0);
            RadiusGraph graph = build_radius_graph(cloud, radius);
            Tensor zero_noise({Qs, d});
            Tensor target = training_target(x_prev, x_curr, x_next, zero_noise, traj.dt);
            Tensor pred = model_.infer(cloud, graph, stats_.normalize_window(window), types, grid_);
            one_step_sum += mse_loss(pred, stats_.normalize_acceleration(target));
            ++one_step_count;
        }

        // rollout from the first w+1 frames
        const int64_t K = std::min<int64_t>(rollout_steps, traj.frames - 1 - w);
        Tensor init({w + 1, Qs, d});
        for (int64_t f = 0; f <= w; ++f)
            for (int64_t i = 0; i < Qs; ++i)
                for (int a = 0; a < d; ++a)
                    init.mut_data()[(f * Qs + i) * d + a] = traj.at(f, sub.indices[static_cast<std::size_t>(i)], a);
        const double r0 = initial_search_radius(sub.cloud, cfg_.radius_seed_scale);
        const double radius = radius_ema_ > 0.0 ? radius_ema_ : find_connected_radius(sub.cloud, r0);

        auto mse_of = [&](const Tensor& pred_frames) {
            double acc = 0.0;
            for (int64_t k = 1; k < pred_frames.extent(0); ++k) {
                Tensor truth({Qs, d});
                for (int64_t i = 0; i < Qs; ++i)
                    for (int a = 0; a < d; ++a)
                        truth.mut_data()[i * d + a] = traj.at(w + k, sub.indices[static_cast<std::size_t>(i)], a);
                Tensor frame({Qs, d});
                for (int64_t i = 0; i < Qs; ++i)
                    for (int a = 0; a < d; ++a) frame.mut_data()[i * d + a] = pred_frames(k, i, a);
                acc += position_mse(frame, truth);
            }
            return acc / static_cast<double>(pred_frames.extent(0) - 1);
        };
        // a diverged rollout scores at box scale instead of aborting the sweep
        auto safe_mse = [&](const AccelerationField& field) {
            try {
                return mse_of(rollout(field, init, K, traj.bounds, traj.dt));
            } catch (const BlowupError&) {
                return traj.bounds.diagonal() * traj.bounds.diagonal();
            }
        };
        const AccelerationField model_field =
            model_accel_field(model_, stats_, radius, grid_, types, traj.bounds);
        rollout_sum += safe_mse(model_field);
        inertial_sum += safe_mse(inertial_field(d));
    }
    res.one_step_mse = one_step_count ? one_step_sum / static_cast<double>(one_step_count) : 0.0;
    res.rollout_mse = rollout_sum / static_cast<double>(heldout.size());
    res.inertial_rollout_mse = inertial_sum / static_cast<double>(heldout.size());
    return res;
}

AccelerationField model_accel_field(const OperatorModel& model, const NormStats& stats,
                                    double radius, const LatentGrid& grid,
                                    std::vector<int> types, Bounds bounds) {
    return [&model, &stats, radius, grid, types = std::move(types),
            bounds = std::move(bounds)](const RolloutState& state) {
        PointCloud cloud{state.positions, types, bounds};
        RadiusGraph graph = build_radius_graph(cloud, radius);
        Tensor pred = model.infer(cloud, graph, stats.normalize_window(state.window), types, grid);
        return stats.denormalize_acceleration(pred);
    };
}

AccelerationField inertial_field(int dim) {
    return [dim](const RolloutState& state) {
        return Tensor({state.particles(), dim});
    };
}

void save_model_checkpoint(const std::string& path, const OperatorModel& model,
                           const NormStats& stats, double radius, double sigma, int64_t steps,
                           std::uint64_t seed) {
    nlohmann::json meta;
    meta["kind"] = "operator";
    meta["model"] = nlohmann::json::parse(model_config_to_json(model.config()));
    meta["norm"] = nlohmann::json::parse(stats.to_json());
    meta["radius"] = radius;
    meta["sigma"] = sigma;
    meta["steps"] = steps;
    meta["seed"] = seed;
    save_checkpoint(path, meta.dump(2), model.params());
}

LoadedModel load_model_checkpoint(const std::string& path) {
    ParamStore raw;
    const std::string meta_text = load_checkpoint(path, raw);
    const auto meta = nlohmann::json::parse(meta_text);
    if (meta.value("kind", "") != "operator") throw DataError("not an operator checkpoint: " + path);
    CheckpointMeta cm{model_config_from_json(meta.at("model").dump()),
                      NormStats::from_json(meta.at("norm").dump()),
                      meta.at("radius").get<double>(),
                      meta.at("sigma").get<double>(),
                      meta.at("steps").get<int64_t>(),
                      meta.at("seed").get<std::uint64_t>()};
    LoadedModel out{OperatorModel(cm.model, 0), cm};
    for (const auto& [name, p] : raw.params()) out.model.params().set(name, p);
    return out;
}

}  // namespace giorom
