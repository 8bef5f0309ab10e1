// giorom command suite: simulate-data | train | rollout | upsample | bench | metrics
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include "giorom/config.hpp"
#include "giorom/datagen.hpp"
#include "giorom/dynamics.hpp"
#include "giorom/rom.hpp"
#include "giorom/threading.hpp"
#include "giorom/trainer.hpp"

using namespace giorom;
namespace fs = std::filesystem;

namespace {

void print_resolved(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::cout << "[" << cmd << "] resolved configuration:\n";
    for (const auto& [k, v] : kv) std::cout << "  " << k << " = " << v << "\n";
}

std::string data_dir_or_env(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("GIOROM_DATA_DIR")) return env;
    throw UsageError("no data directory: pass --data or set GIOROM_DATA_DIR");
}

ModelConfig model_config_from(const Config& cfg) {
    ModelConfig m;
    m.latent = static_cast<int>(cfg.get_int("model.latent", m.latent));
    m.grid_channels = static_cast<int>(cfg.get_int("model.grid_channels", m.grid_channels));
    m.decoder_channels = static_cast<int>(cfg.get_int("model.decoder_channels", m.decoder_channels));
    m.modes = static_cast<int>(cfg.get_int("model.modes", m.modes));
    m.grid_res = static_cast<int>(cfg.get_int("model.grid", m.grid_res));
    m.type_embed_dim = static_cast<int>(cfg.get_int("model.type_embed", m.type_embed_dim));
    m.fno_layers = static_cast<int>(cfg.get_int("model.fno_layers", m.fno_layers));
    m.gno_radius = cfg.get_double("model.gno_radius", m.gno_radius);
    auto as_ints = [](const std::vector<double>& v, std::vector<int> fallback) {
        if (v.empty()) return fallback;
        std::vector<int> out;
        for (double x : v) out.push_back(static_cast<int>(x));
        return out;
    };
    m.encoder_hidden = as_ints(cfg.get_list("model.encoder_hidden"), m.encoder_hidden);
    m.io_hidden = as_ints(cfg.get_list("model.io_hidden"), m.io_hidden);
    m.gno_hidden = as_ints(cfg.get_list("model.gno_hidden"), m.gno_hidden);
    return m;
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig t;
    t.lr0 = cfg.get_double("train.lr0", t.lr0);
    t.gamma = cfg.get_double("train.gamma", t.gamma);
    t.batch = static_cast<int>(cfg.get_int("train.batch", t.batch));
    t.total_steps = cfg.get_int("train.steps", t.total_steps);
    t.sigma = cfg.get_double("train.sigma", t.sigma);
    t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
    t.radius_seed_scale = cfg.get_double("train.radius_seed_scale", t.radius_seed_scale);
    t.radius_augment_max = cfg.get_double("train.radius_augment_max", t.radius_augment_max);
    auto range = [&](const char* key, FractionRange fb) {
        auto [lo, hi] = cfg.get_range(key, {fb.lo, fb.hi});
        return FractionRange{lo, hi};
    };
    t.fractions[0] = range("train.fraction_fluid", t.fractions[0]);
    t.fractions[1] = range("train.fraction_elastic", t.fractions[1]);
    t.fractions[2] = range("train.fraction_plasticine", t.fractions[2]);
    t.fractions[3] = range("train.fraction_sand", t.fractions[3]);
    return t;
}

Tensor initial_frames_of(const Trajectory& traj, const std::vector<int>& indices, int window,
                         int64_t start) {
    const int64_t Qs = static_cast<int64_t>(indices.size());
    const int d = traj.dim;
    Tensor init({window + 1, Qs, d});
    for (int64_t f = 0; f <= window; ++f)
        for (int64_t i = 0; i < Qs; ++i)
            for (int a = 0; a < d; ++a)
                init.mut_data()[(f * Qs + i) * d + a] = traj.at(start + f, indices[static_cast<std::size_t>(i)], a);
    return init;
}

int cmd_simulate_data(CLI::App& app) {
    struct Opts {
        std::string material = "fluid", out_dir = "data", config_path;
        int64_t count = 1, particles = 500, steps = 300;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--material", o->material, "fluid|elastic");
    app.add_option("--count", o->count, "trajectories to generate");
    app.add_option("--particles", o->particles);
    app.add_option("--steps", o->steps);
    app.add_option("--seed", o->seed);
    app.add_option("--out", o->out_dir);
    app.add_option("--config", o->config_path);
    app.callback([o]() {
        const auto& [material, out_dir, config_path, count, particles, steps, seed] = *o;
        Config cfg = config_path.empty() ? Config() : Config::from_file(config_path);
        MaterialParams params = material == "elastic" ? default_elastic_params() : default_fluid_params();
        params.gravity = {cfg.get_double("sim.gravity_x", params.gravity[0]),
                          cfg.get_double("sim.gravity_y", params.gravity[1])};
        params.stiffness = cfg.get_double("sim.stiffness", params.stiffness);
        params.damping = cfg.get_double("sim.damping", params.damping);
        params.restitution = cfg.get_double("sim.restitution", params.restitution);
        params.interaction_radius = cfg.get_double("sim.radius", params.interaction_radius);
        print_resolved("simulate-data", {{"material", material},
                                         {"count", std::to_string(count)},
                                         {"particles", std::to_string(particles)},
                                         {"steps", std::to_string(steps)},
                                         {"seed", std::to_string(seed)},
                                         {"out", out_dir}});
        fs::create_directories(out_dir);
        for (int64_t k = 0; k < count; ++k) {
            const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
            Trajectory t = material == "elastic" ? generate_elasticlike(particles, steps, params, s)
                                                 : generate_fluidlike(particles, steps, params, s);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%04lld.gtrj", material.c_str(),
                          static_cast<long long>(k));
            save_trajectory((fs::path(out_dir) / name).string(), t);
        }
        std::cout << "wrote " << count << " trajectories to " << out_dir << "\n";
    });
    return 0;
}

int cmd_train(CLI::App& app) {
    struct Opts {
        std::string data_dir, out_path = "model.ckpt", config_path, log_csv, fraction;
        int64_t steps = -1, grid = -1, modes = -1, val = 0, threads = 0;
        double sigma = -1.0;
        std::uint64_t seed = UINT64_MAX;
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--data", o->data_dir, "trajectory directory (or GIOROM_DATA_DIR)");
    app.add_option("--out", o->out_path);
    app.add_option("--config", o->config_path);
    app.add_option("--steps", o->steps);
    app.add_option("--grid", o->grid);
    app.add_option("--modes", o->modes);
    app.add_option("--sigma", o->sigma);
    app.add_option("--seed", o->seed);
    app.add_option("--fraction", o->fraction, "lo,hi override for every material");
    app.add_option("--val", o->val, "trajectories held out from the end of the dataset");
    app.add_option("--threads", o->threads);
    app.add_option("--log", o->log_csv, "training log CSV");
    app.callback([o]() {
        const auto& [data_dir, out_path, config_path, log_csv, fraction, steps, grid, modes, val, threads, sigma, seed] = *o;
        if (threads > 0) set_num_threads(static_cast<int>(threads));
        Config cfg = config_path.empty() ? Config() : Config::from_file(config_path);
        ModelConfig mc = model_config_from(cfg);
        TrainConfig tc = train_config_from(cfg);
        if (steps >= 0) tc.total_steps = steps;
        if (sigma >= 0) tc.sigma = sigma;
        if (seed != UINT64_MAX) tc.seed = seed;
        if (grid > 0) mc.grid_res = static_cast<int>(grid);
        if (modes > 0) mc.modes = static_cast<int>(modes);
        if (!fraction.empty()) {
            Config tmp;
            tmp.set("f", fraction);
            auto [lo, hi] = tmp.get_range("f", {0.2, 0.25});
            for (auto& fr : tc.fractions) fr = FractionRange{lo, hi};
        }
        const std::string dir = data_dir_or_env(data_dir);
        Dataset all = load_dataset(dir);
        if (val >= all.size()) throw UsageError("--val leaves no training data");
        Dataset train_set, val_set;
        for (int64_t i = 0; i < all.size(); ++i)
            (i < all.size() - val ? train_set : val_set).trajectories.push_back(std::move(all.trajectories[static_cast<std::size_t>(i)]));

        print_resolved("train", {{"data", dir},
                                 {"trajectories", std::to_string(train_set.size())},
                                 {"held_out", std::to_string(val_set.size())},
                                 {"steps", std::to_string(tc.total_steps)},
                                 {"batch", std::to_string(tc.batch)},
                                 {"lr0", std::to_string(tc.lr0)},
                                 {"sigma", std::to_string(tc.sigma)},
                                 {"seed", std::to_string(tc.seed)},
                                 {"grid", std::to_string(mc.grid_res)},
                                 {"modes", std::to_string(mc.modes)},
                                 {"latent", std::to_string(mc.latent)},
                                 {"threads", std::to_string(num_threads())},
                                 {"out", out_path}});

        OperatorModel model(mc, tc.seed);
        Trainer trainer(model, tc);
        const auto t0 = std::chrono::steady_clock::now();
        trainer.run(train_set, log_csv);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_model_checkpoint(out_path, model, trainer.stats(), trainer.connected_radius_estimate(),
                              tc.sigma, tc.total_steps, tc.seed);
        std::cout << "trained " << tc.total_steps << " steps in " << wall << " s; checkpoint: "
                  << out_path << "\n";
        if (val_set.size() > 0) {
            const auto& fr = tc.fractions[0];
            ValidationResult v = trainer.validate(val_set, 100, 0.5 * (fr.lo + fr.hi), tc.seed + 1);
            std::cout << "validation: one_step_mse=" << v.one_step_mse
                      << " rollout_mse=" << v.rollout_mse
                      << " inertial_rollout_mse=" << v.inertial_rollout_mse << "\n";
        }
    });
    return 0;
}

int cmd_rollout(CLI::App& app) {
    struct Opts {
        std::string ckpt_path, traj_path, out_path, mse_csv;
        int64_t steps = 100, start = 0, threads = 0;
        double radius = 0.0, fraction = 1.0;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--ckpt", o->ckpt_path)->required();
    app.add_option("--traj", o->traj_path)->required();
    app.add_option("--steps", o->steps);
    app.add_option("--start", o->start, "first frame of the initial window");
    app.add_option("--radius", o->radius, ">0 fixed, 0 checkpoint radius, -1 connected-radius search");
    app.add_option("--fraction", o->fraction);
    app.add_option("--seed", o->seed);
    app.add_option("--out", o->out_path);
    app.add_option("--mse-csv", o->mse_csv);
    app.add_option("--threads", o->threads);
    app.callback([o]() {
        const auto& [ckpt_path, traj_path, out_path, mse_csv, steps, start, threads, radius, fraction, seed] = *o;
        if (threads > 0) set_num_threads(static_cast<int>(threads));
        LoadedModel lm = load_model_checkpoint(ckpt_path);
        Trajectory traj = load_trajectory(traj_path);
        const int w = lm.meta.model.window;
        if (start + w + 1 >= traj.frames) throw DataError("trajectory too short for the initial window");

        SubsampleResult sub = subsample(traj.cloud_at(start + w), fraction, seed);
        double r = radius;
        if (r == 0.0) r = lm.meta.radius;
        if (r < 0.0) r = find_connected_radius(sub.cloud, initial_search_radius(sub.cloud, 0.25));
        if (r <= 0.0) throw UsageError("no usable rollout radius");

        print_resolved("rollout", {{"ckpt", ckpt_path},
                                   {"traj", traj_path},
                                   {"steps", std::to_string(steps)},
                                   {"radius", std::to_string(r)},
                                   {"fraction", std::to_string(fraction)},
                                   {"particles", std::to_string(sub.cloud.size())},
                                   {"seed", std::to_string(seed)}});

        LatentGrid grid = make_latent_grid(traj.bounds, lm.meta.model.grid_res);
        std::vector<int> types(sub.cloud.object_id.begin(), sub.cloud.object_id.end());
        const AccelerationField field =
            model_accel_field(lm.model, lm.meta.stats, r, grid, types, traj.bounds);
        Tensor init = initial_frames_of(traj, sub.indices, w, start);
        const int64_t K = std::min<int64_t>(steps, traj.frames - 1 - (start + w));
        Tensor pred = rollout(field, init, K, traj.bounds, traj.dt);

        if (!out_path.empty()) {
            Trajectory out;
            out.dim = traj.dim;
            out.particles = sub.cloud.size();
            out.frames = pred.extent(0);
            out.dt = traj.dt;
            out.bounds = traj.bounds;
            out.material = traj.material;
            out.seed = seed;
            for (int64_t i = 0; i < pred.numel(); ++i)
                out.positions.push_back(static_cast<float>(pred.flat(i)));
            for (int64_t i = 0; i < sub.cloud.size(); ++i)
                out.particle_type.push_back(static_cast<std::uint8_t>(types[static_cast<std::size_t>(i)]));
            save_trajectory(out_path, out);
            std::cout << "wrote rollout to " << out_path << "\n";
        }
        if (!mse_csv.empty()) {
            std::ofstream os(mse_csv);
            os << "step,mse\n";
            double total = 0.0;
            const int d = traj.dim;
            for (int64_t k = 1; k < pred.extent(0); ++k) {
                double mse = 0.0;
                for (int64_t i = 0; i < sub.cloud.size(); ++i)
                    for (int a = 0; a < d; ++a) {
                        const double diff = pred(k, i, a) - traj.at(start + w + k, sub.indices[static_cast<std::size_t>(i)], a);
                        mse += diff * diff;
                    }
                mse /= static_cast<double>(sub.cloud.size());
                total += mse;
                os << k << "," << mse << "\n";
            }
            std::cout << "rollout_mse=" << total / static_cast<double>(std::max<int64_t>(pred.extent(0) - 1, 1)) << "\n";
        }
    });
    return 0;
}

int cmd_upsample(CLI::App& app) {
    struct Opts {
        std::string reduced_path, reference_path, basis_path, save_basis, out_path = "upsampled.gtrj";
        int64_t rank = 16, epochs = 30;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--reduced", o->reduced_path, "reduced-order rollout (.gtrj)")->required();
    app.add_option("--reference", o->reference_path, "full-order reference trajectory (.gtrj)")->required();
    app.add_option("--basis", o->basis_path, "basis checkpoint; fitted from the reference when absent");
    app.add_option("--save-basis", o->save_basis);
    app.add_option("--rank", o->rank);
    app.add_option("--epochs", o->epochs);
    app.add_option("--seed", o->seed);
    app.add_option("--out", o->out_path);
    app.callback([o]() {
        const auto& [reduced_path, reference_path, basis_path, save_basis, out_path, rank, epochs, seed] = *o;
        Trajectory reduced = load_trajectory(reduced_path);
        Trajectory reference = load_trajectory(reference_path);
        print_resolved("upsample", {{"reduced", reduced_path},
                                    {"reference", reference_path},
                                    {"basis", basis_path.empty() ? "(fit from reference)" : basis_path},
                                    {"rank", std::to_string(rank)},
                                    {"seed", std::to_string(seed)},
                                    {"out", out_path}});
        RomBasis basis = [&]() {
            if (!basis_path.empty()) return load_rom_checkpoint(basis_path);
            RomFitOptions opts;
            opts.rank = static_cast<int>(rank);
            opts.epochs = static_cast<int>(epochs);
            opts.seed = seed;
            return fit_basis({reference}, opts);
        }();
        if (!save_basis.empty()) save_rom_checkpoint(save_basis, basis);

        // reduced frame 0 must be a subset of the reference material points;
        // reference coordinates for the solve are the nearest full-order points
        const Tensor full_ref = reference.frame(0);
        const Tensor red0 = reduced.frame(0);
        const std::vector<int> ref_idx = nearest_source(full_ref, red0);
        Tensor red_ref({reduced.particles, reduced.dim});
        for (int64_t i = 0; i < reduced.particles; ++i)
            for (int a = 0; a < reduced.dim; ++a)
                red_ref.mut_data()[i * reduced.dim + a] = full_ref(ref_idx[static_cast<std::size_t>(i)], a);

        Trajectory out;
        out.dim = reference.dim;
        out.particles = reference.particles;
        out.frames = reduced.frames;
        out.dt = reduced.dt;
        out.bounds = reference.bounds;
        out.material = reference.material;
        out.seed = seed;
        out.particle_type = reference.particle_type;
        for (int64_t n = 0; n < reduced.frames; ++n) {
            RomWeights w = solve_weights(basis, reduced.frame(n), red_ref);
            Tensor full = upsample(basis, w, full_ref);
            for (int64_t i = 0; i < full.numel(); ++i)
                out.positions.push_back(static_cast<float>(full.flat(i)));
        }
        save_trajectory(out_path, out);
        std::cout << "wrote full-order trajectory (" << out.particles << " points, " << out.frames
                  << " frames) to " << out_path << "\n";
    });
    return 0;
}

int cmd_bench(CLI::App& app) {
    struct Opts {
        std::string ckpt_path, traj_path, out_path = "bench.csv", radii_csv = "0.05,0.07,0.09,0.11",
                    sizes_csv = "200,400,800,1600";
        int64_t steps = 20, threads = 0;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--ckpt", o->ckpt_path)->required();
    app.add_option("--traj", o->traj_path)->required();
    app.add_option("--radii", o->radii_csv);
    app.add_option("--sizes", o->sizes_csv);
    app.add_option("--steps", o->steps);
    app.add_option("--seed", o->seed);
    app.add_option("--threads", o->threads);
    app.add_option("--out", o->out_path);
    app.callback([o]() {
        const auto& [ckpt_path, traj_path, out_path, radii_csv, sizes_csv, steps, threads, seed] = *o;
        if (threads > 0) set_num_threads(static_cast<int>(threads));
        Config tmp;
        tmp.set("radii", radii_csv);
        tmp.set("sizes", sizes_csv);
        const std::vector<double> radii = tmp.get_list("radii");
        const std::vector<double> sizes = tmp.get_list("sizes");
        LoadedModel lm = load_model_checkpoint(ckpt_path);
        Trajectory traj = load_trajectory(traj_path);
        const int w = lm.meta.model.window;
        print_resolved("bench", {{"ckpt", ckpt_path},
                                 {"traj", traj_path},
                                 {"radii", radii_csv},
                                 {"sizes", sizes_csv},
                                 {"steps", std::to_string(steps)},
                                 {"seed", std::to_string(seed)},
                                 {"threads", std::to_string(num_threads())},
                                 {"out", out_path}});
        std::ofstream os(out_path);
        os << "radius,size,seconds\n";
        LatentGrid grid = make_latent_grid(traj.bounds, lm.meta.model.grid_res);
        for (double r : radii) {
            for (double size : sizes) {
                if (steps == 0) continue;  // header-only output
                const double fraction = std::min(1.0, size / static_cast<double>(traj.particles));
                SubsampleResult sub = subsample(traj.cloud_at(w), fraction, seed);
                std::vector<int> types(sub.cloud.object_id.begin(), sub.cloud.object_id.end());
                const AccelerationField field =
                    model_accel_field(lm.model, lm.meta.stats, r, grid, types, traj.bounds);
                Tensor init = initial_frames_of(traj, sub.indices, w, 0);
                std::vector<double> times;
                for (int rep = 0; rep < 3; ++rep) {
                    const auto t0 = std::chrono::steady_clock::now();
                    rollout(field, init, std::min<int64_t>(steps, traj.frames - 1 - w), traj.bounds, traj.dt);
                    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                }
                std::sort(times.begin(), times.end());
                os << r << "," << static_cast<int64_t>(size) << "," << times[1] << "\n";
                os.flush();
            }
        }
        std::cout << "wrote timings to " << out_path << "\n";
    });
    return 0;
}

int cmd_metrics(CLI::App& app) {
    struct Opts {
        std::string pred_path, truth_path, out_path = "metrics.csv";
    };
    auto o = std::make_shared<Opts>();
    app.add_option("--pred", o->pred_path)->required();
    app.add_option("--truth", o->truth_path)->required();
    app.add_option("--out", o->out_path);
    app.callback([o]() {
        const auto& [pred_path, truth_path, out_path] = *o;
        Trajectory pred = load_trajectory(pred_path);
        Trajectory truth = load_trajectory(truth_path);
        if (pred.dim != truth.dim || pred.particles != truth.particles || pred.frames > truth.frames)
            throw DataError("metrics: prediction/truth shape mismatch (Q " + std::to_string(pred.particles) +
                            " vs " + std::to_string(truth.particles) + ", frames " +
                            std::to_string(pred.frames) + " vs " + std::to_string(truth.frames) + ")");
        print_resolved("metrics", {{"pred", pred_path}, {"truth", truth_path}, {"out", out_path}});

        const int d = pred.dim;
        std::ofstream os(out_path);
        os << "step,mse,pred_min_dist,pred_max_speed\n";
        double total = 0.0;
        for (int64_t n = 0; n < pred.frames; ++n) {
            double mse = 0.0;
            for (int64_t i = 0; i < pred.particles; ++i)
                for (int a = 0; a < d; ++a) {
                    const double diff = pred.at(n, i, a) - truth.at(n, i, a);
                    mse += diff * diff;
                }
            mse /= static_cast<double>(pred.particles);
            total += mse;
            double min_dist = std::numeric_limits<double>::infinity();
            for (int64_t i = 0; i < pred.particles; ++i)
                for (int64_t j = i + 1; j < pred.particles; ++j) {
                    double s = 0.0;
                    for (int a = 0; a < d; ++a) {
                        const double diff = pred.at(n, i, a) - pred.at(n, j, a);
                        s += diff * diff;
                    }
                    min_dist = std::min(min_dist, s);
                }
            double max_speed = 0.0;
            if (n > 0) {
                for (int64_t i = 0; i < pred.particles; ++i) {
                    double s = 0.0;
                    for (int a = 0; a < d; ++a) {
                        const double diff = pred.at(n, i, a) - pred.at(n - 1, i, a);
                        s += diff * diff;
                    }
                    max_speed = std::max(max_speed, s);
                }
                max_speed = std::sqrt(max_speed) / pred.dt;
            }
            os << n << "," << mse << "," << std::sqrt(min_dist) << "," << max_speed << "\n";
        }
        const VolumeMetrics vm = volume_metrics([&]() {
            Tensor frames({pred.frames, pred.particles, d});
            for (int64_t i = 0; i < frames.numel(); ++i)
                frames.mut_data()[i] = static_cast<double>(pred.positions[static_cast<std::size_t>(i)]);
            return frames;
        }());
        std::cout << "rollout_mse=" << total / static_cast<double>(pred.frames)
                  << " mean_min_dist=" << vm.mean_min_distance
                  << " mean_max_speed=" << vm.mean_max_speed << "\n";
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GIOROM-style Lagrangian dynamics pipeline"};
    app.require_subcommand(1);
    auto* sim = app.add_subcommand("simulate-data", "generate toy ground-truth trajectories");
    auto* train = app.add_subcommand("train", "train the neural operator");
    auto* roll = app.add_subcommand("rollout", "autoregressive prediction from a checkpoint");
    auto* up = app.add_subcommand("upsample", "full-order reconstruction via the neural-field basis");
    auto* bench = app.add_subcommand("bench", "rollout wall-time benchmark CSV");
    auto* metrics = app.add_subcommand("metrics", "per-step MSE and volume metrics CSV");
    cmd_simulate_data(*sim);
    cmd_train(*train);
    cmd_rollout(*roll);
    cmd_upsample(*up);
    cmd_bench(*bench);
    cmd_metrics(*metrics);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors exit 2
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const BlowupError& e) {
        std::cerr << "numerical blow-up: " << e.what() << "\n";
        return 4;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
