#include "alrom/active.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace alrom {

void ActiveConfig::validate() const {
    if (pool_size < 1) throw ConfigError("active.pool_size must be >= 1");
    if (delta_s < 1) throw ConfigError("active.delta_s must be >= 1");
    if (!(tau_design > 0 && tau_design < 1)) throw ConfigError("active.tau_design must be in (0,1)");
    if (!(delta_tau_tol > 0)) throw ConfigError("active.delta_tau_tol must be positive");
    if (max_iterations < 1) throw ConfigError("active.max_iterations must be >= 1");
    if (pool_size < delta_s) throw ConfigError("active.pool_size must cover one increment");
}

void SpacesConfig::validate() const {
    if (estimate_ivps < 1) throw ConfigError("spaces.estimate_ivps must be >= 1");
    if (reduced_dim < 1) throw ConfigError("spaces.reduced_dim must be >= 1");
    if (beta < 0) throw ConfigError("spaces.beta must be >= 0");
    if (!trim_from_estimate && !(trim_y_min < trim_y_max)) {
        throw ConfigError("spaces.trim: y_min must be below y_max");
    }
}

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::target_met: return "target_met";
        case StopReason::improvement_stalled: return "improvement_stalled";
        case StopReason::max_iterations: return "max_iterations";
    }
    return "unknown";
}

EstimateResult estimate_spaces(const FomModel& fom, const ParameterSpace& space,
                               const SpacesConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto parameters = sps_sample(space, cfg.estimate_ivps, rng);

    const Index columns_per_ivp = fom.step_count() + 1;
    EstimateResult est;
    est.y_estimate.resize(fom.state_dim(), cfg.estimate_ivps * columns_per_ivp);
    for (Index j = 0; j < cfg.estimate_ivps; ++j) {
        const auto schedule =
            ParameterSchedule::constant(parameters[static_cast<std::size_t>(j)],
                                        fom.start_time(), fom.end_time());
        est.y_estimate.middleCols(j * columns_per_ivp, columns_per_ivp) = fom.solve_ivp(schedule);
    }

    est.basis = pod(est.y_estimate, cfg.reduced_dim);
    est.box = estimate_reduced_box(est.y_estimate, est.basis);
    est.loosened = loosen(est.box, cfg.beta);
    est.limits = cfg.trim_from_estimate ? trim_limits_from_snapshots(est.y_estimate)
                                        : TrimLimits{cfg.trim_y_min, cfg.trim_y_max};

    // Diagnostic acceptance probe; uses this stage's stream so the estimate
    // stage stays self-contained.
    const Index probe = 500;
    try {
        const JointSet probe_set = sample_joint(est.loosened, space, est.basis, est.limits,
                                                probe, rng, /*max_attempts=*/probe * 1000,
                                                /*cache_lifted=*/false);
        est.probe_acceptance = probe_set.acceptance_rate;
    } catch (const NumericalError&) {
        est.probe_acceptance = 0.0;
    }
    return est;
}

JointSet build_pool(const ReducedBox& loosened_box, const ParameterSpace& space,
                    const ReducedBasis& basis, const TrimLimits& limits, Index pool_size,
                    Rng& rng) {
    return sample_joint(loosened_box, space, basis, limits, pool_size, rng,
                        /*max_attempts=*/0, /*cache_lifted=*/false);
}

std::vector<Index> select_greedy(const GprModel& estimator, const JointSet& pool,
                                 const InputNormalizer& normalizer,
                                 const std::vector<bool>& selected, Index delta_s) {
    require(static_cast<Index>(selected.size()) == pool.size(),
            "select_greedy: selection mask size mismatch");
    std::vector<Index> open;
    open.reserve(static_cast<std::size_t>(pool.size()));
    for (Index i = 0; i < pool.size(); ++i) {
        if (!selected[static_cast<std::size_t>(i)]) open.push_back(i);
    }
    if (static_cast<Index>(open.size()) < delta_s) {
        throw NumericalError("select_greedy: pool exhausted (" + std::to_string(open.size()) +
                             " unselected entries left, need " + std::to_string(delta_s) + ")");
    }

    Matrix joints(pool.y_r.rows() + pool.mu.rows(), static_cast<Index>(open.size()));
    for (std::size_t k = 0; k < open.size(); ++k) {
        joints.col(static_cast<Index>(k)) << pool.y_r.col(open[k]), pool.mu.col(open[k]);
    }
    const Vector scores = estimator.predict_batch(normalizer.normalize(joints));

    std::vector<Index> order(open.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + delta_s, order.end(),
                      [&](Index a, Index b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return open[static_cast<std::size_t>(a)] <
                                 open[static_cast<std::size_t>(b)];
                      });

    std::vector<Index> picked(static_cast<std::size_t>(delta_s));
    for (Index k = 0; k < delta_s; ++k) {
        picked[static_cast<std::size_t>(k)] = open[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

AcquireResult acquire(const FomModel& fom, const ReducedBasis& creation_basis,
                      const JointSet& pool, const std::vector<Index>& selection, double dt) {
    AcquireResult out;
    out.lifted.resize(fom.state_dim(), static_cast<Index>(selection.size()));
    out.refs.resize(fom.state_dim(), static_cast<Index>(selection.size()));
    for (std::size_t k = 0; k < selection.size(); ++k) {
        const Index i = selection[k];
        const Vector lifted = pool.has_lifted()
                                  ? Vector(pool.lifted.col(i))
                                  : creation_basis.reconstruct(Vector(pool.y_r.col(i)));
        out.lifted.col(static_cast<Index>(k)) = lifted;
        out.refs.col(static_cast<Index>(k)) = fom.step(lifted, pool.mu.col(i), dt);
    }
    return out;
}

ReducedBasis refresh_basis(const Matrix& y_estimate, const Matrix& train_refs, Index n) {
    if (train_refs.cols() == 0) return pod(y_estimate, n);
    require(train_refs.rows() == y_estimate.rows(), "refresh_basis: row mismatch");
    Matrix combined(y_estimate.rows(), y_estimate.cols() + train_refs.cols());
    combined.leftCols(y_estimate.cols()) = y_estimate;
    combined.rightCols(train_refs.cols()) = train_refs;
    return pod(combined, n);
}

namespace {

std::shared_ptr<const RomBase> default_trainer(const ReducedBasis& basis,
                                               const InputNormalizer& normalizer, double dt,
                                               const Matrix& joint_inputs,
                                               const Matrix& next_states,
                                               const TrainingConfig& cfg,
                                               TrainingHistory* history_out) {
    auto result = train_eenn(basis, normalizer, dt, joint_inputs, next_states, cfg);
    if (history_out) *history_out = result.history;
    return std::make_shared<EennRom>(std::move(result.rom));
}

}  // namespace

ActiveRunResult run_active_learning(const FomModel& fom, const ParameterSpace& space,
                                    const EstimateResult& estimate, const PacValidator& validator,
                                    const ActiveConfig& acfg, const TrainingConfig& tcfg,
                                    const StageSeeds& seeds, const IterationCallbacks& callbacks,
                                    const RomTrainer& trainer) {
    acfg.validate();
    tcfg.validate();
    const RomTrainer& train_rom = trainer ? trainer : RomTrainer(default_trainer);
    const double dt = fom.dt();
    const Index n = estimate.basis.dim();
    const InputNormalizer normalizer = make_normalizer(estimate.loosened, space);

    Rng pool_rng(seeds.pool);
    const JointSet pool = build_pool(estimate.loosened, space, estimate.basis, estimate.limits,
                                     acfg.pool_size, pool_rng);

    // Initial random increment (without replacement).
    std::vector<Index> all_indices(static_cast<std::size_t>(pool.size()));
    std::iota(all_indices.begin(), all_indices.end(), Index{0});
    pool_rng.shuffle(all_indices);
    std::vector<Index> selection(all_indices.begin(), all_indices.begin() + acfg.delta_s);
    std::sort(selection.begin(), selection.end());
    std::vector<bool> selected(static_cast<std::size_t>(pool.size()), false);
    for (Index i : selection) selected[static_cast<std::size_t>(i)] = true;

    Matrix train_lifted(fom.state_dim(), 0);
    Matrix train_mu(space.dim(), 0);
    Matrix train_refs(fom.state_dim(), 0);
    auto append_acquired = [&](const std::vector<Index>& picked) {
        const AcquireResult got = acquire(fom, estimate.basis, pool, picked, dt);
        const Index old = train_lifted.cols();
        const Index add = got.lifted.cols();
        train_lifted.conservativeResize(Eigen::NoChange, old + add);
        train_refs.conservativeResize(Eigen::NoChange, old + add);
        train_mu.conservativeResize(Eigen::NoChange, old + add);
        train_lifted.rightCols(add) = got.lifted;
        train_refs.rightCols(add) = got.refs;
        for (std::size_t k = 0; k < picked.size(); ++k) {
            train_mu.col(old + static_cast<Index>(k)) = pool.mu.col(picked[k]);
        }
    };
    append_acquired(selection);

    ActiveRunResult result;
    ReducedBasis basis = estimate.basis;
    std::vector<Index> cumulative = selection;
    double prev_tau_bar = 0.0;
    bool stopped = false;

    for (Index iteration = 1; iteration <= acfg.max_iterations && !stopped; ++iteration) {
        const auto tic = std::chrono::steady_clock::now();

        // Re-projection: stored full states against the current basis.
        const Matrix x_r = basis.project(train_lifted);
        const Matrix t_r = basis.project(train_refs);
        Matrix joint_inputs(n + space.dim(), x_r.cols());
        joint_inputs.topRows(n) = x_r;
        joint_inputs.bottomRows(space.dim()) = train_mu;

        TrainingConfig iter_cfg = tcfg;
        iter_cfg.seed = derive_seed(seeds.training, static_cast<std::uint64_t>(iteration));
        TrainingHistory history;
        const auto rom = train_rom(basis, normalizer, dt, joint_inputs, t_r, iter_cfg, &history);

        const PacReport report = evaluate(validator, *rom, acfg.tau_design);

        IterationRecord record;
        record.iteration = iteration;
        record.sample_count = train_refs.cols();
        record.one_minus_tau_bar = 1.0 - report.tau_bar;
        record.p_at_design = report.p_at_design;
        record.training_best_val_loss = history.best_val_loss;
        record.training_epochs = history.epochs;
        record.basis_sigma_max = basis.singular_values.size() ? basis.singular_values[0] : 0.0;
        record.basis_sigma_min_retained =
            basis.singular_values.size() >= n ? basis.singular_values[n - 1] : 0.0;
        record.basis_energy = basis.captured_energy();

        if (!result.best_rom || report.tau_bar < result.best_report.tau_bar) {
            result.best_rom = rom;
            result.best_report = report;
            result.best_iteration = iteration;
        }

        if (report.p_at_design >= 1.0) {
            result.history.stop_reason = StopReason::target_met;
            stopped = true;
        } else if (iteration >= 2 && std::abs(report.tau_bar - prev_tau_bar) < acfg.delta_tau_tol) {
            result.history.stop_reason = StopReason::improvement_stalled;
            stopped = true;
        } else if (iteration == acfg.max_iterations) {
            result.history.stop_reason = StopReason::max_iterations;
            stopped = true;
        }
        prev_tau_bar = report.tau_bar;

        if (!stopped) {
            const TuneResult tune = tune_hyperparams(validator.joint(), report.errors, normalizer);
            record.gpr_lengthscale = tune.params.lengthscale;
            const GprModel gpr = fit_gpr(validator.joint(), report.errors, tune.params, normalizer);

            const std::vector<Index> picked =
                select_greedy(gpr, pool, normalizer, selected, acfg.delta_s);
            for (Index i : picked) selected[static_cast<std::size_t>(i)] = true;
            cumulative.insert(cumulative.end(), picked.begin(), picked.end());
            append_acquired(picked);
            basis = refresh_basis(estimate.y_estimate, train_refs, n);
        }

        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
        result.history.records.push_back(record);
        if (callbacks.on_record) callbacks.on_record(record);
        if (callbacks.on_checkpoint) callbacks.on_checkpoint(iteration, *rom, report, cumulative);
    }

    return result;
}

ActiveRunResult run_active_learning(const FomModel& fom, const ParameterSpace& space,
                                    const SpacesConfig& scfg, const ActiveConfig& acfg,
                                    const PacDesign& design, const TrainingConfig& tcfg,
                                    std::uint64_t root_seed, const IterationCallbacks& callbacks,
                                    const RomTrainer& trainer) {
    const StageSeeds seeds = StageSeeds::from_root(root_seed);
    Rng estimate_rng(seeds.estimate);
    const EstimateResult estimate = estimate_spaces(fom, space, scfg, estimate_rng);
    Rng pac_rng(seeds.pac);
    const PacValidator validator = build_validator(space, estimate.loosened, estimate.limits,
                                                   estimate.basis, fom, design, pac_rng, seeds.pac);
    return run_active_learning(fom, space, estimate, validator, acfg, tcfg, seeds, callbacks,
                               trainer);
}

}  // namespace alrom
