#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "alrom/estimator.hpp"
#include "alrom/fom.hpp"
#include "alrom/reduction.hpp"
#include "alrom/rom.hpp"
#include "alrom/rng.hpp"
#include "alrom/validator.hpp"

namespace alrom {

struct ActiveConfig {
    Index pool_size = 40000;
    Index delta_s = 500;          // snapshot increment per iteration
    double tau_design = 0.01;     // target one-step error level
    double delta_tau_tol = 1e-4;  // improvement tolerance on tau-bar
    Index max_iterations = 20;

    void validate() const;
};

/// How to size and shape the reduced-space estimation stage.
struct SpacesConfig {
    Index estimate_ivps = 20;  // SPS trajectories feeding Y_estimate
    Index reduced_dim = 20;
    double beta = 0.1;  // expansion ratio
    bool trim_from_estimate = true;
    double trim_y_min = 0.0;  // used when trim_from_estimate is false
    double trim_y_max = 0.0;

    void validate() const;
};

/// Output of the reduced-state-space estimation stage (the run's coordinate
/// frame: everything downstream samples in these bounds).
struct EstimateResult {
    Matrix y_estimate;       // N x m(K+1) snapshot matrix
    ReducedBasis basis;      // initial basis, also the joint-space frame
    ReducedBox box;          // raw per-coordinate bounds
    ReducedBox loosened;     // box expanded by beta
    TrimLimits limits;
    double probe_acceptance = 1.0;  // trim acceptance measured on a probe batch
};

EstimateResult estimate_spaces(const FomModel& fom, const ParameterSpace& space,
                               const SpacesConfig& cfg, Rng& rng);

struct IterationRecord {
    Index iteration = 0;     // 1-based
    Index sample_count = 0;  // cumulative = iteration * delta_s
    double one_minus_tau_bar = 0.0;
    double p_at_design = 0.0;
    double training_best_val_loss = 0.0;
    Index training_epochs = 0;
    double basis_sigma_max = 0.0;
    double basis_sigma_min_retained = 0.0;
    double basis_energy = 0.0;
    double gpr_lengthscale = 0.0;
    double wall_seconds = 0.0;
};

enum class StopReason { target_met, improvement_stalled, max_iterations };
std::string to_string(StopReason reason);

struct RunHistory {
    std::vector<IterationRecord> records;
    StopReason stop_reason = StopReason::max_iterations;
};

struct ActiveRunResult {
    std::shared_ptr<const RomBase> best_rom;
    PacReport best_report;
    Index best_iteration = 0;
    RunHistory history;
};

/// Candidate pool over the joint space. Lifted states are not cached (the
/// pool is large); acquisition lifts selected entries through the creation
/// basis on demand, which is bit-identical to caching.
JointSet build_pool(const ReducedBox& loosened_box, const ParameterSpace& space,
                    const ReducedBasis& basis, const TrimLimits& limits, Index pool_size,
                    Rng& rng);

/// Indices of the delta_s largest predicted errors among unselected pool
/// entries; ties broken toward the lower index.
std::vector<Index> select_greedy(const GprModel& estimator, const JointSet& pool,
                                 const InputNormalizer& normalizer,
                                 const std::vector<bool>& selected, Index delta_s);

struct AcquireResult {
    Matrix lifted;  // N x k inputs (creation-basis lifts)
    Matrix refs;    // N x k one-step outputs
};

/// One-step reference outputs for the chosen pool entries.
AcquireResult acquire(const FomModel& fom, const ReducedBasis& creation_basis,
                      const JointSet& pool, const std::vector<Index>& selection, double dt);

/// New basis over the estimation snapshots plus every acquired output.
ReducedBasis refresh_basis(const Matrix& y_estimate, const Matrix& train_refs, Index n);

/// Pluggable ROM construction step, so oracle ROMs can be injected in tests.
/// Receives the current basis, the shared input normalizer, the step size,
/// the re-projected joint training inputs and next states, and the training
/// configuration for this iteration.
using RomTrainer = std::function<std::shared_ptr<const RomBase>(
    const ReducedBasis& basis, const InputNormalizer& normalizer, double dt,
    const Matrix& joint_inputs, const Matrix& next_states, const TrainingConfig& cfg,
    TrainingHistory* history_out)>;

struct IterationCallbacks {
    std::function<void(const IterationRecord&)> on_record;
    std::function<void(Index iteration, const RomBase& rom, const PacReport& report,
                       const std::vector<Index>& cumulative_selection)>
        on_checkpoint;
};

/// The full driver: greedy one-step acquisition from a fixed pool, fresh
/// retraining per iteration, PAC evaluation, GP-ranked extension, basis
/// refresh, and dual stopping criteria (target confidence reached, or
/// tau-bar improvement below tolerance from iteration 2 on). Returns the
/// best ROM by certified accuracy across iterations.
ActiveRunResult run_active_learning(const FomModel& fom, const ParameterSpace& space,
                                    const EstimateResult& estimate, const PacValidator& validator,
                                    const ActiveConfig& acfg, const TrainingConfig& tcfg,
                                    const StageSeeds& seeds,
                                    const IterationCallbacks& callbacks = {},
                                    const RomTrainer& trainer = {});

/// Convenience overload running estimation and validator construction
/// internally from the stage seeds.
ActiveRunResult run_active_learning(const FomModel& fom, const ParameterSpace& space,
                                    const SpacesConfig& scfg, const ActiveConfig& acfg,
                                    const PacDesign& design, const TrainingConfig& tcfg,
                                    std::uint64_t root_seed,
                                    const IterationCallbacks& callbacks = {},
                                    const RomTrainer& trainer = {});

}  // namespace alrom
