#pragma once

#include <memory>

#include "alrom/fom.hpp"
#include "alrom/rom.hpp"
#include "alrom/rng.hpp"
#include "alrom/validator.hpp"

namespace alrom {

struct BaselineResult {
    std::shared_ptr<const EennRom> rom;
    PacReport report;
    Index training_pairs = 0;
    TrainingHistory history;
    double trajectory_snapshots = 0;
};

/// Conventional trajectory-sampling workflow: m DPS trajectories of K steps
/// give m*K consecutive-pair training samples; the POD basis is built from
/// those trajectory states plus y_estimate; one time stepper is trained with
/// the given configuration and scored on the shared PAC validator.
/// Parameters for the pair (y_i, y_{i+1}) are the schedule at the left
/// endpoint t_i, matching the stepper's update convention.
BaselineResult run_conventional(const FomModel& fom, const ParameterSpace& space, Index m_ivps,
                                Index steps, Index reduced_dim, const TrainingConfig& tcfg,
                                const PacValidator& validator, const Matrix& y_estimate,
                                double tau_design, Rng& rng);

}  // namespace alrom
