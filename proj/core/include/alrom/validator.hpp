#pragma once

#include <cstdint>

#include "alrom/fom.hpp"
#include "alrom/reduction.hpp"
#include "alrom/rom.hpp"
#include "alrom/types.hpp"

namespace alrom {

/// Two-sided Hoeffding sample count: ceil(ln(2/sigma) / (2 epsilon^2)),
/// never less than 1.
Index required_samples(double epsilon, double sigma);

struct PacDesign {
    double epsilon = 0.03;  // validator accuracy gap
    double sigma = 0.01;    // validator risk
    Index s = 0;            // test count; 0 = use required_samples(epsilon, sigma)

    void validate() const;
};

/// Frozen test set: joint inputs with their lifted full states (so the
/// validator survives basis refreshes without re-running the model) and the
/// one-step reference outputs. Immutable after build.
struct PacValidator {
    PacDesign design;
    Matrix y_r0;    // n0 x s, creation-basis coordinates
    Matrix mu;      // N_m x s
    Matrix lifted;  // N x s
    Matrix refs;    // N x s
    double acceptance_rate = 1.0;
    std::uint64_t seed = 0;

    Index size() const { return refs.cols(); }

    /// Stacked [y_r0; mu] joint inputs in creation coordinates (the GP
    /// estimator's training locations).
    Matrix joint() const;
};

PacValidator build_validator(const ParameterSpace& space, const ReducedBox& loosened_box,
                             const TrimLimits& limits, const ReducedBasis& basis,
                             const FomModel& fom, const PacDesign& design, Rng& rng,
                             std::uint64_t seed_tag = 0);

/// Fraction of errors <= tau.
double observed_confidence(const Vector& errors, double tau);

/// Smallest tau with observed confidence 1, i.e. max(errors).
double best_tau(const Vector& errors);

struct PacReport {
    Vector errors;
    double tau_design = 0.0;
    double p_at_design = 0.0;   // observed confidence at tau_design
    double tau_bar = 0.0;       // best certified error level
    double eta = 0.0;           // certified confidence 1 - epsilon
};

/// Run every validator test through the ROM: inputs are re-projected onto
/// the ROM's current basis from the cached lifted states, predictions are
/// lifted back, and the per-test full-space relative errors are reported.
PacReport evaluate(const PacValidator& validator, const RomBase& rom, double tau_design);

}  // namespace alrom
