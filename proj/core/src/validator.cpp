#include "alrom/validator.hpp"

#include <cmath>

namespace alrom {

Index required_samples(double epsilon, double sigma) {
    require(epsilon > 0.0 && epsilon < 1.0, "required_samples: epsilon must be in (0,1)");
    require(sigma > 0.0 && sigma < 1.0, "required_samples: sigma must be in (0,1)");
    const double bound = std::log(2.0 / sigma) / (2.0 * epsilon * epsilon);
    return std::max<Index>(1, static_cast<Index>(std::ceil(bound)));
}

void PacDesign::validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "pac.epsilon must be in (0,1)");
    require(sigma > 0.0 && sigma < 1.0, "pac.sigma must be in (0,1)");
    if (s > 0 && s < required_samples(epsilon, sigma)) {
        throw ConfigError("pac.s is below the required sample count " +
                          std::to_string(required_samples(epsilon, sigma)));
    }
}

Matrix PacValidator::joint() const {
    Matrix J(y_r0.rows() + mu.rows(), size());
    J.topRows(y_r0.rows()) = y_r0;
    J.bottomRows(mu.rows()) = mu;
    return J;
}

PacValidator build_validator(const ParameterSpace& space, const ReducedBox& loosened_box,
                             const TrimLimits& limits, const ReducedBasis& basis,
                             const FomModel& fom, const PacDesign& design, Rng& rng,
                             std::uint64_t seed_tag) {
    design.validate();
    const Index s = design.s > 0 ? design.s : required_samples(design.epsilon, design.sigma);

    JointSet tests = sample_joint(loosened_box, space, basis, limits, s, rng,
                                  /*max_attempts=*/0, /*cache_lifted=*/true);

    PacValidator v;
    v.design = design;
    v.design.s = s;
    v.seed = seed_tag;
    v.acceptance_rate = tests.acceptance_rate;
    v.y_r0 = std::move(tests.y_r);
    v.mu = std::move(tests.mu);
    v.lifted = std::move(tests.lifted);

    const double h = fom.dt();
    v.refs.resize(fom.state_dim(), s);
    for (Index i = 0; i < s; ++i) {
        v.refs.col(i) = fom.step(v.lifted.col(i), v.mu.col(i), h);
        const double norm = v.refs.col(i).norm();
        if (!std::isfinite(norm) || norm == 0.0) {
            throw NumericalError("build_validator: degenerate reference output at test " +
                                 std::to_string(i));
        }
    }
    return v;
}

double observed_confidence(const Vector& errors, double tau) {
    require(errors.size() >= 1, "observed_confidence: empty error vector");
    const Index hits = (errors.array() <= tau).count();
    return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double best_tau(const Vector& errors) {
    require(errors.size() >= 1, "best_tau: empty error vector");
    return errors.maxCoeff();
}

PacReport evaluate(const PacValidator& validator, const RomBase& rom, double tau_design) {
    require(validator.size() >= 1, "evaluate: empty validator");
    require(tau_design > 0.0 && tau_design < 1.0, "evaluate: tau_design must be in (0,1)");
    require(validator.lifted.rows() == rom.basis().full_dim(),
            "evaluate: validator/rom state dimension mismatch");

    const Matrix y_r = rom.basis().project(validator.lifted);
    const Matrix predicted = rom.basis().reconstruct(rom.step_batch(y_r, validator.mu));

    PacReport report;
    report.tau_design = tau_design;
    report.eta = 1.0 - validator.design.epsilon;
    report.errors.resize(validator.size());
    for (Index i = 0; i < validator.size(); ++i) {
        const double ref_norm = validator.refs.col(i).norm();
        report.errors[i] = (predicted.col(i) - validator.refs.col(i)).norm() / ref_norm;
    }
    report.p_at_design = observed_confidence(report.errors, tau_design);
    report.tau_bar = best_tau(report.errors);
    return report;
}

}  // namespace alrom
