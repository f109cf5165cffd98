#pragma once

#include "alrom/rom.hpp"
#include "alrom/types.hpp"

namespace alrom {

struct RbfKernelParams {
    double sigma_f = 1.0;     // amplitude
    double lengthscale = 1.0; // on normalized inputs

    void validate() const;
};

/// sigma_f^2 * exp(-||a - b||^2 / (2 l^2))
double rbf_kernel(const Vector& a, const Vector& b, const RbfKernelParams& params);

/// Noise-free Gaussian-process interpolator of scalar errors over normalized
/// joint inputs. Fitting factorizes K + jitter*I once; prediction is a
/// cross-covariance dot product with the stored weights. Immutable after fit.
class GprModel {
public:
    GprModel(RbfKernelParams params, Matrix train_inputs, Vector alpha, double jitter)
        : params_(params), train_inputs_(std::move(train_inputs)), alpha_(std::move(alpha)),
          jitter_(jitter) {}

    const RbfKernelParams& params() const { return params_; }
    double jitter() const { return jitter_; }
    Index train_count() const { return train_inputs_.cols(); }

    /// Point prediction; input must already be normalized.
    double predict(const Vector& j_normalized) const;

    /// Columnwise prediction for a batch of normalized inputs.
    Vector predict_batch(const Matrix& j_normalized) const;

private:
    RbfKernelParams params_;
    Matrix train_inputs_;  // d x s, normalized
    Vector alpha_;         // (K + jitter I)^{-1} e
    double jitter_;
};

/// Interpolate `errors` at the raw joint inputs (columns), normalized with
/// `normalizer`. The kernel diagonal starts at jitter 1e-10 and escalates
/// tenfold up to 1e-4 before failing.
GprModel fit_gpr(const Matrix& joint_inputs, const Vector& errors,
                 const RbfKernelParams& params, const InputNormalizer& normalizer);

struct TuneResult {
    RbfKernelParams params;
    bool degenerate = false;      // zero-variance errors
    double best_log_marginal = 0; // meaningless when degenerate
};

/// sigma_f = std(errors); lengthscale picked from a 20-point logarithmic
/// grid over [0.05, 5] maximizing the log marginal likelihood.
TuneResult tune_hyperparams(const Matrix& joint_inputs, const Vector& errors,
                            const InputNormalizer& normalizer);

/// The lengthscale grid used by tune_hyperparams.
std::vector<double> lengthscale_grid();

}  // namespace alrom
