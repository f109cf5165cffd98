#pragma once

#include "alrom/fom.hpp"
#include "alrom/rng.hpp"
#include "alrom/types.hpp"

namespace alrom {

/// Orthonormal reduced basis from a snapshot decomposition. Columns are
/// ordered by descending singular value and sign-fixed so the largest-
/// magnitude entry of each column is positive, which makes the basis (and
/// everything derived from it) reproducible.
struct ReducedBasis {
    Matrix V;                // N x n, orthonormal columns
    Vector singular_values;  // full spectrum of the source snapshot matrix

    Index full_dim() const { return V.rows(); }
    Index dim() const { return V.cols(); }

    Vector project(const Vector& y) const;
    Matrix project(const Matrix& Y) const;
    Vector reconstruct(const Vector& y_r) const;
    Matrix reconstruct(const Matrix& Y_r) const;

    /// Fraction of snapshot energy captured by the retained columns.
    double captured_energy() const;
};

/// Leading n left singular vectors of the snapshot matrix. Uses a direct SVD
/// for small problems and the Gram-matrix eigendecomposition on the cheaper
/// side for large ones, followed by a symmetric re-orthonormalization polish.
ReducedBasis pod(const Matrix& snapshots, Index n);

/// Per-POD-coordinate bounding box of a projected snapshot set.
struct ReducedBox {
    Vector lower;
    Vector upper;
    double beta = 0.0;  // expansion ratio already applied

    Index dim() const { return lower.size(); }
    Vector width() const { return upper - lower; }
    bool contains(const Vector& y_r, double tol = 0.0) const;
};

ReducedBox estimate_reduced_box(const Matrix& y_estimate, const ReducedBasis& basis);

/// Expand every side by beta * width; widths scale by (1 + 2 beta).
ReducedBox loosen(const ReducedBox& box, double beta);

/// Admissible range for entries of a lifted full state.
struct TrimLimits {
    double y_min;
    double y_max;
};

TrimLimits trim_limits_from_snapshots(const Matrix& snapshots);

/// True iff every entry of V * y_r lies strictly inside (y_min, y_max).
bool trim_accepts(const ReducedBasis& basis, const Vector& y_r, const TrimLimits& limits);

/// A batch of joint samples (reduced state + parameter vector), stored
/// column-wise. `lifted` holds V * y_r at the creation basis when caching
/// was requested, else it is empty.
struct JointSet {
    Matrix y_r;     // n x count
    Matrix mu;      // N_m x count
    Matrix lifted;  // N x count, or 0 x 0
    double acceptance_rate = 1.0;

    Index size() const { return y_r.cols(); }
    bool has_lifted() const { return lifted.cols() == y_r.cols() && lifted.rows() > 0; }

    /// Stacked [y_r; mu] inputs, the GP/network input layout.
    Matrix joint() const;
};

/// One joint sample; `lifted` may be empty when it was never cached.
struct JointSample {
    Vector y_r;
    Vector mu;
    Vector lifted;
};

/// Rejection-sample `count` joint points: y_r uniform over the (loosened)
/// box filtered by the trim conditions, mu uniform over the parameter box.
/// `max_attempts` = 0 selects the default budget of 1000 * count; exhausting
/// the budget raises NumericalError carrying the observed acceptance rate.
JointSet sample_joint(const ReducedBox& box, const ParameterSpace& space,
                      const ReducedBasis& basis, const TrimLimits& limits, Index count,
                      Rng& rng, Index max_attempts = 0, bool cache_lifted = true);

}  // namespace alrom
