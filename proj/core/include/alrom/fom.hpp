#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "alrom/rng.hpp"
#include "alrom/types.hpp"

namespace alrom {

struct ReducedBasis;  // reduction.hpp

/// Hyper-cubic parameter box. Degenerate sides (lower == upper) are allowed
/// and sample to the single admissible value.
class ParameterSpace {
public:
    ParameterSpace(Vector lower, Vector upper);

    Index dim() const { return lower_.size(); }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }

    Vector sample(Rng& rng) const;
    bool contains(const Vector& mu, double tol = 0.0) const;

private:
    Vector lower_;
    Vector upper_;
};

/// Piecewise-linear parameter trajectory over strictly increasing knot times.
/// Evaluation is defined on [first knot, last knot] (plus a relative slack of
/// 1e-9 to absorb time-grid roundoff).
class ParameterSchedule {
public:
    ParameterSchedule(std::vector<double> times, Matrix knot_values);

    static ParameterSchedule constant(const Vector& mu, double t0, double t1);

    Vector operator()(double t) const;

    Index knot_count() const { return static_cast<Index>(times_.size()); }
    Index parameter_dim() const { return values_.rows(); }
    const std::vector<double>& times() const { return times_; }
    const Matrix& knot_values() const { return values_; }
    double start_time() const { return times_.front(); }
    double end_time() const { return times_.back(); }
    bool covers(double t0, double t1) const;

private:
    std::vector<double> times_;
    Matrix values_;  // dim x knots
};

struct HeatModelConfig {
    int grid = 50;            // cells per side
    double kx = 1.0;          // conductivities
    double ky = 1.0;
    double side = 10.0;       // square domain edge length
    double t0 = 0.0;
    double t_end = 2.0;
    int steps = 100;          // K
    double initial_temperature = 20.0;

    double dt() const { return (t_end - t0) / steps; }
    double dx() const { return side / grid; }
    void validate() const;
};

/// Full-order model: a time stepper over a high-dimensional state, driven by
/// a parameter vector. Implementations must be deterministic and safe for
/// concurrent calls on a const instance.
class FomModel {
public:
    virtual ~FomModel() = default;

    virtual Index state_dim() const = 0;
    virtual Index parameter_dim() const = 0;
    virtual double start_time() const = 0;
    virtual double end_time() const = 0;
    virtual Index step_count() const = 0;
    virtual Vector initial_state() const = 0;

    /// Advance one step of size dt under parameters mu. dt == 0 is the
    /// identity map.
    virtual Vector step(const Vector& state, const Vector& mu, double dt) const = 0;

    double dt() const { return (end_time() - start_time()) / static_cast<double>(step_count()); }

    /// Uniform time grid t_0 .. t_K.
    std::vector<double> time_grid() const;

    /// Roll the model from its initial state under the schedule; parameters
    /// for the step t_i -> t_{i+1} are evaluated at the left endpoint t_i,
    /// matching the one-step training-pair convention. Returns all K+1
    /// states as columns.
    virtual Matrix solve_ivp(const ParameterSchedule& schedule) const;
};

/// Static Parameter Sampling: m i.i.d. uniform draws from the box.
std::vector<Vector> sps_sample(const ParameterSpace& space, Index m, Rng& rng);

/// Dynamic Parameter Sampling: one uniform knot per grid time, interpolated
/// linearly in between.
ParameterSchedule dps_schedule(const ParameterSpace& space, Index steps,
                               const std::vector<double>& times, Rng& rng);

/// One-step simulation started from a reduced state: step(V * y_r, mu, dt).
Vector lift_and_step(const FomModel& fom, const ReducedBasis& basis, const Vector& y_r,
                     const Vector& mu, double dt);

/// 2-D linear heat conduction on a uniform cell grid with one Dirichlet wall
/// temperature per side, advanced by backward Euler.
///
/// State layout: row-major over cell centers, index = iy * grid + ix. Every
/// cell is an unknown of the 5-point implicit system; the wall temperatures
/// live on the domain faces and couple in through eliminated ghost cells
/// (wall at distance dx/2 from the first cell center). The implicit operator
/// for the configured dt is factorized once at construction and shared
/// across calls.
class Heat2dModel final : public FomModel {
public:
    explicit Heat2dModel(HeatModelConfig config);

    Index state_dim() const override { return static_cast<Index>(cfg_.grid) * cfg_.grid; }
    Index parameter_dim() const override { return 4; }  // left, right, down, up
    double start_time() const override { return cfg_.t0; }
    double end_time() const override { return cfg_.t_end; }
    Index step_count() const override { return cfg_.steps; }
    Vector initial_state() const override;

    Vector step(const Vector& state, const Vector& bc, double dt) const override;

    const HeatModelConfig& config() const { return cfg_; }
    Index cell_index(int ix, int iy) const { return static_cast<Index>(iy) * cfg_.grid + ix; }

private:
    struct ImplicitSystem {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
        double dt = 0.0;
    };

    std::unique_ptr<ImplicitSystem> build_system(double dt) const;
    Vector step_with(const ImplicitSystem& sys, const Vector& state, const Vector& bc) const;

    HeatModelConfig cfg_;
    std::unique_ptr<ImplicitSystem> default_system_;
};

}  // namespace alrom
