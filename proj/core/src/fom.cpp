#include "alrom/fom.hpp"

#include <algorithm>
#include <cmath>

#include "alrom/reduction.hpp"

namespace alrom {

ParameterSpace::ParameterSpace(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    require(lower_.size() == upper_.size(), "parameter space: bound sizes differ");
    require(lower_.size() >= 1, "parameter space: dim must be >= 1");
    for (Index i = 0; i < lower_.size(); ++i) {
        require(lower_[i] <= upper_[i], "parameter space: lower > upper at component " +
                                            std::to_string(i));
    }
}

Vector ParameterSpace::sample(Rng& rng) const {
    Vector mu(dim());
    for (Index i = 0; i < dim(); ++i) mu[i] = rng.uniform(lower_[i], upper_[i]);
    return mu;
}

bool ParameterSpace::contains(const Vector& mu, double tol) const {
    if (mu.size() != dim()) return false;
    for (Index i = 0; i < dim(); ++i) {
        if (mu[i] < lower_[i] - tol || mu[i] > upper_[i] + tol) return false;
    }
    return true;
}

ParameterSchedule::ParameterSchedule(std::vector<double> times, Matrix knot_values)
    : times_(std::move(times)), values_(std::move(knot_values)) {
    require(!times_.empty(), "schedule: no knots");
    require(values_.cols() == static_cast<Index>(times_.size()),
            "schedule: knot count mismatch");
    for (std::size_t i = 1; i < times_.size(); ++i) {
        require(times_[i] > times_[i - 1], "schedule: knot times must strictly increase");
    }
}

ParameterSchedule ParameterSchedule::constant(const Vector& mu, double t0, double t1) {
    require(t1 > t0, "schedule: empty time range");
    Matrix values(mu.size(), 2);
    values.col(0) = mu;
    values.col(1) = mu;
    return ParameterSchedule({t0, t1}, std::move(values));
}

Vector ParameterSchedule::operator()(double t) const {
    const double span = std::max(1.0, std::abs(times_.back() - times_.front()));
    const double slack = 1e-9 * span;
    require(t >= times_.front() - slack && t <= times_.back() + slack,
            "schedule: evaluation time outside knot range");
    t = std::clamp(t, times_.front(), times_.back());

    const auto hi = std::upper_bound(times_.begin(), times_.end(), t);
    if (hi == times_.begin()) return values_.col(0);
    if (hi == times_.end()) return values_.col(values_.cols() - 1);
    const Index j = static_cast<Index>(hi - times_.begin());
    const double t0 = times_[j - 1], t1 = times_[j];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * values_.col(j - 1) + w * values_.col(j);
}

bool ParameterSchedule::covers(double t0, double t1) const {
    const double slack = 1e-9 * std::max(1.0, std::abs(t1 - t0));
    return times_.front() <= t0 + slack && times_.back() >= t1 - slack;
}

void HeatModelConfig::validate() const {
    if (grid < 2) throw ConfigError("fom.grid must be >= 2");
    if (steps < 1) throw ConfigError("fom.steps must be >= 1");
    if (!(t_end > t0)) throw ConfigError("fom.t_end must exceed fom.t0");
    if (!(side > 0)) throw ConfigError("fom.side must be positive");
    if (!(kx > 0) || !(ky > 0)) throw ConfigError("fom conductivities must be positive");
}

std::vector<double> FomModel::time_grid() const {
    const Index k = step_count();
    std::vector<double> t(static_cast<std::size_t>(k) + 1);
    for (Index i = 0; i <= k; ++i) {
        t[static_cast<std::size_t>(i)] =
            start_time() + (end_time() - start_time()) * static_cast<double>(i) /
                               static_cast<double>(k);
    }
    return t;
}

Matrix FomModel::solve_ivp(const ParameterSchedule& schedule) const {
    require(schedule.covers(start_time(), end_time()), "solve_ivp: schedule does not cover the time grid");
    const auto times = time_grid();
    const double h = dt();
    Matrix states(state_dim(), step_count() + 1);
    states.col(0) = initial_state();
    for (Index i = 0; i < step_count(); ++i) {
        states.col(i + 1) = step(states.col(i), schedule(times[static_cast<std::size_t>(i)]), h);
    }
    return states;
}

std::vector<Vector> sps_sample(const ParameterSpace& space, Index m, Rng& rng) {
    require(m >= 0, "sps_sample: negative count");
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) out.push_back(space.sample(rng));
    return out;
}

ParameterSchedule dps_schedule(const ParameterSpace& space, Index steps,
                               const std::vector<double>& times, Rng& rng) {
    require(steps >= 1, "dps_schedule: steps must be >= 1");
    require(static_cast<Index>(times.size()) == steps + 1, "dps_schedule: need steps+1 times");
    Matrix knots(space.dim(), steps + 1);
    for (Index j = 0; j <= steps; ++j) knots.col(j) = space.sample(rng);
    return ParameterSchedule(times, std::move(knots));
}

Vector lift_and_step(const FomModel& fom, const ReducedBasis& basis, const Vector& y_r,
                     const Vector& mu, double dt) {
    return fom.step(basis.reconstruct(y_r), mu, dt);
}

Heat2dModel::Heat2dModel(HeatModelConfig config) : cfg_(config) {
    cfg_.validate();
    default_system_ = build_system(cfg_.dt());
}

Vector Heat2dModel::initial_state() const {
    return Vector::Constant(state_dim(), cfg_.initial_temperature);
}

std::unique_ptr<Heat2dModel::ImplicitSystem> Heat2dModel::build_system(double dt) const {
    // Backward Euler on all grid^2 cell averages. Wall temperatures sit on
    // the domain faces and enter through eliminated ghost cells, so a
    // wall-adjacent cell sees the wall at distance dx/2 (coefficient 2a).
    const int g = cfg_.grid;
    auto sys = std::make_unique<ImplicitSystem>();
    sys->dt = dt;

    const double h2 = cfg_.dx() * cfg_.dx();
    const double ax = dt * cfg_.kx / h2;
    const double ay = dt * cfg_.ky / h2;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(5) * g * g);
    for (int iy = 0; iy < g; ++iy) {
        for (int ix = 0; ix < g; ++ix) {
            const int q = static_cast<int>(cell_index(ix, iy));
            double diag = 1.0;
            if (ix > 0) {
                trip.emplace_back(q, static_cast<int>(cell_index(ix - 1, iy)), -ax);
                diag += ax;
            } else {
                diag += 2.0 * ax;
            }
            if (ix < g - 1) {
                trip.emplace_back(q, static_cast<int>(cell_index(ix + 1, iy)), -ax);
                diag += ax;
            } else {
                diag += 2.0 * ax;
            }
            if (iy > 0) {
                trip.emplace_back(q, static_cast<int>(cell_index(ix, iy - 1)), -ay);
                diag += ay;
            } else {
                diag += 2.0 * ay;
            }
            if (iy < g - 1) {
                trip.emplace_back(q, static_cast<int>(cell_index(ix, iy + 1)), -ay);
                diag += ay;
            } else {
                diag += 2.0 * ay;
            }
            trip.emplace_back(q, q, diag);
        }
    }
    Eigen::SparseMatrix<double> op(g * g, g * g);
    op.setFromTriplets(trip.begin(), trip.end());
    sys->solver.compute(op);
    if (sys->solver.info() != Eigen::Success) {
        throw NumericalError("heat2d: implicit operator factorization failed");
    }
    return sys;
}

Vector Heat2dModel::step_with(const ImplicitSystem& sys, const Vector& state,
                              const Vector& bc) const {
    const int g = cfg_.grid;
    const double h2 = cfg_.dx() * cfg_.dx();
    const double ax = sys.dt * cfg_.kx / h2;
    const double ay = sys.dt * cfg_.ky / h2;
    const double t_left = bc[0], t_right = bc[1], t_down = bc[2], t_up = bc[3];

    Vector rhs = state;
    for (int i = 0; i < g; ++i) {
        rhs[cell_index(0, i)] += 2.0 * ax * t_left;
        rhs[cell_index(g - 1, i)] += 2.0 * ax * t_right;
        rhs[cell_index(i, 0)] += 2.0 * ay * t_down;
        rhs[cell_index(i, g - 1)] += 2.0 * ay * t_up;
    }
    Vector out = sys.solver.solve(rhs);
    if (sys.solver.info() != Eigen::Success) {
        throw NumericalError("heat2d: implicit solve failed");
    }
    return out;
}

Vector Heat2dModel::step(const Vector& state, const Vector& bc, double dt) const {
    require(state.size() == state_dim(), "heat2d: state size mismatch");
    require(bc.size() == 4, "heat2d: expected 4 wall temperatures");
    if (!state.allFinite() || !bc.allFinite()) {
        throw NumericalError("heat2d: non-finite input");
    }
    require(dt >= 0.0, "heat2d: negative dt");
    if (dt == 0.0) return state;

    if (dt == default_system_->dt) return step_with(*default_system_, state, bc);
    const auto sys = build_system(dt);
    return step_with(*sys, state, bc);
}

}  // namespace alrom
