#include "alrom/baseline.hpp"

#include "alrom/reduction.hpp"

namespace alrom {

BaselineResult run_conventional(const FomModel& fom, const ParameterSpace& space, Index m_ivps,
                                Index steps, Index reduced_dim, const TrainingConfig& tcfg,
                                const PacValidator& validator, const Matrix& y_estimate,
                                double tau_design, Rng& rng) {
    require(m_ivps >= 1, "run_conventional: need at least one trajectory");
    require(steps == fom.step_count(),
            "run_conventional: step count must match the model's time grid");

    const auto times = fom.time_grid();
    const Index columns_per_ivp = steps + 1;
    const Index pairs = m_ivps * steps;

    Matrix states(fom.state_dim(), m_ivps * columns_per_ivp);
    Matrix pair_mu(space.dim(), pairs);
    std::vector<Index> pair_in(static_cast<std::size_t>(pairs));
    std::vector<Index> pair_out(static_cast<std::size_t>(pairs));

    Index pair_at = 0;
    for (Index j = 0; j < m_ivps; ++j) {
        const ParameterSchedule schedule = dps_schedule(space, steps, times, rng);
        const Matrix traj = fom.solve_ivp(schedule);
        states.middleCols(j * columns_per_ivp, columns_per_ivp) = traj;
        for (Index i = 0; i < steps; ++i, ++pair_at) {
            pair_in[static_cast<std::size_t>(pair_at)] = j * columns_per_ivp + i;
            pair_out[static_cast<std::size_t>(pair_at)] = j * columns_per_ivp + i + 1;
            pair_mu.col(pair_at) = schedule(times[static_cast<std::size_t>(i)]);
        }
    }

    Matrix snapshots(fom.state_dim(), states.cols() + y_estimate.cols());
    snapshots.leftCols(states.cols()) = states;
    snapshots.rightCols(y_estimate.cols()) = y_estimate;
    const ReducedBasis basis = pod(snapshots, reduced_dim);

    const Matrix reduced_states = basis.project(states);
    Matrix joint_inputs(reduced_dim + space.dim(), pairs);
    Matrix next_states(reduced_dim, pairs);
    for (Index k = 0; k < pairs; ++k) {
        joint_inputs.col(k).head(reduced_dim) =
            reduced_states.col(pair_in[static_cast<std::size_t>(k)]);
        joint_inputs.col(k).tail(space.dim()) = pair_mu.col(k);
        next_states.col(k) = reduced_states.col(pair_out[static_cast<std::size_t>(k)]);
    }

    // Normalize over the box the trajectory data actually occupies.
    ReducedBox data_box;
    data_box.lower = joint_inputs.topRows(reduced_dim).rowwise().minCoeff();
    data_box.upper = joint_inputs.topRows(reduced_dim).rowwise().maxCoeff();
    const InputNormalizer normalizer = make_normalizer(data_box, space);

    TrainingConfig cfg = tcfg;
    cfg.seed = derive_seed(tcfg.seed, std::uint64_t{0x636f6e76});  // baseline stream
    auto trained = train_eenn(basis, normalizer, fom.dt(), joint_inputs, next_states, cfg);

    BaselineResult result;
    result.rom = std::make_shared<EennRom>(std::move(trained.rom));
    result.history = std::move(trained.history);
    result.training_pairs = pairs;
    result.trajectory_snapshots = static_cast<double>(states.cols());
    result.report = evaluate(validator, *result.rom, tau_design);
    return result;
}

}  // namespace alrom
