#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "alrom/active.hpp"
#include "alrom/baseline.hpp"

using namespace alrom;

namespace {

struct SmallProblem {
    HeatModelConfig cfg;
    std::unique_ptr<Heat2dModel> fom;
    std::unique_ptr<ParameterSpace> space;
    EstimateResult est;

    explicit SmallProblem(int grid = 12, int steps = 20, Index reduced_dim = 8) {
        cfg.grid = grid;
        cfg.steps = steps;
        fom = std::make_unique<Heat2dModel>(cfg);
        Vector lo(4), hi(4);
        lo << 20, 20, 20, 20;
        hi << 1000, 1000, 1000, 1000;
        space = std::make_unique<ParameterSpace>(lo, hi);

        SpacesConfig scfg;
        scfg.estimate_ivps = 4;
        scfg.reduced_dim = reduced_dim;
        scfg.beta = 0.1;
        Rng rng(5);
        est = estimate_spaces(*fom, *space, scfg, rng);
    }
};

TrainingConfig tiny_training() {
    TrainingConfig tcfg;
    tcfg.max_epochs = 40;
    tcfg.batch_size = 32;
    tcfg.hidden_sizes = {16};
    tcfg.early_stop_patience = 15;
    return tcfg;
}

}  // namespace

TEST_CASE("estimate_spaces: box bounds projections, limits bound snapshots") {
    SmallProblem problem;
    const auto& est = problem.est;

    CHECK(est.y_estimate.cols() == 4 * 21);
    const Matrix projected = est.basis.project(est.y_estimate);
    for (Index j = 0; j < projected.cols(); ++j) {
        CHECK(est.box.contains(projected.col(j), 1e-9));
        CHECK(est.loosened.contains(projected.col(j), 1e-9));
    }
    CHECK(est.limits.y_min == est.y_estimate.minCoeff());
    CHECK(est.limits.y_max == est.y_estimate.maxCoeff());
    CHECK((est.loosened.width() - 1.2 * est.box.width()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("build_pool: trim postcondition and determinism") {
    SmallProblem problem;
    Rng a(11), b(11);
    const JointSet p1 = build_pool(problem.est.loosened, *problem.space, problem.est.basis,
                                   problem.est.limits, 300, a);
    const JointSet p2 = build_pool(problem.est.loosened, *problem.space, problem.est.basis,
                                   problem.est.limits, 300, b);
    CHECK(p1.y_r == p2.y_r);
    CHECK(p1.mu == p2.mu);
    CHECK_FALSE(p1.has_lifted());
    for (Index i = 0; i < p1.size(); ++i) {
        CHECK(trim_accepts(problem.est.basis, p1.y_r.col(i), problem.est.limits));
        CHECK(problem.space->contains(p1.mu.col(i)));
    }
}

TEST_CASE("select_greedy: known ranking, exhaustion, sort oracle") {
    // Hand-built pool along one reduced coordinate; a GP interpolating
    // e(x) = x scores pool entries in index order.
    const Index count = 100;
    JointSet pool;
    pool.y_r.resize(1, count);
    pool.mu.resize(1, count);
    for (Index i = 0; i < count; ++i) {
        pool.y_r(0, i) = static_cast<double>(i) / (count - 1);
        pool.mu(0, i) = 0.5;
    }
    const InputNormalizer norm =
        make_normalizer(Vector(Vector::Zero(2)), Vector(Vector::Ones(2)));
    Vector errors(count);
    for (Index i = 0; i < count; ++i) errors[i] = pool.y_r(0, i);
    const GprModel gpr = fit_gpr(pool.joint(), errors, {1.0, 0.15}, norm);

    std::vector<bool> selected(count, false);
    const auto top = select_greedy(gpr, pool, norm, selected, 10);
    std::vector<Index> expected;
    for (Index i = count - 10; i < count; ++i) expected.push_back(i);
    CHECK(top == expected);

    // Oracle: full stable sort by (score desc, index asc).
    Rng rng(3);
    Vector random_errors(count);
    for (Index i = 0; i < count; ++i) random_errors[i] = rng.uniform(0.0, 1.0);
    const GprModel gpr2 = fit_gpr(pool.joint(), random_errors, {1.0, 0.05}, norm);
    std::vector<bool> mask(count, false);
    for (Index i = 0; i < count; i += 3) mask[static_cast<std::size_t>(i)] = true;

    const auto picked = select_greedy(gpr2, pool, norm, mask, 15);
    std::vector<Index> open;
    for (Index i = 0; i < count; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) open.push_back(i);
    }
    Matrix open_joints(2, static_cast<Index>(open.size()));
    for (std::size_t k = 0; k < open.size(); ++k) {
        open_joints.col(static_cast<Index>(k)) << pool.y_r.col(open[k]), pool.mu.col(open[k]);
    }
    const Vector scores = gpr2.predict_batch(norm.normalize(open_joints));
    std::vector<Index> order(open.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return open[static_cast<std::size_t>(a)] < open[static_cast<std::size_t>(b)];
    });
    std::vector<Index> oracle;
    for (Index k = 0; k < 15; ++k) oracle.push_back(open[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    std::sort(oracle.begin(), oracle.end());
    CHECK(picked == oracle);

    // Everything that remains, then exhaustion.
    std::vector<bool> nearly_all(count, true);
    for (Index i = 0; i < 7; ++i) nearly_all[static_cast<std::size_t>(i)] = false;
    const auto rest = select_greedy(gpr2, pool, norm, nearly_all, 7);
    CHECK(rest.size() == 7);
    CHECK_THROWS_AS(select_greedy(gpr2, pool, norm, nearly_all, 8), NumericalError);
}

TEST_CASE("acquire: empty selection, determinism, per-sample maximum principle") {
    SmallProblem problem;
    Rng rng(21);
    const JointSet pool = build_pool(problem.est.loosened, *problem.space, problem.est.basis,
                                     problem.est.limits, 60, rng);

    const AcquireResult none =
        acquire(*problem.fom, problem.est.basis, pool, {}, problem.fom->dt());
    CHECK(none.refs.cols() == 0);

    std::vector<Index> some = {3, 17, 40};
    const AcquireResult a = acquire(*problem.fom, problem.est.basis, pool, some,
                                    problem.fom->dt());
    const AcquireResult b = acquire(*problem.fom, problem.est.basis, pool, some,
                                    problem.fom->dt());
    CHECK(a.refs == b.refs);
    CHECK(a.lifted == b.lifted);

    for (Index k = 0; k < a.refs.cols(); ++k) {
        const double lo = std::min(a.lifted.col(k).minCoeff(),
                                   pool.mu.col(some[static_cast<std::size_t>(k)]).minCoeff());
        const double hi = std::max(a.lifted.col(k).maxCoeff(),
                                   pool.mu.col(some[static_cast<std::size_t>(k)]).maxCoeff());
        CHECK(a.refs.col(k).minCoeff() >= lo - 1e-9);
        CHECK(a.refs.col(k).maxCoeff() <= hi + 1e-9);
    }
}

TEST_CASE("refresh_basis: no outputs, span invariance, orthonormality") {
    SmallProblem problem;
    const ReducedBasis initial = pod(problem.est.y_estimate, 8);
    const ReducedBasis refreshed = refresh_basis(problem.est.y_estimate, Matrix(), 8);
    CHECK(initial.V == refreshed.V);

    // Span-invariance oracle on a snapshot set whose rank fits inside the
    // retained dimension: adding in-span columns cannot change what the
    // basis can represent, so the projection error stays (numerically) zero.
    Rng rng(61);
    Matrix factors(40, 6), weights(6, 30);
    for (Index j = 0; j < 6; ++j) {
        for (Index i = 0; i < 40; ++i) factors(i, j) = rng.uniform(-1, 1);
        for (Index k = 0; k < 30; ++k) weights(j, k) = rng.uniform(-1, 1);
    }
    const Matrix low_rank = factors * weights;
    Matrix mixes(6, 5);
    for (Index j = 0; j < 5; ++j) {
        for (Index i = 0; i < 6; ++i) mixes(i, j) = rng.uniform(-2, 2);
    }
    const Matrix in_span = factors * mixes;

    const ReducedBasis before = pod(low_rank, 8);
    const ReducedBasis after = refresh_basis(low_rank, in_span, 8);
    const double err_before = (low_rank - before.V * before.project(low_rank)).norm();
    const double err_after = (low_rank - after.V * after.project(low_rank)).norm();
    CHECK(err_before < 1e-10);
    CHECK(std::abs(err_before - err_after) < 1e-10);

    const Matrix gram = after.V.transpose() * after.V;
    CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("run_active_learning: injected oracle ROM meets the target immediately") {
    SmallProblem problem(12, 20, 10);
    PacDesign design{0.2, 0.2, 0};
    Rng pac_rng(31);
    const PacValidator validator =
        build_validator(*problem.space, problem.est.loosened, problem.est.limits,
                        problem.est.basis, *problem.fom, design, pac_rng);

    ActiveConfig acfg;
    acfg.pool_size = 200;
    acfg.delta_s = 20;
    acfg.tau_design = 0.9;  // generous: the oracle only carries projection error
    acfg.max_iterations = 5;

    const RomTrainer oracle = [&](const ReducedBasis& basis, const InputNormalizer&, double dt,
                                  const Matrix&, const Matrix&, const TrainingConfig&,
                                  TrainingHistory*) -> std::shared_ptr<const RomBase> {
        return std::make_shared<ProjectedFomRom>(problem.fom.get(), basis, dt);
    };

    const auto result = run_active_learning(*problem.fom, *problem.space, problem.est, validator,
                                            acfg, tiny_training(), StageSeeds::from_root(77),
                                            {}, oracle);
    CHECK(result.history.stop_reason == StopReason::target_met);
    CHECK(result.history.records.size() == 1);
    CHECK(result.history.records[0].p_at_design == 1.0);
    CHECK(result.best_iteration == 1);
}

TEST_CASE("run_active_learning: infinite stall tolerance stops at iteration 2") {
    SmallProblem problem(10, 10, 6);
    PacDesign design{0.25, 0.25, 0};
    Rng pac_rng(41);
    const PacValidator validator =
        build_validator(*problem.space, problem.est.loosened, problem.est.limits,
                        problem.est.basis, *problem.fom, design, pac_rng);

    ActiveConfig acfg;
    acfg.pool_size = 150;
    acfg.delta_s = 15;
    acfg.tau_design = 1e-9;  // unreachable: forces the stall path
    acfg.delta_tau_tol = 1e300;
    acfg.max_iterations = 6;

    const auto result = run_active_learning(*problem.fom, *problem.space, problem.est, validator,
                                            acfg, tiny_training(), StageSeeds::from_root(78));
    CHECK(result.history.stop_reason == StopReason::improvement_stalled);
    CHECK(result.history.records.size() == 2);
}

TEST_CASE("run_active_learning: nested unique selections, counts, reproducibility") {
    SmallProblem problem(10, 10, 6);
    PacDesign design{0.25, 0.25, 0};
    Rng pac_rng(51);
    const PacValidator validator =
        build_validator(*problem.space, problem.est.loosened, problem.est.limits,
                        problem.est.basis, *problem.fom, design, pac_rng);

    ActiveConfig acfg;
    acfg.pool_size = 200;
    acfg.delta_s = 10;
    acfg.tau_design = 1e-9;   // never met: run to max_iterations
    acfg.delta_tau_tol = 1e-15;
    acfg.max_iterations = 4;

    auto run_once = [&]() {
        std::vector<std::vector<Index>> selections;
        IterationCallbacks cb;
        cb.on_checkpoint = [&](Index, const RomBase&, const PacReport&,
                               const std::vector<Index>& cumulative) {
            selections.push_back(cumulative);
        };
        const auto result = run_active_learning(*problem.fom, *problem.space, problem.est,
                                                validator, acfg, tiny_training(),
                                                StageSeeds::from_root(79), cb);
        return std::make_pair(result, selections);
    };

    const auto [result, selections] = run_once();
    CHECK(result.history.records.size() == 4);
    for (std::size_t i = 0; i < result.history.records.size(); ++i) {
        const auto& rec = result.history.records[i];
        CHECK(rec.iteration == static_cast<Index>(i + 1));
        CHECK(rec.sample_count == static_cast<Index>(i + 1) * acfg.delta_s);
        CHECK(rec.p_at_design < 1.0);
    }
    CHECK(result.history.stop_reason == StopReason::max_iterations);

    // Nested and duplicate-free.
    for (std::size_t i = 0; i < selections.size(); ++i) {
        const std::set<Index> uniq(selections[i].begin(), selections[i].end());
        CHECK(uniq.size() == selections[i].size());
        if (i > 0) {
            const std::set<Index> prev(selections[i - 1].begin(), selections[i - 1].end());
            for (Index idx : selections[i - 1]) CHECK(uniq.contains(idx));
            CHECK(selections[i].size() >= selections[i - 1].size());
        }
    }

    // Bitwise reproducibility of the whole history.
    const auto [result2, selections2] = run_once();
    REQUIRE(result2.history.records.size() == result.history.records.size());
    for (std::size_t i = 0; i < selections.size(); ++i) {
        CHECK(selections2[i] == selections[i]);
    }
    for (std::size_t i = 0; i < result.history.records.size(); ++i) {
        CHECK(result2.history.records[i].one_minus_tau_bar ==
              result.history.records[i].one_minus_tau_bar);
        CHECK(result2.history.records[i].p_at_design == result.history.records[i].p_at_design);
    }
}
