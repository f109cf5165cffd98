#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alrom/fom.hpp"
#include "alrom/active.hpp"
#include "alrom/validator.hpp"

using namespace alrom;

namespace {

EennRom zero_net_rom(const ReducedBasis& basis, double dt, Index n_mu) {
    MlpNetwork net;
    net.weights.push_back(Matrix::Zero(basis.dim(), basis.dim() + n_mu));
    net.biases.push_back(Vector::Zero(basis.dim()));
    const InputNormalizer norm = make_normalizer(Vector(Vector::Zero(basis.dim() + n_mu)),
                                                 Vector(Vector::Ones(basis.dim() + n_mu)));
    return EennRom(basis, net, norm, Vector(Vector::Ones(basis.dim())), dt);
}

ReducedBasis identity_basis(Index n) {
    ReducedBasis basis;
    basis.V = Matrix::Identity(n, n);
    basis.singular_values = Vector::Ones(n);
    return basis;
}

}  // namespace

TEST_CASE("required_samples: pinned values") {
    // ceil(ln(2/0.01) / (2 * 0.03^2)) = ceil(2943.51) = 2944.
    CHECK(required_samples(0.03, 0.01) == 2944);
    // ceil(ln(40) / 0.02) = ceil(184.44) = 185.
    CHECK(required_samples(0.1, 0.05) == 185);
    // Degenerate corner still returns at least one test.
    CHECK(required_samples(0.5, 1.0 - 1e-12) >= 1);
    CHECK(required_samples(0.5, 1.0 - 1e-12) <= 2);

    CHECK_THROWS_AS(required_samples(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(required_samples(0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(required_samples(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("observed_confidence: direct counts and monotonicity") {
    Vector errors(3);
    errors << 0.01, 0.02, 0.03;
    CHECK(observed_confidence(errors, 0.02) == doctest::Approx(2.0 / 3.0));
    CHECK(observed_confidence(errors, 0.03) == 1.0);
    CHECK(observed_confidence(errors, 0.5) == 1.0);
    CHECK(observed_confidence(errors, 0.005) == 0.0);

    Rng rng(17);
    Vector random_errors(500);
    for (Index i = 0; i < 500; ++i) random_errors[i] = rng.uniform(0.0, 0.1);
    double prev = -1.0;
    for (double tau = 0.0; tau <= 0.11; tau += 0.0005) {
        const double p = observed_confidence(random_errors, tau);
        CHECK(p >= prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK_THROWS_AS(observed_confidence(Vector(), 0.1), std::invalid_argument);
}

TEST_CASE("best_tau: max of the error set and sweep-oracle equivalence") {
    Vector e1(3);
    e1 << 0.01, 0.03, 0.02;
    CHECK(best_tau(e1) == 0.03);
    CHECK(best_tau(Vector(Vector::Constant(5, 0.42))) == 0.42);

    Rng rng(29);
    Vector errors(10000);
    for (Index i = 0; i < errors.size(); ++i) errors[i] = rng.uniform(0.0, 1.0);

    // Oracle: scan every observed level, keep the smallest with p == 1.
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    double oracle = sorted.back();
    for (double candidate : sorted) {
        if (observed_confidence(errors, candidate) == 1.0) {
            oracle = candidate;
            break;
        }
    }
    CHECK(best_tau(errors) == oracle);
}

TEST_CASE("build_validator: paper-scale count, finite references, determinism") {
    HeatModelConfig cfg;
    cfg.grid = 20;  // keep the FOM small; the count comes from the design
    const Heat2dModel fom(cfg);
    Vector lo(4), hi(4);
    lo << 20, 20, 20, 20;
    hi << 1000, 1000, 1000, 1000;
    const ParameterSpace space(lo, hi);

    Rng est_rng(5);
    SpacesConfig scfg;
    scfg.estimate_ivps = 5;
    scfg.reduced_dim = 8;
    const EstimateResult est = estimate_spaces(fom, space, scfg, est_rng);

    PacDesign design;  // epsilon 0.03, sigma 0.01
    Rng rng_a(99);
    const PacValidator v = build_validator(space, est.loosened, est.limits, est.basis, fom,
                                           design, rng_a);
    CHECK(v.size() == 2944);
    CHECK(v.design.s == 2944);
    CHECK(v.refs.allFinite());
    for (Index i = 0; i < v.size(); ++i) CHECK(v.refs.col(i).norm() > 0.0);

    Rng rng_b(99);
    const PacValidator w = build_validator(space, est.loosened, est.limits, est.basis, fom,
                                           design, rng_b);
    CHECK(v.y_r0 == w.y_r0);
    CHECK(v.mu == w.mu);
    CHECK(v.refs == w.refs);

    PacDesign too_small = design;
    too_small.s = 100;
    CHECK_THROWS_AS(too_small.validate(), ConfigError);
}

TEST_CASE("evaluate: perfect ROM and constant-error ROM") {
    const Index n = 4, n_mu = 2, s = 50;
    const ReducedBasis basis = identity_basis(n);
    const EennRom rom = zero_net_rom(basis, 0.1, n_mu);

    Rng rng(3);
    PacValidator v;
    v.design = {0.03, 0.01, s};
    v.y_r0.resize(n, s);
    v.mu.resize(n_mu, s);
    for (Index j = 0; j < s; ++j) {
        for (Index i = 0; i < n; ++i) v.y_r0(i, j) = rng.uniform(0.5, 2.0);
        for (Index i = 0; i < n_mu; ++i) v.mu(i, j) = rng.uniform(0.0, 1.0);
    }
    v.lifted = v.y_r0;  // identity basis

    SUBCASE("references reproduced exactly") {
        v.refs = v.lifted;  // zero net: one step returns the input
        const PacReport report = evaluate(v, rom, 0.01);
        CHECK(report.p_at_design == 1.0);
        CHECK(report.tau_bar == 0.0);
        CHECK(report.eta == doctest::Approx(0.97));

        const PacReport again = evaluate(v, rom, 0.01);
        CHECK(report.errors == again.errors);
    }

    SUBCASE("all errors exactly one half") {
        v.refs = 2.0 * v.lifted;  // ||x - 2x|| / ||2x|| = 1/2
        const PacReport report = evaluate(v, rom, 0.01);
        CHECK(report.p_at_design == 0.0);
        CHECK(report.tau_bar == doctest::Approx(0.5).epsilon(1e-12));
        CHECK((report.errors.array() - 0.5).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("statistical sanity of the certified bound on a synthetic error law") {
    // Errors i.i.d. uniform on [0, 0.02]; the true confidence at tau is
    // tau/0.02. The certified band 1-eps < p_hat(tau_bar) < 1 must fail in
    // at most a sigma fraction of validator rebuilds (tolerance 2 sigma).
    const double eps = 0.05, sigma = 0.05;
    const Index s = required_samples(eps, sigma);
    Rng rng(1234);
    int failures = 0;
    const int rebuilds = 1000;
    for (int trial = 0; trial < rebuilds; ++trial) {
        Vector errors(s);
        for (Index i = 0; i < s; ++i) errors[i] = rng.uniform(0.0, 0.02);
        const double tau_bar = best_tau(errors);
        const double p_true = std::min(1.0, tau_bar / 0.02);
        if (!(1.0 - eps < p_true && p_true < 1.0)) ++failures;
    }
    CHECK(static_cast<double>(failures) / rebuilds <= 2.0 * sigma);
}
