#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "alrom/rom.hpp"

using namespace alrom;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

InputNormalizer identity_normalizer(Index dim) {
    return make_normalizer(Vector(Vector::Zero(dim)), Vector(Vector::Ones(dim)));
}

ReducedBasis identity_basis(Index n) {
    ReducedBasis basis;
    basis.V = Matrix::Identity(n, n);
    basis.singular_values = Vector::Ones(n);
    return basis;
}

EennRom zero_rom(Index n, Index n_mu, double dt) {
    MlpNetwork net;
    net.weights.push_back(Matrix::Zero(n, n + n_mu));
    net.biases.push_back(Vector::Zero(n));
    return EennRom(identity_basis(n), net, identity_normalizer(n + n_mu),
                   Vector(Vector::Ones(n)), dt);
}


}  // namespace

TEST_CASE("mlp_forward: zero parameters give zero output") {
    MlpNetwork net;
    net.weights = {Matrix::Zero(5, 3), Matrix::Zero(2, 5)};
    net.biases = {Vector::Zero(5), Vector::Zero(2)};
    Rng rng(1);
    const Vector x = random_matrix(3, 1, rng);
    CHECK(net.forward(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp_forward: a single linear layer is W x + b") {
    Rng rng(2);
    MlpNetwork net;
    net.weights = {random_matrix(4, 3, rng)};
    net.biases = {Vector(random_matrix(4, 1, rng))};
    const Vector x = random_matrix(3, 1, rng);
    CHECK(((net.weights[0] * x + net.biases[0]) - net.forward(x)).cwiseAbs().maxCoeff() < 1e-15);

    // Batch and single-sample paths agree.
    const Matrix xs = random_matrix(3, 7, rng);
    const Matrix batch = net.forward_batch(xs);
    for (Index j = 0; j < 7; ++j) {
        CHECK((batch.col(j) - net.forward(Vector(xs.col(j)))).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("input jacobian matches central finite differences") {
    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const MlpNetwork net = make_mlp({4, 8, 6, 3}, rng);
        const Vector x = random_matrix(4, 1, rng);
        const Matrix analytic = net.input_jacobian(x);
        Matrix fd(3, 4);
        const double h = 1e-6;
        for (Index j = 0; j < 4; ++j) {
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            fd.col(j) = (net.forward(xp) - net.forward(xm)) / (2.0 * h);
        }
        CHECK((analytic - fd).norm() / (analytic.norm() + fd.norm() + 1e-300) < 1e-4);
    }
}

TEST_CASE("parameter gradients match central finite differences on 20 random nets") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        MlpNetwork net = make_mlp({3, 5, 4, 2}, rng);
        const Matrix x = random_matrix(3, 6, rng);
        const Matrix t = random_matrix(2, 6, rng);

        MlpGradients grads;
        mlp_mse_and_gradients(net, x, t, &grads);

        double analytic_sq = 0.0, diff_sq = 0.0;
        const double h = 1e-6;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (Index j = 0; j < net.weights[l].cols(); ++j) {
                for (Index i = 0; i < net.weights[l].rows(); ++i) {
                    const double saved = net.weights[l](i, j);
                    net.weights[l](i, j) = saved + h;
                    const double up = mlp_mse_and_gradients(net, x, t, nullptr);
                    net.weights[l](i, j) = saved - h;
                    const double dn = mlp_mse_and_gradients(net, x, t, nullptr);
                    net.weights[l](i, j) = saved;
                    const double fd = (up - dn) / (2.0 * h);
                    analytic_sq += grads.weights[l](i, j) * grads.weights[l](i, j);
                    diff_sq += std::pow(grads.weights[l](i, j) - fd, 2);
                }
            }
            for (Index i = 0; i < net.biases[l].size(); ++i) {
                const double saved = net.biases[l][i];
                net.biases[l][i] = saved + h;
                const double up = mlp_mse_and_gradients(net, x, t, nullptr);
                net.biases[l][i] = saved - h;
                const double dn = mlp_mse_and_gradients(net, x, t, nullptr);
                net.biases[l][i] = saved;
                const double fd = (up - dn) / (2.0 * h);
                analytic_sq += grads.biases[l][i] * grads.biases[l][i];
                diff_sq += std::pow(grads.biases[l][i] - fd, 2);
            }
        }
        CHECK(std::sqrt(diff_sq) / (std::sqrt(analytic_sq) + 1e-300) < 1e-4);
    }
}

TEST_CASE("eenn_step: residual structure") {
    const EennRom zero = zero_rom(3, 2, 0.05);
    Rng rng(5);
    const Vector y = random_matrix(3, 1, rng);
    const Vector mu = random_matrix(2, 1, rng);
    CHECK(zero.step(y, mu) == y);  // zero network: exact identity

    // dt = 0 keeps the state for any network.
    Rng rng2(6);
    MlpNetwork net = make_mlp({5, 8, 3}, rng2);
    const EennRom frozen(identity_basis(3), net, identity_normalizer(5),
                         Vector(Vector::Ones(3)), 0.0);
    CHECK(frozen.step(y, mu) == y);

    // step - y equals dt * rhs.
    const EennRom live(identity_basis(3), net, identity_normalizer(5),
                       Vector(Vector::Constant(3, 2.0)), 0.05);
    const Vector lhs = live.step(y, mu) - y;
    const Vector rhs = 0.05 * live.rhs(y, mu);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("eenn_step: hand-computed linear network") {
    // Two reduced coordinates, one parameter, single linear layer.
    MlpNetwork net;
    Matrix w(2, 3);
    w << 0.5, -1.0, 2.0,
         1.5, 0.25, -0.5;
    Vector b(2);
    b << 0.1, -0.2;
    net.weights = {w};
    net.biases = {b};

    Vector scale(2);
    scale << 2.0, 0.5;
    const double dt = 0.1;
    const EennRom rom(identity_basis(2), net, identity_normalizer(3), scale, dt);

    Vector y(2);
    y << 0.3, -0.4;
    Vector mu(1);
    mu << 0.7;

    // By hand: x = (0.3, -0.4, 0.7); W x + b = (0.5*0.3 - 1*(-0.4) + 2*0.7 + 0.1,
    // 1.5*0.3 + 0.25*(-0.4) - 0.5*0.7 - 0.2) = (2.05, -0.2).
    // y' = y + dt * scale .* g = (0.3 + 0.1*2*2.05, -0.4 + 0.1*0.5*(-0.2)).
    Vector expected(2);
    expected << 0.3 + 0.1 * 2.0 * 2.05, -0.4 + 0.1 * 0.5 * (-0.2);
    CHECK((rom.step(y, mu) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("train: exactly representable linear dynamics are learned to high accuracy") {
    Rng rng(404);
    const Index n = 2, n_mu = 1, samples = 400;
    const double dt = 0.1;
    const Matrix joints = random_matrix(n + n_mu, samples, rng, 0.0, 1.0);
    const Matrix a = random_matrix(n, n + n_mu, rng);
    const Vector c = random_matrix(n, 1, rng);
    Matrix next(n, samples);
    for (Index j = 0; j < samples; ++j) {
        next.col(j) = joints.col(j).head(n) + dt * (a * joints.col(j) + c);
    }

    TrainingConfig cfg;
    cfg.hidden_sizes = {32};
    cfg.max_epochs = 6000;
    cfg.batch_size = 400;  // full batch: cleanest convergence on a toy problem
    cfg.early_stop_patience = 500;
    cfg.lr_patience = 150;
    cfg.loss_tol = 1e-13;
    cfg.learning_rate = 1e-2;
    cfg.seed = 7;

    const auto result = train_eenn(identity_basis(n), identity_normalizer(n + n_mu), dt, joints,
                                   next, cfg);
    CAPTURE(result.history.best_val_loss);
    CAPTURE(*std::min_element(result.history.train_loss.begin(),
                              result.history.train_loss.end()));
    CHECK(*std::min_element(result.history.train_loss.begin(), result.history.train_loss.end()) <=
          1e-6);
    CHECK(result.history.best_val_loss <= result.history.initial_val_loss);
}

TEST_CASE("train: determinism and duplicated-row robustness") {
    Rng rng(3030);
    const Index n = 2, samples = 120;
    const double dt = 0.05;
    const Matrix joints = random_matrix(n + 1, samples, rng, 0.0, 1.0);
    const Matrix a = random_matrix(n, n + 1, rng);
    Matrix next(n, samples);
    for (Index j = 0; j < samples; ++j) {
        next.col(j) = joints.col(j).head(n) + dt * (a * joints.col(j));
    }

    TrainingConfig cfg;
    cfg.hidden_sizes = {16};
    cfg.max_epochs = 300;
    cfg.batch_size = 32;
    cfg.seed = 9;

    const auto r1 = train_eenn(identity_basis(n), identity_normalizer(n + 1), dt, joints, next, cfg);
    const auto r2 = train_eenn(identity_basis(n), identity_normalizer(n + 1), dt, joints, next, cfg);
    for (std::size_t l = 0; l < r1.rom.net().weights.size(); ++l) {
        CHECK(r1.rom.net().weights[l] == r2.rom.net().weights[l]);
        CHECK(r1.rom.net().biases[l] == r2.rom.net().biases[l]);
    }
    CHECK(r1.history.val_loss == r2.history.val_loss);

    // Duplicating every row changes batching but must land in the same
    // quality regime.
    Matrix joints2(n + 1, 2 * samples), next2(n, 2 * samples);
    joints2 << joints, joints;
    next2 << next, next;
    const auto r3 =
        train_eenn(identity_basis(n), identity_normalizer(n + 1), dt, joints2, next2, cfg);
    CHECK(r3.history.best_val_loss < 50.0 * r1.history.best_val_loss + 1e-9);
}

TEST_CASE("train: constant dynamics collapse to the zero map") {
    Rng rng(77);
    const Index n = 3, samples = 200;
    const Matrix joints = random_matrix(n + 1, samples, rng, 0.0, 1.0);
    const Matrix next = joints.topRows(n);  // y' = y

    TrainingConfig cfg;
    cfg.hidden_sizes = {8};
    cfg.max_epochs = 8000;
    cfg.batch_size = 200;
    cfg.loss_tol = 1e-13;
    cfg.early_stop_patience = 600;
    cfg.lr_patience = 80;
    cfg.learning_rate = 1e-2;
    cfg.seed = 21;

    const auto result =
        train_eenn(identity_basis(n), identity_normalizer(n + 1), 0.1, joints, next, cfg);
    CHECK(result.history.best_val_loss <= 1e-8);
}

TEST_CASE("train: degenerate inputs are rejected") {
    TrainingConfig cfg;
    CHECK_THROWS_AS(train_eenn(identity_basis(2), identity_normalizer(3), 0.0, Matrix(3, 4),
                               Matrix(2, 4), cfg),
                    std::invalid_argument);
    Matrix joints = Matrix::Zero(3, 4);
    Matrix next = Matrix::Zero(2, 4);
    next(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_eenn(identity_basis(2), identity_normalizer(3), 0.1, joints, next, cfg),
                    NumericalError);
}

TEST_CASE("early stopping bookkeeping: best epoch, best weights") {
    Rng rng(555);
    const Index n = 2, samples = 150;
    const Matrix joints = random_matrix(n + 1, samples, rng, 0.0, 1.0);
    const Matrix a = random_matrix(n, n + 1, rng);
    Matrix next(n, samples);
    for (Index j = 0; j < samples; ++j) {
        next.col(j) = joints.col(j).head(n) + 0.1 * (a * joints.col(j));
    }

    TrainingConfig cfg;
    cfg.hidden_sizes = {12};
    cfg.max_epochs = 200;
    cfg.batch_size = 32;
    cfg.seed = 4;

    const auto result =
        train_eenn(identity_basis(n), identity_normalizer(n + 1), 0.1, joints, next, cfg);
    const auto& hist = result.history;

    double min_val = hist.initial_val_loss;
    for (double v : hist.val_loss) min_val = std::min(min_val, v);
    CHECK(hist.best_val_loss == min_val);
    if (hist.best_epoch > 0) {
        CHECK(hist.val_loss[static_cast<std::size_t>(hist.best_epoch - 1)] == hist.best_val_loss);
    }

    // Returned weights reproduce the recorded best loss on the recorded split.
    const Matrix x_val = joints(Eigen::all, hist.val_indices);
    Matrix t_val(n, x_val.cols());
    for (Index k = 0; k < x_val.cols(); ++k) {
        t_val.col(k) = next.col(hist.val_indices[static_cast<std::size_t>(k)]);
    }
    const Matrix pred = result.rom.step_batch(x_val.topRows(n), x_val.bottomRows(1));
    const double mse = (pred - t_val).squaredNorm() / static_cast<double>(t_val.size());
    CHECK(mse == doctest::Approx(hist.best_val_loss).epsilon(1e-10));
}

TEST_CASE("rollout: zero network, zero steps, single-step equivalence") {
    const EennRom rom = zero_rom(3, 2, 0.1);
    Rng rng(8);
    const Vector y0 = random_matrix(3, 1, rng);
    const Vector mu = random_matrix(2, 1, rng);
    const auto schedule = ParameterSchedule::constant(mu, 0.0, 10.0);

    const Matrix traj = rollout(rom, y0, schedule, 25);
    CHECK(traj.cols() == 26);
    for (Index i = 0; i <= 25; ++i) CHECK(traj.col(i) == y0);

    const Matrix only_initial = rollout(rom, y0, schedule, 0);
    CHECK(only_initial.cols() == 1);

    Rng rng2(9);
    MlpNetwork net = make_mlp({5, 6, 3}, rng2);
    const EennRom live(identity_basis(3), net, identity_normalizer(5), Vector(Vector::Ones(3)),
                       0.1);
    const Matrix one = rollout(live, y0, schedule, 1);
    CHECK(one.col(1) == live.step(y0, mu));
}

TEST_CASE("trajectory_relative_error: identities and brute-force oracle") {
    Rng rng(10);
    const Matrix ref = random_matrix(6, 9, rng, 1.0, 2.0);
    CHECK(trajectory_relative_error(ref, ref) == 0.0);
    CHECK(trajectory_relative_error(Matrix(1.1 * ref), ref) ==
          doctest::Approx(0.1).epsilon(1e-12));

    const Matrix pred = random_matrix(6, 9, rng, 1.0, 2.0);
    double oracle = 0.0;
    for (Index i = 0; i < 9; ++i) {
        double num = 0.0, den = 0.0;
        for (Index r = 0; r < 6; ++r) {
            num += std::pow(pred(r, i) - ref(r, i), 2);
            den += std::pow(ref(r, i), 2);
        }
        oracle += std::sqrt(num) / std::sqrt(den);
    }
    oracle /= 9.0;
    CHECK(trajectory_relative_error(pred, ref) == doctest::Approx(oracle).epsilon(1e-12));

    CHECK_THROWS_AS(trajectory_relative_error(ref, Matrix(Matrix::Zero(6, 9))), NumericalError);
    CHECK_THROWS_AS(trajectory_relative_error(ref, Matrix(Matrix::Zero(6, 2))),
                    std::invalid_argument);
}

TEST_CASE("one_step_error: exact, total, and pencil-and-paper cases") {
    const EennRom rom = zero_rom(3, 1, 0.1);
    JointSample sample;
    sample.y_r = Vector::Zero(3);
    sample.mu = Vector::Zero(1);

    // Zero network at y_r = 0 lifts to 0; against itself the error is 0.
    // Against any nonzero reference it is exactly 1.
    Vector ref = Vector::Zero(3);
    ref << 1.0, 2.0, 2.0;  // norm 3
    CHECK(one_step_error(rom, sample, ref) == doctest::Approx(1.0).epsilon(1e-15));

    sample.y_r << 1.0, 2.0, 2.0;
    const Vector reproduced = rom.step(sample.y_r, sample.mu);  // = y_r
    CHECK(one_step_error(rom, sample, Vector(rom.basis().reconstruct(reproduced))) == 0.0);

    // Hand case: prediction (1,2,2), reference (1,2,2) + (0.3,0,0.4):
    // error = 0.5 / ||ref||.
    Vector ref2(3);
    ref2 << 1.3, 2.0, 2.4;
    const double expected = (Vector(3) << 0.3, 0.0, 0.4).finished().norm() / ref2.norm();
    CHECK(one_step_error(rom, sample, ref2) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(one_step_error(rom, sample, Vector(Vector::Zero(3))), NumericalError);

    // With a cached lifted state the reduced input is re-projected.
    JointSample cached = sample;
    cached.lifted = Vector(3);
    cached.lifted << 5.0, 6.0, 7.0;
    cached.y_r = Vector::Zero(3);  // must be ignored
    const double err = one_step_error(rom, cached, ref2);
    const double manual = (cached.lifted - ref2).norm() / ref2.norm();
    CHECK(err == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("normalizer: unit box mapping and degenerate widths") {
    Vector lo(3), hi(3);
    lo << -1.0, 5.0, 2.0;
    hi << 1.0, 15.0, 2.0;  // last width zero
    const InputNormalizer norm = make_normalizer(lo, hi);
    Vector x(3);
    x << 0.0, 10.0, 2.0;
    const Vector u = norm.normalize(x);
    CHECK(u[0] == doctest::Approx(0.5));
    CHECK(u[1] == doctest::Approx(0.5));
    CHECK(u[2] == doctest::Approx(0.0));
    CHECK(norm.scale.minCoeff() > 0.0);
}
