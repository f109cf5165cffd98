#include "alrom/rom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alrom {

std::vector<Index> MlpNetwork::layer_sizes() const {
    std::vector<Index> sizes;
    sizes.push_back(weights.front().cols());
    for (const auto& w : weights) sizes.push_back(w.rows());
    return sizes;
}

Vector MlpNetwork::forward(const Vector& x) const {
    require(x.size() == input_dim(), "mlp: input size mismatch");
    Vector a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Vector z = weights[l] * a + biases[l];
        if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Matrix MlpNetwork::forward_batch(const Matrix& X) const {
    require(X.rows() == input_dim(), "mlp: input size mismatch");
    Matrix a = X;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Matrix z = (weights[l] * a).colwise() + biases[l];
        if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Matrix MlpNetwork::input_jacobian(const Vector& x) const {
    require(x.size() == input_dim(), "mlp: input size mismatch");
    Matrix jac = weights[0];
    Vector z = weights[0] * x + biases[0];
    for (std::size_t l = 1; l < weights.size(); ++l) {
        const Vector mask = (z.array() > 0.0).cast<double>();
        jac = weights[l] * mask.asDiagonal() * jac;
        z = weights[l] * z.cwiseMax(0.0) + biases[l];
    }
    return jac;
}

MlpNetwork make_mlp(const std::vector<Index>& sizes, Rng& rng) {
    require(sizes.size() >= 2, "mlp: need at least input and output layer");
    for (Index s : sizes) require(s >= 1, "mlp: layer sizes must be positive");
    MlpNetwork net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Matrix w(sizes[l + 1], sizes[l]);
        const double sd = std::sqrt(2.0 / static_cast<double>(sizes[l]));
        for (Index j = 0; j < w.cols(); ++j) {
            for (Index i = 0; i < w.rows(); ++i) w(i, j) = sd * rng.normal();
        }
        Vector b(sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        for (Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

Vector InputNormalizer::normalize(const Vector& x) const {
    require(x.size() == dim(), "normalizer: size mismatch");
    return (x - shift).cwiseQuotient(scale);
}

Matrix InputNormalizer::normalize(const Matrix& X) const {
    require(X.rows() == dim(), "normalizer: size mismatch");
    return (X.colwise() - shift).array().colwise() / scale.array();
}

InputNormalizer make_normalizer(const Vector& lower, const Vector& upper) {
    require(lower.size() == upper.size(), "normalizer: bound sizes differ");
    InputNormalizer n;
    n.shift = lower;
    n.scale = (upper - lower).cwiseMax(0.0);
    for (Index i = 0; i < n.scale.size(); ++i) {
        if (n.scale[i] <= 0.0) n.scale[i] = 1.0;  // degenerate feature
    }
    return n;
}

InputNormalizer make_normalizer(const ReducedBox& loosened_box, const ParameterSpace& space) {
    Vector lower(loosened_box.dim() + space.dim());
    Vector upper(lower.size());
    lower << loosened_box.lower, space.lower();
    upper << loosened_box.upper, space.upper();
    return make_normalizer(lower, upper);
}

void TrainingConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("training.max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("training.learning_rate must be positive");
    if (!(lr_decay > 0 && lr_decay < 1)) throw ConfigError("training.lr_decay must be in (0,1)");
    if (lr_patience < 1) throw ConfigError("training.lr_patience must be >= 1");
    if (early_stop_patience < 1) throw ConfigError("training.early_stop_patience must be >= 1");
    if (!(validation_split > 0 && validation_split < 1)) {
        throw ConfigError("training.validation_split must be in (0,1)");
    }
    if (!(loss_tol > 0)) throw ConfigError("training.loss_tol must be positive");
    for (Index h : hidden_sizes) {
        if (h < 1) throw ConfigError("training.hidden_sizes entries must be >= 1");
    }
}

Matrix RomBase::step_batch(const Matrix& y_r, const Matrix& mu) const {
    require(y_r.cols() == mu.cols(), "step_batch: column count mismatch");
    Matrix out(y_r.rows(), y_r.cols());
    for (Index i = 0; i < y_r.cols(); ++i) out.col(i) = step(y_r.col(i), mu.col(i));
    return out;
}

EennRom::EennRom(ReducedBasis basis, MlpNetwork net, InputNormalizer normalizer,
                 Vector output_scale, double dt)
    : basis_(std::move(basis)),
      net_(std::move(net)),
      normalizer_(std::move(normalizer)),
      output_scale_(std::move(output_scale)),
      dt_(dt) {
    require(net_.input_dim() == normalizer_.dim(), "eenn: normalizer width mismatch");
    require(net_.output_dim() == basis_.dim(), "eenn: network output width != reduced dim");
    require(output_scale_.size() == basis_.dim(), "eenn: output scale width mismatch");
    require(dt_ >= 0.0, "eenn: negative dt");
}

Vector EennRom::rhs(const Vector& y_r, const Vector& mu) const {
    Vector x(y_r.size() + mu.size());
    x << y_r, mu;
    return output_scale_.cwiseProduct(net_.forward(normalizer_.normalize(x)));
}

Vector EennRom::step(const Vector& y_r, const Vector& mu) const {
    require(y_r.size() == basis_.dim(), "eenn: reduced state size mismatch");
    const Vector out = y_r + dt_ * rhs(y_r, mu);
    if (!out.allFinite()) throw NumericalError("eenn: non-finite one-step output");
    return out;
}

Matrix EennRom::step_batch(const Matrix& y_r, const Matrix& mu) const {
    require(y_r.rows() == basis_.dim(), "eenn: reduced state size mismatch");
    require(y_r.cols() == mu.cols(), "eenn: column count mismatch");
    Matrix x(y_r.rows() + mu.rows(), y_r.cols());
    x.topRows(y_r.rows()) = y_r;
    x.bottomRows(mu.rows()) = mu;
    const Matrix g = net_.forward_batch(normalizer_.normalize(x));
    Matrix out = y_r + dt_ * (g.array().colwise() * output_scale_.array()).matrix();
    if (!out.allFinite()) throw NumericalError("eenn: non-finite one-step output");
    return out;
}

namespace {

// Per-layer Adam state.
struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<Vector> mb, vb;
    long t = 0;

    explicit AdamState(const MlpNetwork& net) {
        for (const auto& w : net.weights) {
            mw.push_back(Matrix::Zero(w.rows(), w.cols()));
            vw.push_back(Matrix::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : net.biases) {
            mb.push_back(Vector::Zero(b.size()));
            vb.push_back(Vector::Zero(b.size()));
        }
    }
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// One forward/backward pass over a batch followed by an Adam update.
// Returns the batch MSE before the update.
double train_batch(MlpNetwork& net, AdamState& adam, const Matrix& X, const Matrix& T,
                   double lr) {
    MlpGradients grads;
    const double loss = mlp_mse_and_gradients(net, X, T, &grads);

    adam.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam.t));
    for (std::size_t li = 0; li < net.weights.size(); ++li) {
        auto& mw = adam.mw[li];
        auto& vw = adam.vw[li];
        mw = kAdamBeta1 * mw + (1.0 - kAdamBeta1) * grads.weights[li];
        vw = kAdamBeta2 * vw + (1.0 - kAdamBeta2) * grads.weights[li].cwiseProduct(grads.weights[li]);
        net.weights[li].array() -=
            lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + kAdamEps);

        auto& mb = adam.mb[li];
        auto& vb = adam.vb[li];
        mb = kAdamBeta1 * mb + (1.0 - kAdamBeta1) * grads.biases[li];
        vb = kAdamBeta2 * vb + (1.0 - kAdamBeta2) * grads.biases[li].cwiseProduct(grads.biases[li]);
        net.biases[li].array() -=
            lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + kAdamEps);
    }
    return loss;
}

double weighted_mse(const MlpNetwork& net, const Matrix& X, const Matrix& T, const Vector& w) {
    const Matrix diff = net.forward_batch(X) - T;
    return (diff.array().colwise() * w.array()).square().mean();
}

}  // namespace

double mlp_mse_and_gradients(const MlpNetwork& net, const Matrix& X, const Matrix& T,
                             MlpGradients* grads) {
    require(X.cols() == T.cols(), "mlp gradients: sample count mismatch");
    const std::size_t layers = net.weights.size();
    std::vector<Matrix> acts(layers + 1);
    acts[0] = X;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = (net.weights[l] * acts[l]).colwise() + net.biases[l];
        if (l + 1 < layers) z = z.cwiseMax(0.0);
        acts[l + 1] = std::move(z);
    }

    const double inv = 1.0 / static_cast<double>(T.size());
    const Matrix diff = acts[layers] - T;
    const double loss = diff.squaredNorm() * inv;
    if (!grads) return loss;

    grads->weights.resize(layers);
    grads->biases.resize(layers);
    Matrix delta = 2.0 * inv * diff;
    for (std::size_t li = layers; li-- > 0;) {
        grads->weights[li] = delta * acts[li].transpose();
        grads->biases[li] = delta.rowwise().sum();
        if (li > 0) {
            delta = (net.weights[li].transpose() * delta).array() *
                    (acts[li].array() > 0.0).cast<double>();
        }
    }
    return loss;
}

MlpFitResult fit_mlp(const Matrix& inputs, const Matrix& targets, const TrainingConfig& cfg,
                     const Vector& val_weights) {
    cfg.validate();
    require(inputs.cols() == targets.cols(), "fit_mlp: sample count mismatch");
    require(inputs.cols() >= 2, "fit_mlp: need at least 2 samples");
    if (!inputs.allFinite() || !targets.allFinite()) {
        throw NumericalError("fit_mlp: non-finite training data");
    }

    const Index samples = inputs.cols();
    Vector w = val_weights;
    if (w.size() == 0) w = Vector::Ones(targets.rows());
    require(w.size() == targets.rows(), "fit_mlp: weight size mismatch");

    std::vector<Index> sizes;
    sizes.push_back(inputs.rows());
    for (Index h : cfg.hidden_sizes) sizes.push_back(h);
    sizes.push_back(targets.rows());

    Rng rng(cfg.seed);
    MlpNetwork net = make_mlp(sizes, rng);

    // Deterministic split: shuffle once, tail becomes the held-out set.
    std::vector<Index> order(static_cast<std::size_t>(samples));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    Index val_count = static_cast<Index>(std::lround(cfg.validation_split * samples));
    val_count = std::clamp<Index>(val_count, 1, samples - 1);
    std::vector<Index> train_idx(order.begin(), order.end() - val_count);
    const std::vector<Index> val_idx(order.end() - val_count, order.end());

    const Matrix x_val = inputs(Eigen::all, val_idx);
    const Matrix t_val = targets(Eigen::all, val_idx);

    TrainingHistory hist;
    hist.val_indices = val_idx;
    hist.initial_val_loss = weighted_mse(net, x_val, t_val, w);
    hist.best_val_loss = hist.initial_val_loss;
    hist.best_epoch = 0;

    MlpNetwork best = net;
    AdamState adam(net);
    double lr = cfg.learning_rate;
    Index plateau = 0;
    Index since_best = 0;

    for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        Index seen = 0;
        for (std::size_t at = 0; at < train_idx.size(); at += cfg.batch_size) {
            const std::size_t stop = std::min(at + cfg.batch_size, train_idx.size());
            const std::vector<Index> batch(train_idx.begin() + at, train_idx.begin() + stop);
            const Matrix xb = inputs(Eigen::all, batch);
            const Matrix tb = targets(Eigen::all, batch);
            const double loss = train_batch(net, adam, xb, tb, lr);
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += static_cast<Index>(batch.size());
        }
        epoch_loss /= static_cast<double>(seen);
        const double val = weighted_mse(net, x_val, t_val, w);
        if (!std::isfinite(epoch_loss) || !std::isfinite(val)) {
            throw NumericalError("fit_mlp: training diverged at epoch " + std::to_string(epoch));
        }
        hist.train_loss.push_back(epoch_loss);
        hist.val_loss.push_back(val);
        hist.epochs = epoch;

        if (val < hist.best_val_loss) {
            hist.best_val_loss = val;
            hist.best_epoch = epoch;
            best = net;
            plateau = 0;
            since_best = 0;
        } else {
            ++plateau;
            ++since_best;
        }

        if (hist.best_val_loss <= cfg.loss_tol) {
            hist.reached_loss_tol = true;
            break;
        }
        if (since_best >= cfg.early_stop_patience) break;
        if (plateau >= cfg.lr_patience) {
            lr *= cfg.lr_decay;
            plateau = 0;
        }
    }

    hist.final_learning_rate = lr;
    return {std::move(best), std::move(hist)};
}

EennTrainResult train_eenn(const ReducedBasis& basis, const InputNormalizer& normalizer,
                           double dt, const Matrix& joint_inputs, const Matrix& next_states,
                           const TrainingConfig& cfg) {
    require(dt > 0.0, "train_eenn: dt must be positive");
    const Index n = basis.dim();
    require(joint_inputs.rows() == normalizer.dim(), "train_eenn: joint input width mismatch");
    require(next_states.rows() == n, "train_eenn: next-state width mismatch");
    require(joint_inputs.cols() == next_states.cols(), "train_eenn: sample count mismatch");

    const Matrix x_norm = normalizer.normalize(joint_inputs);
    const Matrix increments = (next_states - joint_inputs.topRows(n)) / dt;

    // Per-coordinate scale from the target spread; degenerate coordinates
    // keep scale 1 so the network simply learns zero there.
    Vector scale(n);
    for (Index j = 0; j < n; ++j) {
        const double mean = increments.row(j).mean();
        const double var = (increments.row(j).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    const Matrix targets = increments.array().colwise() / scale.array();

    // Selection metric weights make the tracked validation loss equal the
    // MSE of the predicted next reduced state.
    const Vector val_weights = dt * scale;
    auto fit = fit_mlp(x_norm, targets, cfg, val_weights);

    EennRom rom(basis, std::move(fit.net), normalizer, scale, dt);
    return {std::move(rom), std::move(fit.history)};
}

Matrix rollout(const RomBase& rom, const Vector& y_r0, const ParameterSchedule& schedule,
               Index steps) {
    require(steps >= 0, "rollout: negative step count");
    const double t0 = schedule.start_time();
    const double h = rom.dt();
    require(schedule.covers(t0, t0 + h * static_cast<double>(steps)),
            "rollout: schedule does not cover the rollout window");

    Matrix traj(y_r0.size(), steps + 1);
    traj.col(0) = y_r0;
    for (Index i = 0; i < steps; ++i) {
        const Vector mu = schedule(t0 + h * static_cast<double>(i));
        Vector next;
        try {
            next = rom.step(traj.col(i), mu);
        } catch (const NumericalError&) {
            throw NumericalError("rollout: diverged at step " + std::to_string(i + 1));
        }
        if (!next.allFinite()) {
            throw NumericalError("rollout: diverged at step " + std::to_string(i + 1));
        }
        traj.col(i + 1) = std::move(next);
    }
    return traj;
}

double trajectory_relative_error(const Matrix& predicted, const Matrix& reference) {
    require(predicted.rows() == reference.rows() && predicted.cols() == reference.cols(),
            "trajectory_relative_error: shape mismatch");
    require(predicted.cols() >= 1, "trajectory_relative_error: empty trajectories");
    double sum = 0.0;
    for (Index i = 0; i < predicted.cols(); ++i) {
        const double ref_norm = reference.col(i).norm();
        if (ref_norm == 0.0) {
            throw NumericalError("trajectory_relative_error: zero-norm reference column " +
                                 std::to_string(i));
        }
        sum += (predicted.col(i) - reference.col(i)).norm() / ref_norm;
    }
    return sum / static_cast<double>(predicted.cols());
}

double one_step_error(const RomBase& rom, const JointSample& sample, const Vector& ref_full) {
    const double ref_norm = ref_full.norm();
    if (ref_norm == 0.0) throw NumericalError("one_step_error: zero-norm reference");
    const Vector y_r = sample.lifted.size() > 0 ? rom.basis().project(sample.lifted)
                                                : sample.y_r;
    const Vector lifted_out = rom.basis().reconstruct(rom.step(y_r, sample.mu));
    return (lifted_out - ref_full).norm() / ref_norm;
}

}  // namespace alrom
