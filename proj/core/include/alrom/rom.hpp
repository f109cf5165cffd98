#pragma once

#include <cstdint>
#include <vector>

#include "alrom/reduction.hpp"
#include "alrom/rng.hpp"
#include "alrom/types.hpp"

namespace alrom {

/// Fully-connected network with rectifier activations between consecutive
/// layers and an identity output layer. Weights are stored as out x in
/// matrices; inputs and outputs are column vectors (batches are columns).
struct MlpNetwork {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    Index layer_count() const { return static_cast<Index>(weights.size()) + 1; }
    Index input_dim() const { return weights.front().cols(); }
    Index output_dim() const { return weights.back().rows(); }
    std::vector<Index> layer_sizes() const;

    Vector forward(const Vector& x) const;
    Matrix forward_batch(const Matrix& X) const;

    /// Jacobian of the network output with respect to the input at x
    /// (product of the masked weight matrices).
    Matrix input_jacobian(const Vector& x) const;
};

/// He-style variance-scaled initialization, seeded.
MlpNetwork make_mlp(const std::vector<Index>& sizes, Rng& rng);

/// Per-feature affine map taking the joint box onto the unit box. Degenerate
/// features (zero width) map to 0.
struct InputNormalizer {
    Vector shift;
    Vector scale;  // strictly positive

    Index dim() const { return shift.size(); }
    Vector normalize(const Vector& x) const;
    Matrix normalize(const Matrix& X) const;
};

InputNormalizer make_normalizer(const ReducedBox& loosened_box, const ParameterSpace& space);
InputNormalizer make_normalizer(const Vector& lower, const Vector& upper);

struct TrainingConfig {
    Index max_epochs = 2000;
    Index batch_size = 128;
    double learning_rate = 1e-3;
    double lr_decay = 0.5;          // multiplier applied on validation plateau
    Index lr_patience = 10;         // epochs without improvement before decay
    Index early_stop_patience = 50; // epochs without improvement before stopping
    double validation_split = 0.1;
    double loss_tol = 1e-8;         // stop once the validation loss falls below
    std::vector<Index> hidden_sizes{80, 80};
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainingHistory {
    std::vector<double> train_loss;  // optimized (scaled-target) MSE per epoch
    std::vector<double> val_loss;    // selection metric per epoch (see fit_mlp)
    double initial_val_loss = 0.0;
    double best_val_loss = 0.0;
    Index best_epoch = 0;  // 0 = initialization
    Index epochs = 0;
    double final_learning_rate = 0.0;
    bool reached_loss_tol = false;
    std::vector<Index> val_indices;  // held-out columns of the input set
};

/// MSE of net(X) against T and, when `grads` is non-null, its gradients with
/// respect to every weight and bias (plain backpropagation).
struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};
double mlp_mse_and_gradients(const MlpNetwork& net, const Matrix& X, const Matrix& T,
                             MlpGradients* grads);

/// One-step reduced-order model interface: advances a reduced state by the
/// fixed step size under a parameter vector. Implementations are immutable
/// and safe for concurrent use.
class RomBase {
public:
    virtual ~RomBase() = default;

    virtual const ReducedBasis& basis() const = 0;
    virtual double dt() const = 0;
    virtual Vector step(const Vector& y_r, const Vector& mu) const = 0;

    /// Columnwise step; the default loops over step().
    virtual Matrix step_batch(const Matrix& y_r, const Matrix& mu) const;
};

/// Residual network time stepper: y' = y + dt * s .* net([y; mu] normalized),
/// with s the recorded per-coordinate output scale.
class EennRom final : public RomBase {
public:
    EennRom(ReducedBasis basis, MlpNetwork net, InputNormalizer normalizer,
            Vector output_scale, double dt);

    const ReducedBasis& basis() const override { return basis_; }
    double dt() const override { return dt_; }
    Vector step(const Vector& y_r, const Vector& mu) const override;
    Matrix step_batch(const Matrix& y_r, const Matrix& mu) const override;

    /// The learned reduced right-hand side g(y_r, mu).
    Vector rhs(const Vector& y_r, const Vector& mu) const;

    const MlpNetwork& net() const { return net_; }
    const InputNormalizer& normalizer() const { return normalizer_; }
    const Vector& output_scale() const { return output_scale_; }

private:
    ReducedBasis basis_;
    MlpNetwork net_;
    InputNormalizer normalizer_;
    Vector output_scale_;
    double dt_;
};

/// Reference ROM that calls the full-order model through the basis; useful
/// as an upper-bound oracle (its only error is projection error). Holds a
/// non-owning pointer to the model.
class ProjectedFomRom final : public RomBase {
public:
    ProjectedFomRom(const FomModel* fom, ReducedBasis basis, double dt)
        : fom_(fom), basis_(std::move(basis)), dt_(dt) {}

    const ReducedBasis& basis() const override { return basis_; }
    double dt() const override { return dt_; }
    Vector step(const Vector& y_r, const Vector& mu) const override {
        return basis_.project(fom_->step(basis_.reconstruct(y_r), mu, dt_));
    }

private:
    const FomModel* fom_;
    ReducedBasis basis_;
    double dt_;
};

/// Supervised MLP fit: minimizes the mean-squared error of net(X) against T
/// with Adam, mini-batches, plateau learning-rate decay and early stopping.
/// The selection metric tracked on the held-out split is the MSE of the
/// predictions with per-output weights `val_weights` applied (defaults to
/// unweighted); the returned network is the best one seen under that metric,
/// never worse than the initialization.
struct MlpFitResult {
    MlpNetwork net;
    TrainingHistory history;
};
MlpFitResult fit_mlp(const Matrix& inputs, const Matrix& targets, const TrainingConfig& cfg,
                     const Vector& val_weights = Vector());

/// Train a residual time stepper from raw joint inputs [y_r; mu] and next
/// reduced states (columns). Inputs are normalized with `normalizer`,
/// targets are the increments (y' - y)/dt scaled per coordinate by their
/// standard deviation, and the validation metric is the unscaled MSE on the
/// predicted next reduced state.
struct EennTrainResult {
    EennRom rom;
    TrainingHistory history;
};
EennTrainResult train_eenn(const ReducedBasis& basis, const InputNormalizer& normalizer,
                           double dt, const Matrix& joint_inputs, const Matrix& next_states,
                           const TrainingConfig& cfg);

/// Iterated one-step predictions; parameters for step i are evaluated at
/// t_0 + i*dt. Returns the K+1 reduced states including the initial one.
/// Divergence (non-finite state) raises NumericalError naming the step.
Matrix rollout(const RomBase& rom, const Vector& y_r0, const ParameterSchedule& schedule,
               Index steps);

/// Mean over columns of ||pred - ref|| / ||ref||.
double trajectory_relative_error(const Matrix& predicted, const Matrix& reference);

/// Full-space relative error of one ROM step against a reference output.
/// The input reduced state is re-projected from the sample's cached lifted
/// state when present (so refreshed bases are handled), else sample.y_r is
/// used as-is.
double one_step_error(const RomBase& rom, const JointSample& sample, const Vector& ref_full);

}  // namespace alrom
