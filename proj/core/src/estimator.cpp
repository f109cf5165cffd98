#include "alrom/estimator.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace alrom {

void RbfKernelParams::validate() const {
    require(sigma_f > 0.0, "rbf kernel: sigma_f must be positive");
    require(lengthscale > 0.0, "rbf kernel: lengthscale must be positive");
}

double rbf_kernel(const Vector& a, const Vector& b, const RbfKernelParams& params) {
    require(a.size() == b.size(), "rbf_kernel: dimension mismatch");
    const double d2 = (a - b).squaredNorm();
    return params.sigma_f * params.sigma_f *
           std::exp(-d2 / (2.0 * params.lengthscale * params.lengthscale));
}

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

// Pairwise squared distances between the columns of A.
Matrix pairwise_sq_dist(const Matrix& A) {
    const Vector sq = A.colwise().squaredNorm();
    Matrix d2 = (-2.0 * A.transpose() * A);
    d2.colwise() += sq;
    d2.rowwise() += sq.transpose();
    return d2.cwiseMax(0.0);
}

Matrix kernel_from_sq_dist(const Matrix& d2, const RbfKernelParams& p) {
    const double s2 = p.sigma_f * p.sigma_f;
    const double inv = 1.0 / (2.0 * p.lengthscale * p.lengthscale);
    return s2 * (-inv * d2.array()).exp();
}

// Factorize K + jitter I, escalating the jitter tenfold on failure.
struct Factorization {
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;
};

Factorization factorize_with_jitter(const Matrix& kernel) {
    Factorization f;
    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0001; jitter *= 10.0) {
        Matrix k = kernel;
        k.diagonal().array() += jitter;
        f.llt.compute(k);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw NumericalError(
        "gpr: kernel factorization failed even at jitter 1e-4 "
        "(duplicate inputs or pathological lengthscale)");
}

}  // namespace

double GprModel::predict(const Vector& j_normalized) const {
    require(j_normalized.size() == train_inputs_.rows(), "gpr: input dimension mismatch");
    const double s2 = params_.sigma_f * params_.sigma_f;
    const double inv = 1.0 / (2.0 * params_.lengthscale * params_.lengthscale);
    const Vector d2 =
        (train_inputs_.colwise() - j_normalized).colwise().squaredNorm().transpose();
    return (s2 * (-inv * d2.array()).exp()).matrix().dot(alpha_);
}

Vector GprModel::predict_batch(const Matrix& j_normalized) const {
    require(j_normalized.rows() == train_inputs_.rows(), "gpr: input dimension mismatch");
    const double s2 = params_.sigma_f * params_.sigma_f;
    const double inv = 1.0 / (2.0 * params_.lengthscale * params_.lengthscale);
    const Vector train_sq = train_inputs_.colwise().squaredNorm();
    const Vector query_sq = j_normalized.colwise().squaredNorm();
    // d2(i, q) = ||x_i||^2 + ||j_q||^2 - 2 x_i . j_q
    Matrix d2 = -2.0 * train_inputs_.transpose() * j_normalized;
    d2.colwise() += train_sq;
    d2.rowwise() += query_sq.transpose();
    const Matrix k = s2 * (-inv * d2.cwiseMax(0.0).array()).exp();
    return k.transpose() * alpha_;
}

GprModel fit_gpr(const Matrix& joint_inputs, const Vector& errors,
                 const RbfKernelParams& params, const InputNormalizer& normalizer) {
    params.validate();
    require(joint_inputs.cols() == errors.size(), "fit_gpr: input/error count mismatch");
    require(errors.size() >= 1, "fit_gpr: empty training set");

    const Matrix x = normalizer.normalize(joint_inputs);
    const Matrix kernel = kernel_from_sq_dist(pairwise_sq_dist(x), params);
    const Factorization f = factorize_with_jitter(kernel);
    Vector alpha = f.llt.solve(errors);
    return GprModel(params, x, std::move(alpha), f.jitter);
}

std::vector<double> lengthscale_grid() {
    constexpr int kPoints = 20;
    constexpr double lo = 0.05, hi = 5.0;
    std::vector<double> grid(kPoints);
    for (int k = 0; k < kPoints; ++k) {
        grid[static_cast<std::size_t>(k)] =
            lo * std::pow(hi / lo, static_cast<double>(k) / (kPoints - 1));
    }
    return grid;
}

TuneResult tune_hyperparams(const Matrix& joint_inputs, const Vector& errors,
                            const InputNormalizer& normalizer) {
    require(joint_inputs.cols() == errors.size(), "tune_hyperparams: count mismatch");
    require(errors.size() >= 5, "tune_hyperparams: need at least 5 points");

    const double mean = errors.mean();
    const double sd = std::sqrt((errors.array() - mean).square().mean());

    TuneResult result;
    if (sd <= 1e-12) {
        result.params = {1e-12, std::sqrt(0.05 * 5.0)};  // geometric mid of the grid range
        result.degenerate = true;
        return result;
    }

    const Matrix x = normalizer.normalize(joint_inputs);
    const Matrix d2 = pairwise_sq_dist(x);
    const double s = static_cast<double>(errors.size());
    const double log2pi = std::log(2.0 * M_PI);

    double best_lml = -std::numeric_limits<double>::infinity();
    RbfKernelParams best{sd, lengthscale_grid().front()};
    for (double l : lengthscale_grid()) {
        const RbfKernelParams p{sd, l};
        const Matrix kernel = kernel_from_sq_dist(d2, p);
        Factorization f;
        try {
            f = factorize_with_jitter(kernel);
        } catch (const NumericalError&) {
            continue;  // skip pathological grid points
        }
        const Vector alpha = f.llt.solve(errors);
        const double log_det = f.llt.matrixLLT().diagonal().array().log().sum();
        const double lml = -0.5 * errors.dot(alpha) - log_det - 0.5 * s * log2pi;
        if (lml > best_lml) {
            best_lml = lml;
            best = p;
        }
    }
    result.params = best;
    result.best_log_marginal = best_lml;
    return result;
}

}  // namespace alrom
