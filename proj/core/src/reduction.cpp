#include "alrom/reduction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace alrom {

Vector ReducedBasis::project(const Vector& y) const {
    require(y.size() == V.rows(), "project: state size mismatch");
    return V.transpose() * y;
}

Matrix ReducedBasis::project(const Matrix& Y) const {
    require(Y.rows() == V.rows(), "project: state size mismatch");
    return V.transpose() * Y;
}

Vector ReducedBasis::reconstruct(const Vector& y_r) const {
    require(y_r.size() == V.cols(), "reconstruct: reduced size mismatch");
    return V * y_r;
}

Matrix ReducedBasis::reconstruct(const Matrix& Y_r) const {
    require(Y_r.rows() == V.cols(), "reconstruct: reduced size mismatch");
    return V * Y_r;
}

double ReducedBasis::captured_energy() const {
    const double total = singular_values.squaredNorm();
    if (total == 0.0) return 1.0;
    return singular_values.head(V.cols()).squaredNorm() / total;
}

namespace {

void fix_column_signs(Matrix& V) {
    for (Index j = 0; j < V.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < V.rows(); ++i) {
            const double a = std::abs(V(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (V(arg, j) < 0.0) V.col(j) = -V.col(j);
    }
}

// Loewdin polish: V <- V (V^T V)^{-1/2}. Restores orthonormality to machine
// precision with the smallest possible rotation of the columns.
void symmetric_orthonormalize(Matrix& V) {
    const Matrix G = V.transpose() * V;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    const Vector inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    V = V * (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose());
}

}  // namespace

ReducedBasis pod(const Matrix& snapshots, Index n) {
    const Index rows = snapshots.rows();
    const Index cols = snapshots.cols();
    require(cols >= 1 && rows >= 1, "pod: empty snapshot matrix");
    require(n >= 1 && n <= std::min(rows, cols), "pod: dimension out of range");
    if (!snapshots.allFinite()) throw NumericalError("pod: non-finite snapshots");

    ReducedBasis basis;
    const Index small_side = std::min(rows, cols);

    if (small_side <= 512) {
        Eigen::JacobiSVD<Matrix> svd(snapshots, Eigen::ComputeThinU);
        basis.V = svd.matrixU().leftCols(n);
        basis.singular_values = svd.singularValues();
    } else if (cols <= rows) {
        // Gram on the column side: eigenpairs of Y^T Y, lifted through Y.
        const Matrix gram = Matrix(cols, cols).setZero().selfadjointView<Eigen::Lower>().rankUpdate(
            snapshots.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        if (eig.info() != Eigen::Success) throw NumericalError("pod: eigensolver failed");
        basis.singular_values = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
        basis.V.resize(rows, n);
        for (Index j = 0; j < n; ++j) {
            const Index src = cols - 1 - j;
            const double sigma = basis.singular_values[j];
            if (sigma <= 0.0) throw NumericalError("pod: rank deficient below requested dimension");
            basis.V.col(j) = snapshots * (eig.eigenvectors().col(src) / sigma);
        }
        symmetric_orthonormalize(basis.V);
    } else {
        // Gram on the row side: eigenvectors of Y Y^T are the left singular
        // vectors directly.
        const Matrix gram =
            Matrix(rows, rows).setZero().selfadjointView<Eigen::Lower>().rankUpdate(snapshots);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        if (eig.info() != Eigen::Success) throw NumericalError("pod: eigensolver failed");
        basis.singular_values = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt().head(rows);
        basis.V.resize(rows, n);
        for (Index j = 0; j < n; ++j) {
            basis.V.col(j) = eig.eigenvectors().col(rows - 1 - j);
        }
    }

    fix_column_signs(basis.V);
    return basis;
}

bool ReducedBox::contains(const Vector& y_r, double tol) const {
    if (y_r.size() != dim()) return false;
    for (Index i = 0; i < dim(); ++i) {
        if (y_r[i] < lower[i] - tol || y_r[i] > upper[i] + tol) return false;
    }
    return true;
}

ReducedBox estimate_reduced_box(const Matrix& y_estimate, const ReducedBasis& basis) {
    require(y_estimate.cols() >= 1, "estimate_reduced_box: empty snapshot matrix");
    const Matrix projected = basis.project(y_estimate);
    ReducedBox box;
    box.lower = projected.rowwise().minCoeff();
    box.upper = projected.rowwise().maxCoeff();
    box.beta = 0.0;
    return box;
}

ReducedBox loosen(const ReducedBox& box, double beta) {
    require(beta >= 0.0, "loosen: beta must be >= 0");
    const Vector margin = beta * box.width();
    ReducedBox out;
    out.lower = box.lower - margin;
    out.upper = box.upper + margin;
    out.beta = box.beta + beta * (1.0 + 2.0 * box.beta);
    return out;
}

TrimLimits trim_limits_from_snapshots(const Matrix& snapshots) {
    require(snapshots.size() > 0, "trim limits: empty snapshot matrix");
    return {snapshots.minCoeff(), snapshots.maxCoeff()};
}

bool trim_accepts(const ReducedBasis& basis, const Vector& y_r, const TrimLimits& limits) {
    const Vector lifted = basis.reconstruct(y_r);
    return lifted.maxCoeff() < limits.y_max && lifted.minCoeff() > limits.y_min;
}

Matrix JointSet::joint() const {
    Matrix J(y_r.rows() + mu.rows(), size());
    J.topRows(y_r.rows()) = y_r;
    J.bottomRows(mu.rows()) = mu;
    return J;
}

JointSet sample_joint(const ReducedBox& box, const ParameterSpace& space,
                      const ReducedBasis& basis, const TrimLimits& limits, Index count,
                      Rng& rng, Index max_attempts, bool cache_lifted) {
    require(count >= 1, "sample_joint: count must be >= 1");
    require(box.dim() == basis.dim(), "sample_joint: box/basis dimension mismatch");
    if (max_attempts <= 0) max_attempts = 1000 * count;

    JointSet set;
    set.y_r.resize(box.dim(), count);
    set.mu.resize(space.dim(), count);
    if (cache_lifted) set.lifted.resize(basis.full_dim(), count);

    Index accepted = 0;
    Index attempts = 0;
    Vector candidate(box.dim());
    while (accepted < count) {
        if (attempts >= max_attempts) {
            const double rate = static_cast<double>(accepted) / static_cast<double>(attempts);
            throw NumericalError(
                "sample_joint: rejection budget exhausted after " + std::to_string(attempts) +
                " attempts (acceptance rate " + std::to_string(rate) +
                "); the trim limits reject nearly the whole box");
        }
        ++attempts;
        for (Index i = 0; i < box.dim(); ++i) {
            candidate[i] = rng.uniform(box.lower[i], box.upper[i]);
        }
        const Vector lifted = basis.reconstruct(candidate);
        if (!(lifted.maxCoeff() < limits.y_max && lifted.minCoeff() > limits.y_min)) continue;

        set.y_r.col(accepted) = candidate;
        set.mu.col(accepted) = space.sample(rng);
        if (cache_lifted) set.lifted.col(accepted) = lifted;
        ++accepted;
    }
    set.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(attempts);
    return set;
}

}  // namespace alrom
