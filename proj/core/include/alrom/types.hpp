#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace alrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad or inconsistent run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: diverged training, singular solve, exhausted
/// rejection budget (CLI exit code 3).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Missing, corrupt, or incompatible persisted artifact (CLI exit code 4).
struct ArtifactError : std::runtime_error {
    explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace alrom
