#include "mwsub/linalg.hpp"

#include <cmath>
#include <string>

namespace mwsub {

GuardedSymSolver::GuardedSymSolver(const Eigen::MatrixXd& matrix, ErrorCode code,
                                   const char* what) {
    eigen_.compute(matrix);
    if (eigen_.info() != Eigen::Success) {
        throw Error(code, std::string(what) + ": eigendecomposition failed");
    }
    const Eigen::VectorXd mags = eigen_.eigenvalues().cwiseAbs();
    const double hi = mags.maxCoeff();
    const double lo = mags.minCoeff();
    condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(hi > 0.0) || condition_ > kMaxCondition) {
        throw Error(code, std::string(what) + ": matrix is singular or near-singular"
                          " (condition number > 1e12)");
    }
}

Eigen::MatrixXd GuardedSymSolver::solve(const Eigen::MatrixXd& rhs) const {
    const Eigen::VectorXd inv = eigen_.eigenvalues().cwiseInverse();
    return eigen_.eigenvectors() * inv.asDiagonal() *
           (eigen_.eigenvectors().transpose() * rhs);
}

Eigen::MatrixXd GuardedSymSolver::inverse() const {
    return solve(Eigen::MatrixXd::Identity(eigen_.eigenvalues().size(),
                                           eigen_.eigenvalues().size()));
}

Eigen::MatrixXd sandwich_covariance(const GuardedSymSolver& inner,
                                    const Eigen::MatrixXd& meat) {
    const Eigen::MatrixXd half = inner.solve(meat);
    Eigen::MatrixXd full = inner.solve(half.transpose()).transpose();
    return 0.5 * (full + full.transpose());
}

}  // namespace mwsub
