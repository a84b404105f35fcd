#pragma once

#include <Eigen/Dense>

#include "mwsub/errors.hpp"

namespace mwsub {

/// Factors a symmetric matrix by eigendecomposition and guards against
/// ill-conditioning: |lambda|_max / |lambda|_min > 1e12 (or a zero
/// spectrum) raises the supplied error code. Works for negative-definite
/// inputs too (M-estimation Hessians carry a sign).
class GuardedSymSolver {
public:
    GuardedSymSolver(const Eigen::MatrixXd& matrix, ErrorCode code, const char* what);

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::MatrixXd inverse() const;
    double condition() const { return condition_; }

    static constexpr double kMaxCondition = 1e12;

private:
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_;
    double condition_ = 0.0;
};

/// sandwich = inner^{-1} * meat * inner^{-1}, symmetrized against rounding.
Eigen::MatrixXd sandwich_covariance(const GuardedSymSolver& inner,
                                    const Eigen::MatrixXd& meat);

}  // namespace mwsub
