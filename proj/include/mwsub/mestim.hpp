#pragma once

#include <Eigen/Dense>

#include "mwsub/models.hpp"
#include "mwsub/moments.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {

struct MOptions {
    Eigen::VectorXd theta0;    // starting point (zeros if empty)
    int max_iterations = 200;
    double tolerance = 1e-10;  // relative first-order tolerance
};

struct MVariance {
    Eigen::MatrixXd H_tilde;    // -(1/L_hat) sum of loss Hessians at theta_hat
    VarianceComponents sigma;   // Sigma_1, Sigma_2, lambda_hat, Sigma
    Eigen::MatrixXd sandwich;   // H^{-1} Sigma H^{-1}
    Eigen::VectorXd std_error;  // sqrt(diag(sandwich) / C_bar)
    bool degenerate = false;
};

struct MFit {
    Eigen::VectorXd theta_hat;
    Eigen::MatrixXd H_tilde;
    VarianceComponents sigma;
    Eigen::MatrixXd sandwich;
    Eigen::VectorXd std_error;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

/// Newton minimization of the subsample average loss, with step halving
/// and an identity-ridge retry when a step fails to descend. Quadratic
/// losses converge in one step. Throws SingularHessian, NonConvergence
/// (with a separation hint for runaway logistic fits), EmptySketch.
MFit m_fit(const TwoWayPanel& panel, const SketchMask& mask, const LossModel& model,
           const MOptions& options = MOptions(),
           VarianceMode mode = VarianceMode::Subsample);

/// Variance pieces of Theorem-4 form at theta_hat. H_tilde is the
/// negative of the average loss Hessian; Sigma_1 / Sigma_2 are the
/// cluster and own-variance components over the score vectors.
/// Throws SingularHessian.
MVariance m_variance(const TwoWayPanel& panel, const SketchMask& mask,
                     const LossModel& model, const Eigen::VectorXd& theta_hat,
                     VarianceMode mode);

}  // namespace mwsub
