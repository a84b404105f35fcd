#pragma once

#include <Eigen/Dense>

#include "mwsub/models.hpp"
#include "mwsub/moments.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {

struct GmmOptions {
    Eigen::VectorXd theta0;        // starting point (zeros if empty)
    int max_iterations = 200;
    double tolerance = 1e-10;      // relative first-order tolerance
    bool two_step = false;         // re-weight with (Gamma_2 at step-1 theta)^{-1}
    bool center_moments = false;   // center moment values before the variance pass
};

struct GmmVariance {
    Eigen::MatrixXd G_tilde;       // m x k average Jacobian at theta_hat
    VarianceComponents omega;      // Gamma_1, Gamma_2, lambda_hat, Omega
    Eigen::MatrixXd sandwich;      // covariance of sqrt(C_bar) (theta_hat - theta0)
    Eigen::VectorXd std_error;     // sqrt(diag(sandwich) / C_bar)
    bool degenerate = false;
};

struct GmmFit {
    Eigen::VectorXd theta_hat;
    Eigen::VectorXd g_bar;         // subsample moment at theta_hat
    Eigen::MatrixXd G_tilde;
    Eigen::MatrixXd V_hat;         // weight actually used (after two-step)
    VarianceComponents omega;
    Eigen::MatrixXd sandwich;
    Eigen::VectorXd std_error;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

/// Subsample average of the moment function at theta. Throws EmptySketch.
Eigen::VectorXd g_bar(const TwoWayPanel& panel, const SketchMask& mask,
                      const MomentModel& model, const Eigen::VectorXd& theta);

/// Variance pieces of Theorem-2 form at a given theta_hat:
/// G_tilde, Omega = Gamma_1 + lambda_hat * Gamma_2, and the sandwich
/// (G'VG)^{-1} G'V Omega VG (G'VG)^{-1}. Throws SingularDesign.
GmmVariance gmm_variance(const TwoWayPanel& panel, const SketchMask& mask,
                         const MomentModel& model, const Eigen::VectorXd& theta_hat,
                         const Eigen::MatrixXd& V_hat, VarianceMode mode,
                         bool center_moments = false);

/// Point estimation plus variance. `V_hat` empty (0x0) means identity.
/// Linear IV solves the quadratic first-order condition in closed form;
/// custom models run Gauss-Newton with step halving. Throws
/// SingularDesign, NonConvergence, EmptySketch.
GmmFit gmm_fit(const TwoWayPanel& panel, const SketchMask& mask, const MomentModel& model,
               Eigen::MatrixXd V_hat = Eigen::MatrixXd(),
               const GmmOptions& options = GmmOptions(),
               VarianceMode mode = VarianceMode::Subsample);

}  // namespace mwsub
