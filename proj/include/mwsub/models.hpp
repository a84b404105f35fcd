#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mwsub/panel.hpp"

namespace mwsub {

/// Moment restriction E[g(W, theta0)] = 0 with m >= k.
///
/// `jacobian` may be left empty, in which case central finite differences
/// of `evaluate` are used (step 1e-6 * max(1, |theta_l|)).
struct MomentModel {
    enum class Kind { LinearIV, Custom };

    Eigen::Index m = 0;  // moment dimension
    Eigen::Index k = 0;  // parameter dimension
    Kind kind = Kind::Custom;

    std::function<void(TwoWayPanel::RecordView, const Eigen::VectorXd&, Eigen::VectorXd&)>
        evaluate;
    std::function<void(TwoWayPanel::RecordView, const Eigen::VectorXd&, Eigen::MatrixXd&)>
        jacobian;

    // Field layout for the linear IV fast path: g = z * (y - x' theta).
    std::size_t y_index = 0;
    std::vector<std::size_t> x_indices;
    std::vector<std::size_t> z_indices;

    Eigen::VectorXd eval(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd jac(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const;
};

/// g(W, theta) = z * (y - x' theta); jacobian -z x' is constant in theta.
MomentModel linear_iv_model(const TwoWayPanel& panel, const std::string& y,
                            const std::vector<std::string>& x,
                            const std::vector<std::string>& z);

/// Central-difference Jacobian of `model.evaluate` at (w, theta).
Eigen::MatrixXd numeric_moment_jacobian(const MomentModel& model,
                                        TwoWayPanel::RecordView w,
                                        const Eigen::VectorXd& theta);

/// Smooth loss q(W, theta) minimized in the M-estimation module.
/// `hessian` may be left empty (central differences of `gradient`).
struct LossModel {
    enum class Kind { LeastSquares, Logistic, Custom };

    Eigen::Index k = 0;
    Kind kind = Kind::Custom;

    std::function<double(TwoWayPanel::RecordView, const Eigen::VectorXd&)> loss;
    std::function<void(TwoWayPanel::RecordView, const Eigen::VectorXd&, Eigen::VectorXd&)>
        gradient;
    std::function<void(TwoWayPanel::RecordView, const Eigen::VectorXd&, Eigen::MatrixXd&)>
        hessian;

    std::size_t y_index = 0;
    std::vector<std::size_t> x_indices;

    double loss_at(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const;
    Eigen::VectorXd grad(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd hess(TwoWayPanel::RecordView w, const Eigen::VectorXd& theta) const;
};

/// q = (y - x' theta)^2 / 2.
LossModel least_squares_model(const TwoWayPanel& panel, const std::string& y,
                              const std::vector<std::string>& x);

/// q = log(1 + exp(x' theta)) - y * x' theta, y in {0, 1}.
LossModel logistic_model(const TwoWayPanel& panel, const std::string& y,
                         const std::vector<std::string>& x);

Eigen::VectorXd numeric_loss_gradient(const LossModel& model, TwoWayPanel::RecordView w,
                                      const Eigen::VectorXd& theta);
Eigen::MatrixXd numeric_loss_hessian(const LossModel& model, TwoWayPanel::RecordView w,
                                     const Eigen::VectorXd& theta);

}  // namespace mwsub
