#pragma once

#include <Eigen/Dense>

#include "mwsub/kernels.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {

/// Decomposition of the sketched-mean asymptotic variance:
/// gamma = gamma_A + lambda_hat * gamma_B. gamma_A carries the two-way
/// cluster covariance, gamma_B the own-variance term that keeps inference
/// alive when the cluster component degenerates.
struct VarianceComponents {
    Eigen::MatrixXd gamma_A;
    Eigen::MatrixXd gamma_B;
    double lambda_hat = 0.0;
    Eigen::MatrixXd gamma;
};

enum class VarianceMode {
    Subsample,   // variance components from the selected cells
    FullSample,  // variance components from every present cell
};

struct InferenceReport {
    Eigen::VectorXd estimate;
    VarianceComponents variance;
    std::int64_t C_bar = 0;
    Eigen::VectorXd std_error;  // sqrt(diag(gamma) / C_bar), negatives clamped to 0
    Eigen::VectorXd ci_lower;
    Eigen::VectorXd ci_upper;
    double alpha = 0.05;
    std::size_t L_hat = 0;
    double p = 1.0;
    bool degenerate_flag = false;
};

/// (1/L_hat) * sum of selected values. Throws EmptySketch.
Eigen::VectorXd subsample_mean(const TwoWayPanel& panel, const SketchMask& mask,
                               const ValueMatrix& values);

/// Own-variance component: (1/L_hat) * sum of v v^T over selected cells.
Eigen::MatrixXd gamma_B_hat(const TwoWayPanel& panel, const SketchMask& mask,
                            const ValueMatrix& values);

/// Cluster component via grouped sums:
/// (C_bar/L_hat^2) * [ sum_i S_i S_i^T + sum_j T_j T_j^T ] with S_i / T_j
/// the selected row / column sums. Equals the double-sum form exactly,
/// diagonal pairs included.
Eigen::MatrixXd gamma_A_hat(const TwoWayPanel& panel, const SketchMask& mask,
                            const ValueMatrix& values, std::int64_t C_bar);

/// gamma = gamma_A + lambda_hat * gamma_B. Throws DimensionMismatch,
/// InvalidRate (lambda_hat < 0).
VarianceComponents combine_variance(Eigen::MatrixXd gamma_A, Eigen::MatrixXd gamma_B,
                                    double lambda_hat);

/// Point estimate, variance decomposition, and normal confidence interval
/// for E[f(W)]. The values are centered at the estimate before the
/// variance pass; lambda_hat always uses the sketch rate `mask.p`, also
/// in FullSample mode.
InferenceReport mean_inference(const TwoWayPanel& panel, const SketchMask& mask,
                               const ValueMatrix& values, double alpha,
                               VarianceMode mode);

}  // namespace mwsub
