#include "mwsub/moments.hpp"

#include <cmath>

#include "mwsub/errors.hpp"
#include "mwsub/rng.hpp"

namespace mwsub {

namespace {

void require_nonempty(const SketchMask& mask) {
    if (mask.L_hat() == 0) {
        throw Error(ErrorCode::EmptySketch, "sketch mask selects no cells");
    }
}

void require_values(const TwoWayPanel& panel, const ValueMatrix& values) {
    if (values.rows() != static_cast<Eigen::Index>(panel.n_obs())) {
        throw Error(ErrorCode::DimensionMismatch,
                    "value matrix must have one row per panel cell");
    }
}

}  // namespace

Eigen::VectorXd subsample_mean(const TwoWayPanel& panel, const SketchMask& mask,
                               const ValueMatrix& values) {
    require_nonempty(mask);
    require_values(panel, values);
    return kernels::masked_total(mask, values) / static_cast<double>(mask.L_hat());
}

Eigen::MatrixXd gamma_B_hat(const TwoWayPanel& panel, const SketchMask& mask,
                            const ValueMatrix& values) {
    require_nonempty(mask);
    require_values(panel, values);
    return kernels::masked_outer_total(mask, values) / static_cast<double>(mask.L_hat());
}

Eigen::MatrixXd gamma_A_hat(const TwoWayPanel& panel, const SketchMask& mask,
                            const ValueMatrix& values, std::int64_t C_bar) {
    require_nonempty(mask);
    require_values(panel, values);
    const ValueMatrix S = kernels::row_sums(panel, mask, values);
    const ValueMatrix T = kernels::col_sums(panel, mask, values);

    const Eigen::Index k = values.cols();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index r = 0; r < S.rows(); ++r) {
        acc.selfadjointView<Eigen::Lower>().rankUpdate(S.row(r).transpose());
    }
    for (Eigen::Index c = 0; c < T.rows(); ++c) {
        acc.selfadjointView<Eigen::Lower>().rankUpdate(T.row(c).transpose());
    }
    const double L = static_cast<double>(mask.L_hat());
    Eigen::MatrixXd out = acc.selfadjointView<Eigen::Lower>();
    return out * (static_cast<double>(C_bar) / (L * L));
}

VarianceComponents combine_variance(Eigen::MatrixXd gamma_A, Eigen::MatrixXd gamma_B,
                                    double lambda_hat) {
    if (gamma_A.rows() != gamma_B.rows() || gamma_A.cols() != gamma_B.cols() ||
        gamma_A.rows() != gamma_A.cols()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "gamma_A and gamma_B must be square matrices of equal size");
    }
    if (lambda_hat < 0.0) {
        throw Error(ErrorCode::InvalidRate, "lambda_hat must be non-negative");
    }
    VarianceComponents vc;
    vc.gamma = gamma_A + lambda_hat * gamma_B;
    vc.gamma_A = std::move(gamma_A);
    vc.gamma_B = std::move(gamma_B);
    vc.lambda_hat = lambda_hat;
    return vc;
}

InferenceReport mean_inference(const TwoWayPanel& panel, const SketchMask& mask,
                               const ValueMatrix& values, double alpha,
                               VarianceMode mode) {
    require_nonempty(mask);
    require_values(panel, values);
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw Error(ErrorCode::UsageError, "alpha must lie in (0, 1)");
    }

    const PanelDims d = dims(panel);

    InferenceReport report;
    report.estimate = subsample_mean(panel, mask, values);
    report.C_bar = d.C_bar;
    report.alpha = alpha;
    report.L_hat = mask.L_hat();
    report.p = mask.p;

    const ValueMatrix centered = values.rowwise() - report.estimate.transpose();

    const SketchMask full = mode == VarianceMode::FullSample ? SketchMask::full(panel)
                                                             : SketchMask{};
    const SketchMask& vmask = mode == VarianceMode::FullSample ? full : mask;

    Eigen::MatrixXd gA = gamma_A_hat(panel, vmask, centered, d.C_bar);
    Eigen::MatrixXd gB = gamma_B_hat(panel, vmask, centered);
    const double lam = lambda_hat(d, panel.n_obs(), mask.p);
    report.variance = combine_variance(std::move(gA), std::move(gB), lam);

    // Degeneracy: diag(gamma) at or below 1e-12 * (uncentered second moment).
    const Eigen::VectorXd scale2 =
        kernels::masked_square_total(vmask, values) / static_cast<double>(vmask.L_hat());
    report.degenerate_flag = false;
    const Eigen::Index k = values.cols();
    report.std_error.resize(k);
    for (Eigen::Index l = 0; l < k; ++l) {
        const double g_ll = report.variance.gamma(l, l);
        if (g_ll <= 1e-12 * scale2(l)) report.degenerate_flag = true;
        report.std_error(l) =
            std::sqrt(std::max(g_ll, 0.0) / static_cast<double>(d.C_bar));
    }

    const double z = rng::normal_quantile(1.0 - alpha / 2.0);
    report.ci_lower = report.estimate - z * report.std_error;
    report.ci_upper = report.estimate + z * report.std_error;
    return report;
}

}  // namespace mwsub
