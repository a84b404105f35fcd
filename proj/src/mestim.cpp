#include "mwsub/mestim.hpp"

#include <cmath>

#include "mwsub/errors.hpp"
#include "mwsub/kernels.hpp"
#include "mwsub/linalg.hpp"

namespace mwsub {

namespace {

double loss_bar(const TwoWayPanel& panel, const SketchMask& mask, const LossModel& model,
                const Eigen::VectorXd& theta) {
    const Eigen::VectorXd total = kernels::masked_eval_total(
        mask, 1, [&](std::size_t c, Eigen::VectorXd& acc) {
            acc(0) += model.loss(panel.record(c), theta);
        });
    return total(0) / static_cast<double>(mask.L_hat());
}

Eigen::VectorXd grad_bar(const TwoWayPanel& panel, const SketchMask& mask,
                         const LossModel& model, const Eigen::VectorXd& theta) {
    Eigen::VectorXd total = kernels::masked_eval_total(
        mask, model.k, [&](std::size_t c, Eigen::VectorXd& acc) {
            Eigen::VectorXd g(model.k);
            model.gradient(panel.record(c), theta, g);
            acc += g;
        });
    return total / static_cast<double>(mask.L_hat());
}

Eigen::MatrixXd hess_bar(const TwoWayPanel& panel, const SketchMask& mask,
                         const LossModel& model, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd total = kernels::masked_eval_matrix_total(
        mask, model.k, model.k, [&](std::size_t c, Eigen::MatrixXd& acc) {
            acc += model.hess(panel.record(c), theta);
        });
    return total / static_cast<double>(mask.L_hat());
}

ValueMatrix score_values(const TwoWayPanel& panel, const SketchMask& mask,
                         const LossModel& model, const Eigen::VectorXd& theta) {
    ValueMatrix values = ValueMatrix::Zero(static_cast<Eigen::Index>(panel.n_obs()), model.k);
    const auto& cells = mask.selected_cells;
    const std::int64_t n = static_cast<std::int64_t>(cells.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const std::size_t c = cells[static_cast<std::size_t>(idx)];
        Eigen::VectorXd g(model.k);
        model.gradient(panel.record(c), theta, g);
        values.row(static_cast<Eigen::Index>(c)) = g;
    }
    return values;
}

}  // namespace

MFit m_fit(const TwoWayPanel& panel, const SketchMask& mask, const LossModel& model,
           const MOptions& options, VarianceMode mode) {
    if (mask.L_hat() == 0) {
        throw Error(ErrorCode::EmptySketch, "sketch mask selects no cells");
    }
    if (mask.L_hat() < static_cast<std::size_t>(model.k)) {
        throw Error(ErrorCode::SingularHessian,
                    "sketch selected fewer cells than parameters");
    }

    Eigen::VectorXd theta = options.theta0.size() > 0
                                ? options.theta0
                                : Eigen::VectorXd::Zero(model.k);
    if (theta.size() != model.k) {
        throw Error(ErrorCode::DimensionMismatch, "theta0 has wrong dimension");
    }

    double scale = 1.0;
    double value = loss_bar(panel, mask, model, theta);
    int steps = 0;
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const Eigen::VectorXd grad = grad_bar(panel, mask, model, theta);
        if (iter == 0) scale = 1.0 + grad.lpNorm<Eigen::Infinity>();
        if (grad.lpNorm<Eigen::Infinity>() < options.tolerance * scale) {
            MFit fit;
            fit.theta_hat = theta;
            fit.iterations = steps;
            fit.converged = true;
            MVariance var = m_variance(panel, mask, model, theta, mode);
            fit.H_tilde = std::move(var.H_tilde);
            fit.sigma = std::move(var.sigma);
            fit.sandwich = std::move(var.sandwich);
            fit.std_error = std::move(var.std_error);
            fit.degenerate = var.degenerate;
            return fit;
        }
        if (iter == options.max_iterations) break;

        Eigen::MatrixXd hess = hess_bar(panel, mask, model, theta);
        GuardedSymSolver solver(hess, ErrorCode::SingularHessian, "average loss Hessian");
        Eigen::VectorXd delta = -solver.solve(grad);
        if (grad.dot(delta) >= 0.0) {
            // Non-descent direction (indefinite Hessian): identity ridge.
            const double ridge = 1e-8 * hess.trace();
            hess.diagonal().array() += ridge;
            GuardedSymSolver ridged(hess, ErrorCode::SingularHessian,
                                    "ridged loss Hessian");
            delta = -ridged.solve(grad);
        }
        const double slope = grad.dot(delta);

        double t = 1.0;
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving) {
            const Eigen::VectorXd cand = theta + t * delta;
            const double cand_value = loss_bar(panel, mask, model, cand);
            if (cand_value <= value + 1e-4 * t * slope) {
                theta = cand;
                value = cand_value;
                moved = true;
                ++steps;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }

    std::string msg = "Newton did not converge within " +
                      std::to_string(options.max_iterations) + " iterations";
    if (model.kind == LossModel::Kind::Logistic &&
        theta.lpNorm<Eigen::Infinity>() > 1e3) {
        msg += "; |theta| exceeds 1e3, which suggests perfect separation";
    }
    throw Error(ErrorCode::NonConvergence, msg);
}

MVariance m_variance(const TwoWayPanel& panel, const SketchMask& mask,
                     const LossModel& model, const Eigen::VectorXd& theta_hat,
                     VarianceMode mode) {
    if (!theta_hat.allFinite()) {
        throw Error(ErrorCode::NonConvergence, "theta_hat is not finite");
    }
    const PanelDims d = dims(panel);

    const SketchMask full = mode == VarianceMode::FullSample ? SketchMask::full(panel)
                                                             : SketchMask{};
    const SketchMask& vmask = mode == VarianceMode::FullSample ? full : mask;

    MVariance out;
    out.H_tilde = -hess_bar(panel, vmask, model, theta_hat);

    const ValueMatrix scores = score_values(panel, vmask, model, theta_hat);
    Eigen::MatrixXd sigma1 = gamma_A_hat(panel, vmask, scores, d.C_bar);
    Eigen::MatrixXd sigma2 = gamma_B_hat(panel, vmask, scores);
    const double lam = lambda_hat(d, panel.n_obs(), mask.p);
    out.sigma = combine_variance(std::move(sigma1), std::move(sigma2), lam);

    out.degenerate = false;
    for (Eigen::Index l = 0; l < model.k; ++l) {
        if (out.sigma.gamma(l, l) <= 1e-12 * out.sigma.gamma_B(l, l)) {
            out.degenerate = true;
        }
    }

    GuardedSymSolver inner(out.H_tilde, ErrorCode::SingularHessian, "H_tilde");
    out.sandwich = sandwich_covariance(inner, out.sigma.gamma);

    out.std_error.resize(model.k);
    for (Eigen::Index l = 0; l < model.k; ++l) {
        out.std_error(l) =
            std::sqrt(std::max(out.sandwich(l, l), 0.0) / static_cast<double>(d.C_bar));
    }
    return out;
}

}  // namespace mwsub
