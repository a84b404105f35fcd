#include "mwsub/gmm.hpp"

#include <cmath>

#include "mwsub/errors.hpp"
#include "mwsub/kernels.hpp"
#include "mwsub/linalg.hpp"

namespace mwsub {

namespace {

Eigen::MatrixXd jac_bar(const TwoWayPanel& panel, const SketchMask& mask,
                        const MomentModel& model, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd total = kernels::masked_eval_matrix_total(
        mask, model.m, model.k, [&](std::size_t c, Eigen::MatrixXd& acc) {
            acc += model.jac(panel.record(c), theta);
        });
    return total / static_cast<double>(mask.L_hat());
}

ValueMatrix moment_values(const TwoWayPanel& panel, const SketchMask& mask,
                          const MomentModel& model, const Eigen::VectorXd& theta) {
    ValueMatrix values = ValueMatrix::Zero(static_cast<Eigen::Index>(panel.n_obs()), model.m);
    const auto& cells = mask.selected_cells;
    const std::int64_t n = static_cast<std::int64_t>(cells.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const std::size_t c = cells[static_cast<std::size_t>(idx)];
        Eigen::VectorXd g(model.m);
        model.evaluate(panel.record(c), theta, g);
        values.row(static_cast<Eigen::Index>(c)) = g;
    }
    return values;
}

Eigen::MatrixXd resolve_weight(Eigen::MatrixXd V_hat, Eigen::Index m) {
    if (V_hat.size() == 0) return Eigen::MatrixXd::Identity(m, m);
    if (V_hat.rows() != m || V_hat.cols() != m) {
        throw Error(ErrorCode::DimensionMismatch,
                    "weight matrix must be m x m with m the moment dimension");
    }
    return V_hat;
}

/// Closed-form solution of the linear IV first-order condition
/// (G' V G) theta = G' V g_y with G the subsample average of z x' and
/// g_y the subsample average of z y.
Eigen::VectorXd linear_iv_solve(const TwoWayPanel& panel, const SketchMask& mask,
                                const MomentModel& model, const Eigen::MatrixXd& V) {
    const Eigen::Index m = model.m;
    const Eigen::Index k = model.k;
    Eigen::MatrixXd zx_y = kernels::masked_eval_matrix_total(
        mask, m, k + 1, [&](std::size_t c, Eigen::MatrixXd& acc) {
            const auto w = panel.record(c);
            for (Eigen::Index r = 0; r < m; ++r) {
                const double zr = w(static_cast<Eigen::Index>(model.z_indices[r]));
                for (Eigen::Index l = 0; l < k; ++l) {
                    acc(r, l) += zr * w(static_cast<Eigen::Index>(model.x_indices[l]));
                }
                acc(r, k) += zr * w(static_cast<Eigen::Index>(model.y_index));
            }
        });
    zx_y /= static_cast<double>(mask.L_hat());
    const Eigen::MatrixXd G = zx_y.leftCols(k);
    const Eigen::VectorXd g_y = zx_y.col(k);

    const Eigen::MatrixXd GtV = G.transpose() * V;
    GuardedSymSolver solver(GtV * G, ErrorCode::SingularDesign, "G'VG");
    return solver.solve(GtV * g_y);
}

struct GaussNewtonResult {
    Eigen::VectorXd theta;
    int iterations = 0;
};

GaussNewtonResult gauss_newton(const TwoWayPanel& panel, const SketchMask& mask,
                               const MomentModel& model, const Eigen::MatrixXd& V,
                               const GmmOptions& options) {
    Eigen::VectorXd theta = options.theta0.size() > 0
                                ? options.theta0
                                : Eigen::VectorXd::Zero(model.k);
    if (theta.size() != model.k) {
        throw Error(ErrorCode::DimensionMismatch, "theta0 has wrong dimension");
    }

    auto objective = [&](const Eigen::VectorXd& t) {
        const Eigen::VectorXd g = g_bar(panel, mask, model, t);
        return g.dot(V * g);
    };

    double scale = 1.0;
    double q = objective(theta);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd g = g_bar(panel, mask, model, theta);
        const Eigen::MatrixXd J = jac_bar(panel, mask, model, theta);
        const Eigen::VectorXd grad = J.transpose() * (V * g);
        if (iter == 0) scale = 1.0 + grad.lpNorm<Eigen::Infinity>();
        if (grad.lpNorm<Eigen::Infinity>() < options.tolerance * scale) {
            return {theta, iter};
        }

        GuardedSymSolver solver(J.transpose() * V * J, ErrorCode::SingularDesign,
                                "J'VJ");
        const Eigen::VectorXd delta = -solver.solve(grad);
        const double slope = grad.dot(delta);

        double t = 1.0;
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving) {
            const Eigen::VectorXd cand = theta + t * delta;
            const double q_cand = objective(cand);
            if (q_cand <= q + 1e-4 * t * slope) {
                theta = cand;
                q = q_cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;  // stalled; the cap below reports NonConvergence
    }
    throw Error(ErrorCode::NonConvergence,
                "Gauss-Newton did not converge within " +
                    std::to_string(options.max_iterations) + " iterations");
}

}  // namespace

Eigen::VectorXd g_bar(const TwoWayPanel& panel, const SketchMask& mask,
                      const MomentModel& model, const Eigen::VectorXd& theta) {
    if (mask.L_hat() == 0) {
        throw Error(ErrorCode::EmptySketch, "sketch mask selects no cells");
    }
    Eigen::VectorXd total = kernels::masked_eval_total(
        mask, model.m, [&](std::size_t c, Eigen::VectorXd& acc) {
            Eigen::VectorXd g(model.m);
            model.evaluate(panel.record(c), theta, g);
            acc += g;
        });
    return total / static_cast<double>(mask.L_hat());
}

GmmVariance gmm_variance(const TwoWayPanel& panel, const SketchMask& mask,
                         const MomentModel& model, const Eigen::VectorXd& theta_hat,
                         const Eigen::MatrixXd& V_hat, VarianceMode mode,
                         bool center_moments) {
    if (!theta_hat.allFinite()) {
        throw Error(ErrorCode::NonConvergence, "theta_hat is not finite");
    }
    const PanelDims d = dims(panel);
    const Eigen::MatrixXd V = resolve_weight(V_hat, model.m);

    const SketchMask full = mode == VarianceMode::FullSample ? SketchMask::full(panel)
                                                             : SketchMask{};
    const SketchMask& vmask = mode == VarianceMode::FullSample ? full : mask;

    GmmVariance out;
    out.G_tilde = jac_bar(panel, vmask, model, theta_hat);

    ValueMatrix values = moment_values(panel, vmask, model, theta_hat);
    if (center_moments) {
        const Eigen::VectorXd mean = subsample_mean(panel, vmask, values);
        for (std::size_t c : vmask.selected_cells) {
            values.row(static_cast<Eigen::Index>(c)) -= mean.transpose();
        }
    }
    Eigen::MatrixXd gamma1 = gamma_A_hat(panel, vmask, values, d.C_bar);
    Eigen::MatrixXd gamma2 = gamma_B_hat(panel, vmask, values);
    const double lam = lambda_hat(d, panel.n_obs(), mask.p);

    out.degenerate = false;
    out.omega = combine_variance(std::move(gamma1), std::move(gamma2), lam);
    for (Eigen::Index r = 0; r < model.m; ++r) {
        if (out.omega.gamma(r, r) <= 1e-12 * out.omega.gamma_B(r, r)) {
            out.degenerate = true;
        }
    }

    const Eigen::MatrixXd GtV = out.G_tilde.transpose() * V;
    GuardedSymSolver inner(GtV * out.G_tilde, ErrorCode::SingularDesign, "G'VG");
    const Eigen::MatrixXd meat = GtV * out.omega.gamma * GtV.transpose();
    out.sandwich = sandwich_covariance(inner, meat);

    out.std_error.resize(model.k);
    for (Eigen::Index l = 0; l < model.k; ++l) {
        out.std_error(l) =
            std::sqrt(std::max(out.sandwich(l, l), 0.0) / static_cast<double>(d.C_bar));
    }
    return out;
}

GmmFit gmm_fit(const TwoWayPanel& panel, const SketchMask& mask, const MomentModel& model,
               Eigen::MatrixXd V_hat, const GmmOptions& options, VarianceMode mode) {
    if (mask.L_hat() < static_cast<std::size_t>(model.k)) {
        throw Error(ErrorCode::SingularDesign,
                    "sketch selected fewer cells than parameters");
    }
    Eigen::MatrixXd V = resolve_weight(std::move(V_hat), model.m);

    GmmFit fit;
    auto solve_point = [&](const Eigen::MatrixXd& weight) {
        if (model.kind == MomentModel::Kind::LinearIV) {
            fit.theta_hat = linear_iv_solve(panel, mask, model, weight);
            fit.iterations = 1;
        } else {
            const GaussNewtonResult r = gauss_newton(panel, mask, model, weight, options);
            fit.theta_hat = r.theta;
            fit.iterations = r.iterations;
        }
    };

    solve_point(V);
    if (options.two_step) {
        ValueMatrix values = moment_values(panel, mask, model, fit.theta_hat);
        const Eigen::MatrixXd gamma2 = gamma_B_hat(panel, mask, values);
        GuardedSymSolver gamma2_solver(gamma2, ErrorCode::SingularDesign,
                                       "two-step weight Gamma_2");
        V = gamma2_solver.inverse();
        V = 0.5 * (V + V.transpose());
        solve_point(V);
    }
    fit.converged = true;
    fit.V_hat = V;
    fit.g_bar = g_bar(panel, mask, model, fit.theta_hat);

    GmmVariance var = gmm_variance(panel, mask, model, fit.theta_hat, V, mode,
                                   options.center_moments);
    fit.G_tilde = std::move(var.G_tilde);
    fit.omega = std::move(var.omega);
    fit.sandwich = std::move(var.sandwich);
    fit.std_error = std::move(var.std_error);
    fit.degenerate = var.degenerate;
    return fit;
}

}  // namespace mwsub
