#include "mwsub/sizing.hpp"

#include "mwsub/errors.hpp"
#include "mwsub/moments.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {

SizingResult solve_c_star(double gamma_A_pre, double gamma_B_pre, const PanelDims& dims,
                          std::size_t n_obs, double V_max) {
    if (!(V_max > 0.0)) {
        throw Error(ErrorCode::UsageError, "V_max must be positive");
    }
    const double C = static_cast<double>(dims.C_bar);
    const double target = C * V_max;
    if (!(target > gamma_A_pre)) {
        throw Error(ErrorCode::TargetBelowIrreducible,
                    "C_bar * V_max <= gamma_A_pre: the variance target is unreachable "
                    "even with the full sample");
    }
    if (!(gamma_B_pre > 0.0)) {
        throw Error(ErrorCode::DegeneratePreliminary,
                    "preliminary gamma_B is zero; the functional shows no variation");
    }

    SizingResult out;
    out.gamma_A_pre = gamma_A_pre;
    out.gamma_B_pre = gamma_B_pre;
    out.V_max = V_max;
    // (C_bar - c)/c = R  with  R = (n_obs/C_bar) * (C_bar*V_max - gA) / gB
    const double R = (static_cast<double>(n_obs) / C) * (target - gamma_A_pre) / gamma_B_pre;
    out.c_star = C / (1.0 + R);
    out.p_star = out.c_star / C;
    out.feasible = true;
    out.small_subsample_warning = static_cast<double>(n_obs) * out.p_star < 30.0;
    return out;
}

SizingResult choose_c_star(const TwoWayPanel& panel, const ValueMatrix& values,
                           double c_pre, double V_max, std::uint64_t seed) {
    if (values.cols() != 1) {
        throw Error(ErrorCode::UsageError,
                    "the rate chooser sizes a scalar functional; pass one column "
                    "(size vector targets on their worst coordinate)");
    }
    if (!(c_pre > 0.0)) {
        throw Error(ErrorCode::UsageError, "c_pre must be positive");
    }
    const PanelDims d = dims(panel);

    SketchConfig config;
    config.p = std::min(c_pre / static_cast<double>(d.C_bar), 1.0);
    config.seed = seed;
    const SketchMask pre = generate_mask(panel, config);

    const Eigen::VectorXd mean = subsample_mean(panel, pre, values);
    const ValueMatrix centered = values.rowwise() - mean.transpose();
    const double gA = gamma_A_hat(panel, pre, centered, d.C_bar)(0, 0);
    const double gB = gamma_B_hat(panel, pre, centered)(0, 0);

    SizingResult out = solve_c_star(gA, gB, d, panel.n_obs(), V_max);
    out.c_pre = c_pre;
    out.L_pre = pre.L_hat();
    out.seed = seed;
    return out;
}

}  // namespace mwsub
