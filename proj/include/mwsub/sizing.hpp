#pragma once

#include <cstdint>

#include "mwsub/kernels.hpp"
#include "mwsub/panel.hpp"

namespace mwsub {

/// Output of the data-driven subsample-rate chooser. When `feasible`,
/// substituting c_star back into
///   gamma_A_pre + (C_bar/n_obs) * ((C_bar - c)/c) * gamma_B_pre
/// reproduces C_bar * V_max (to rounding).
struct SizingResult {
    double c_star = 0.0;
    double p_star = 0.0;   // c_star / C_bar
    double gamma_A_pre = 0.0;
    double gamma_B_pre = 0.0;
    double V_max = 0.0;
    double c_pre = 0.0;
    std::size_t L_pre = 0;  // preliminary sketch size
    bool feasible = false;
    bool small_subsample_warning = false;  // n_obs * p_star < 30
    std::uint64_t seed = 0;
};

/// Algebraic core: solve C_bar*V_max = gA + (C_bar/n_obs)*((C_bar-c)/c)*gB
/// for c. Throws TargetBelowIrreducible (C_bar*V_max <= gA) and
/// DegeneratePreliminary (gB <= 0).
SizingResult solve_c_star(double gamma_A_pre, double gamma_B_pre, const PanelDims& dims,
                          std::size_t n_obs, double V_max);

/// Full procedure: draw a preliminary mask at p_pre = min(c_pre/C_bar, 1),
/// estimate the variance components of the scalar functional `values`
/// (one column, centered at the preliminary subsample mean), and invert
/// the variance target for c_star. Throws TargetBelowIrreducible,
/// DegeneratePreliminary, EmptySketch.
SizingResult choose_c_star(const TwoWayPanel& panel, const ValueMatrix& values,
                           double c_pre, double V_max, std::uint64_t seed);

}  // namespace mwsub
