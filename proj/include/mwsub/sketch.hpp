#pragma once

#include <cstdint>
#include <vector>

#include "mwsub/panel.hpp"

namespace mwsub {

struct SketchConfig {
    double p = 1.0;          // selection probability, in (0, 1]
    std::uint64_t seed = 0;  // stream seed; identical (panel, config) => identical mask
};

/// Realized Bernoulli selection over the cells of one panel. `selected`
/// is indexed by canonical cell index; `selected_cells` lists the chosen
/// indices in ascending order.
struct SketchMask {
    std::vector<std::uint8_t> selected;
    std::vector<std::size_t> selected_cells;
    double p = 1.0;
    double L_expected = 0.0;  // n_obs * p
    std::uint64_t seed = 0;

    std::size_t L_hat() const { return selected_cells.size(); }
    bool is_selected(std::size_t cell) const { return selected[cell] != 0; }

    /// Mask selecting every present cell (the p = 1 / full-sample mask).
    static SketchMask full(const TwoWayPanel& panel);

    /// Mask selecting exactly the given cells (test hook and mask
    /// transport under relabeling). `p` is recorded as given.
    static SketchMask from_cells(const TwoWayPanel& panel,
                                 const std::vector<std::size_t>& cells, double p,
                                 std::uint64_t seed = 0);
};

/// Draw Z_ij ~ Bernoulli(p) independently per present cell from the
/// counter-based stream keyed by `seed`; cell draws do not depend on
/// evaluation order. Throws InvalidRate and EmptySketch (L_hat = 0;
/// retry with a new seed or a larger p).
SketchMask generate_mask(const TwoWayPanel& panel, const SketchConfig& config);

/// Finite-sample plug-in for the Assumption-3 limit:
/// (C_bar / n_obs) * ((1 - p) / p). Throws InvalidRate.
double lambda_hat(const PanelDims& dims, std::size_t n_obs, double p);

/// Rule for choosing the selection probability.
struct PRule {
    enum class Kind { Full, COverCbar, Explicit };
    Kind kind = Kind::COverCbar;
    double value = 1.0;  // c for COverCbar, p for Explicit

    static PRule full() { return {Kind::Full, 1.0}; }
    static PRule c_over_cbar(double c) { return {Kind::COverCbar, c}; }
    static PRule explicit_p(double p) { return {Kind::Explicit, p}; }
};

/// Resolve a rule to a concrete probability: min(c/C_bar, 1) for the
/// c-over-C_bar rule, 1 for full, the given p otherwise. Throws InvalidRate.
double resolve_p_rule(const PRule& rule, const PanelDims& dims);

}  // namespace mwsub
