#include "mwsub/sketch.hpp"

#include <numeric>

#include "mwsub/errors.hpp"
#include "mwsub/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mwsub {

namespace {

void check_rate(double p) {
    if (!(p > 0.0) || p > 1.0) {
        throw Error(ErrorCode::InvalidRate,
                    "selection probability must lie in (0, 1], got " + std::to_string(p));
    }
}

void finalize(SketchMask& mask) {
    const std::size_t n = mask.selected.size();
    std::size_t count = 0;
    for (std::size_t c = 0; c < n; ++c) count += mask.selected[c];
    mask.selected_cells.clear();
    mask.selected_cells.reserve(count);
    for (std::size_t c = 0; c < n; ++c) {
        if (mask.selected[c]) mask.selected_cells.push_back(c);
    }
}

}  // namespace

SketchMask SketchMask::full(const TwoWayPanel& panel) {
    SketchMask mask;
    mask.p = 1.0;
    mask.seed = 0;
    mask.L_expected = static_cast<double>(panel.n_obs());
    mask.selected.assign(panel.n_obs(), 1);
    mask.selected_cells.resize(panel.n_obs());
    std::iota(mask.selected_cells.begin(), mask.selected_cells.end(), std::size_t{0});
    return mask;
}

SketchMask SketchMask::from_cells(const TwoWayPanel& panel,
                                  const std::vector<std::size_t>& cells, double p,
                                  std::uint64_t seed) {
    check_rate(p);
    SketchMask mask;
    mask.p = p;
    mask.seed = seed;
    mask.L_expected = static_cast<double>(panel.n_obs()) * p;
    mask.selected.assign(panel.n_obs(), 0);
    for (std::size_t c : cells) mask.selected.at(c) = 1;
    finalize(mask);
    return mask;
}

SketchMask generate_mask(const TwoWayPanel& panel, const SketchConfig& config) {
    check_rate(config.p);
    if (panel.n_obs() == 0) {
        throw Error(ErrorCode::EmptyPanel, "cannot sketch an empty panel");
    }

    SketchMask mask;
    mask.p = config.p;
    mask.seed = config.seed;
    mask.L_expected = static_cast<double>(panel.n_obs()) * config.p;
    mask.selected.assign(panel.n_obs(), 0);

    const std::uint64_t key = rng::derive(config.seed, "bernoulli-mask");
    const double p = config.p;
    const std::int64_t n = static_cast<std::int64_t>(panel.n_obs());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t c = 0; c < n; ++c) {
        mask.selected[static_cast<std::size_t>(c)] =
            rng::uniform01(key, static_cast<std::uint64_t>(c)) < p ? 1 : 0;
    }

    finalize(mask);
    if (mask.selected_cells.empty()) {
        throw Error(ErrorCode::EmptySketch,
                    "Bernoulli sketch selected no cells; retry with a new seed or larger p");
    }
    return mask;
}

double lambda_hat(const PanelDims& dims, std::size_t n_obs, double p) {
    check_rate(p);
    return (static_cast<double>(dims.C_bar) / static_cast<double>(n_obs)) *
           ((1.0 - p) / p);
}

double resolve_p_rule(const PRule& rule, const PanelDims& dims) {
    switch (rule.kind) {
        case PRule::Kind::Full:
            return 1.0;
        case PRule::Kind::COverCbar: {
            if (!(rule.value > 0.0)) {
                throw Error(ErrorCode::InvalidRate,
                            "c must be positive, got " + std::to_string(rule.value));
            }
            const double p = rule.value / static_cast<double>(dims.C_bar);
            return p < 1.0 ? p : 1.0;
        }
        case PRule::Kind::Explicit:
            check_rate(rule.value);
            return rule.value;
    }
    throw Error(ErrorCode::InvalidRate, "unknown p rule");
}

}  // namespace mwsub
