#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mwsub/moments.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/sketch.hpp"

namespace mwsub {

/// Data-generating designs for the coverage experiments. Built-ins:
///   1: separable,    sigma_a^2 = 0.5, sigma_b^2 = 0.1, sigma_e^2 = 0.2
///   2: separable,    sigma_a^2 = 0,   sigma_b^2 = 0,   sigma_e^2 = 0.2  (degenerate)
///   3: nonseparable, mu_a = 1, mu_b = 1
///   4: nonseparable, mu_a = 0, mu_b = 0  (degenerate, Gaussian-chaos limit)
/// All four have population mean 0.
struct DesignSpec {
    enum class Family { Separable, Nonseparable };

    Family family = Family::Separable;
    int id = 0;  // 1..4 for the built-ins, 0 for custom
    double sigma_a2 = 0.0, sigma_b2 = 0.0, sigma_e2 = 0.0;  // separable
    double mu_a = 0.0, mu_b = 0.0;                          // nonseparable
    std::int64_t N = 0, M = 0;
    double truth = 0.0;

    static DesignSpec design(int id, std::int64_t N, std::int64_t M);
};

/// Y_ij = sqrt(sa2) alpha_i + sqrt(sb2) beta_j + sqrt(se2) eps_ij from
/// given effect vectors (alpha: N, beta: M, eps: N*M with index i*M+j).
/// Exposed so tests can substitute deterministic streams.
TwoWayPanel compose_separable(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                              const Eigen::VectorXd& eps, double sigma_a2,
                              double sigma_b2, double sigma_e2);

/// Y_ij = (alpha_i - mu_a)(beta_j - mu_b) - mu_a mu_b + eps_ij.
TwoWayPanel compose_nonseparable(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& eps, double mu_a, double mu_b);

/// Separable draw: beta_j and eps_ij standard normal; alpha_i is the
/// standardized log-normal (zeta - e^{1/2}) / sqrt((e-1)e), log(zeta)
/// standard normal. All streams derive from `seed`; E[Y] = 0.
TwoWayPanel dgp_separable(std::int64_t N, std::int64_t M, double sigma_a2,
                          double sigma_b2, double sigma_e2, std::uint64_t seed);

/// Nonseparable draw: alpha, beta, eps i.i.d. standard normal; E[Y] = 0.
TwoWayPanel dgp_nonseparable(std::int64_t N, std::int64_t M, double mu_a, double mu_b,
                             std::uint64_t seed);

TwoWayPanel draw_panel(const DesignSpec& design, std::uint64_t seed);

struct MetricsRow {
    int design = 0;
    std::int64_t N = 0, M = 0;
    std::string p_rule;
    int reps = 0;
    double bias = 0.0;
    double sd = 0.0;
    double rmse = 0.0;       // sqrt(bias^2 + sd^2)
    double coverage95 = 0.0;
};

std::string p_rule_name(const PRule& rule);

/// One Monte Carlo cell: `reps` replications of draw-panel / draw-mask /
/// mean-inference at alpha = 0.05. Replications run concurrently, each on
/// its own derived streams; aggregation order is fixed, so results are
/// bit-identical for any thread count. An empty sketch is retried with a
/// fresh sub-seed up to 10 times, then the failure propagates.
MetricsRow run_experiment(const DesignSpec& design, const PRule& rule, int reps,
                          VarianceMode variance_mode, std::uint64_t base_seed);

struct TableReport {
    std::string text;  // aligned table
    std::string csv;   // machine-readable, full precision
};

/// Render rows in the sizes-by-rules layout. Throws EmptyReport.
TableReport table_report(const std::vector<MetricsRow>& rows);

}  // namespace mwsub
