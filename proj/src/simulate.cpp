#include "mwsub/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "mwsub/errors.hpp"
#include "mwsub/rng.hpp"

namespace mwsub {

DesignSpec DesignSpec::design(int id, std::int64_t N, std::int64_t M) {
    DesignSpec d;
    d.id = id;
    d.N = N;
    d.M = M;
    switch (id) {
        case 1:
            d.family = Family::Separable;
            d.sigma_a2 = 0.5;
            d.sigma_b2 = 0.1;
            d.sigma_e2 = 0.2;
            break;
        case 2:
            d.family = Family::Separable;
            d.sigma_a2 = 0.0;
            d.sigma_b2 = 0.0;
            d.sigma_e2 = 0.2;
            break;
        case 3:
            d.family = Family::Nonseparable;
            d.mu_a = 1.0;
            d.mu_b = 1.0;
            break;
        case 4:
            d.family = Family::Nonseparable;
            d.mu_a = 0.0;
            d.mu_b = 0.0;
            break;
        default:
            throw Error(ErrorCode::UsageError,
                        "design must be 1, 2, 3, or 4; got " + std::to_string(id));
    }
    return d;
}

namespace {

void check_sizes(std::int64_t N, std::int64_t M) {
    if (N < 1 || M < 1) {
        throw Error(ErrorCode::UsageError, "panel sizes must satisfy N >= 1 and M >= 1");
    }
}

TwoWayPanel panel_from_y(std::int64_t N, std::int64_t M, ValueMatrix y) {
    return TwoWayPanel::balanced(N, M, std::move(y), {"y"});
}

}  // namespace

TwoWayPanel compose_separable(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                              const Eigen::VectorXd& eps, double sigma_a2,
                              double sigma_b2, double sigma_e2) {
    const std::int64_t N = alpha.size();
    const std::int64_t M = beta.size();
    check_sizes(N, M);
    if (eps.size() != N * M) {
        throw Error(ErrorCode::DimensionMismatch, "eps must have N*M entries");
    }
    if (sigma_a2 < 0.0 || sigma_b2 < 0.0 || sigma_e2 < 0.0) {
        throw Error(ErrorCode::UsageError, "variances must be non-negative");
    }
    const double sa = std::sqrt(sigma_a2);
    const double sb = std::sqrt(sigma_b2);
    const double se = std::sqrt(sigma_e2);

    ValueMatrix y(N * M, 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < N; ++i) {
        for (std::int64_t j = 0; j < M; ++j) {
            y(i * M + j, 0) = sa * alpha(i) + sb * beta(j) + se * eps(i * M + j);
        }
    }
    return panel_from_y(N, M, std::move(y));
}

TwoWayPanel compose_nonseparable(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& eps, double mu_a, double mu_b) {
    const std::int64_t N = alpha.size();
    const std::int64_t M = beta.size();
    check_sizes(N, M);
    if (eps.size() != N * M) {
        throw Error(ErrorCode::DimensionMismatch, "eps must have N*M entries");
    }

    ValueMatrix y(N * M, 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < N; ++i) {
        for (std::int64_t j = 0; j < M; ++j) {
            y(i * M + j, 0) =
                (alpha(i) - mu_a) * (beta(j) - mu_b) - mu_a * mu_b + eps(i * M + j);
        }
    }
    return panel_from_y(N, M, std::move(y));
}

TwoWayPanel dgp_separable(std::int64_t N, std::int64_t M, double sigma_a2,
                          double sigma_b2, double sigma_e2, std::uint64_t seed) {
    check_sizes(N, M);
    const std::uint64_t ka = rng::derive(seed, "alpha");
    const std::uint64_t kb = rng::derive(seed, "beta");
    const std::uint64_t ke = rng::derive(seed, "eps");

    // Standardized log-normal: mean e^{1/2}, variance (e-1)e.
    const double mu_zeta = std::exp(0.5);
    const double sd_zeta = std::sqrt((std::exp(1.0) - 1.0) * std::exp(1.0));

    Eigen::VectorXd alpha(N), beta(M), eps(N * M);
    for (std::int64_t i = 0; i < N; ++i) {
        const double zeta = std::exp(rng::normal(ka, static_cast<std::uint64_t>(i)));
        alpha(i) = (zeta - mu_zeta) / sd_zeta;
    }
    for (std::int64_t j = 0; j < M; ++j) {
        beta(j) = rng::normal(kb, static_cast<std::uint64_t>(j));
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t c = 0; c < N * M; ++c) {
        eps(c) = rng::normal(ke, static_cast<std::uint64_t>(c));
    }
    return compose_separable(alpha, beta, eps, sigma_a2, sigma_b2, sigma_e2);
}

TwoWayPanel dgp_nonseparable(std::int64_t N, std::int64_t M, double mu_a, double mu_b,
                             std::uint64_t seed) {
    check_sizes(N, M);
    const std::uint64_t ka = rng::derive(seed, "alpha");
    const std::uint64_t kb = rng::derive(seed, "beta");
    const std::uint64_t ke = rng::derive(seed, "eps");

    Eigen::VectorXd alpha(N), beta(M), eps(N * M);
    for (std::int64_t i = 0; i < N; ++i) {
        alpha(i) = rng::normal(ka, static_cast<std::uint64_t>(i));
    }
    for (std::int64_t j = 0; j < M; ++j) {
        beta(j) = rng::normal(kb, static_cast<std::uint64_t>(j));
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t c = 0; c < N * M; ++c) {
        eps(c) = rng::normal(ke, static_cast<std::uint64_t>(c));
    }
    return compose_nonseparable(alpha, beta, eps, mu_a, mu_b);
}

TwoWayPanel draw_panel(const DesignSpec& design, std::uint64_t seed) {
    if (design.family == DesignSpec::Family::Separable) {
        return dgp_separable(design.N, design.M, design.sigma_a2, design.sigma_b2,
                             design.sigma_e2, seed);
    }
    return dgp_nonseparable(design.N, design.M, design.mu_a, design.mu_b, seed);
}

std::string p_rule_name(const PRule& rule) {
    std::ostringstream name;
    switch (rule.kind) {
        case PRule::Kind::Full:
            return "full";
        case PRule::Kind::COverCbar:
            name << "c=" << rule.value;
            return name.str();
        case PRule::Kind::Explicit:
            name << "p=" << rule.value;
            return name.str();
    }
    return "?";
}

MetricsRow run_experiment(const DesignSpec& design, const PRule& rule, int reps,
                          VarianceMode variance_mode, std::uint64_t base_seed) {
    if (reps < 2) {
        throw Error(ErrorCode::UsageError, "need at least 2 replications");
    }

    std::vector<double> estimates(static_cast<std::size_t>(reps), 0.0);
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(reps), 0);
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(reps));

    const std::uint64_t run_key = rng::derive(base_seed, "replication");
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
    for (int r = 0; r < reps; ++r) {
        try {
            const std::uint64_t rep_key = rng::derive(run_key, static_cast<std::uint64_t>(r));
            const TwoWayPanel panel = draw_panel(design, rng::derive(rep_key, "panel"));
            const double p = resolve_p_rule(rule, dims(panel));

            SketchMask mask;
            const std::uint64_t mask_key = rng::derive(rep_key, "mask");
            for (int attempt = 0;; ++attempt) {
                try {
                    mask = generate_mask(
                        panel, SketchConfig{p, rng::derive(mask_key,
                                                           static_cast<std::uint64_t>(attempt))});
                    break;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::EmptySketch || attempt >= 10) throw;
                }
            }

            const InferenceReport report = mean_inference(
                panel, mask, panel.field_column(0), 0.05, variance_mode);
            estimates[static_cast<std::size_t>(r)] = report.estimate(0);
            covered[static_cast<std::size_t>(r)] =
                (report.ci_lower(0) <= design.truth && design.truth <= report.ci_upper(0))
                    ? 1
                    : 0;
        } catch (...) {
            failures[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    // Fixed-order aggregation keeps the row identical for any thread count.
    double sum = 0.0;
    for (double e : estimates) sum += e;
    const double mean = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    const double sd = std::sqrt(ss / static_cast<double>(reps - 1));
    std::size_t hits = 0;
    for (std::uint8_t c : covered) hits += c;

    MetricsRow row;
    row.design = design.id;
    row.N = design.N;
    row.M = design.M;
    row.p_rule = p_rule_name(rule);
    row.reps = reps;
    row.bias = mean - design.truth;
    row.sd = sd;
    row.rmse = std::sqrt(row.bias * row.bias + sd * sd);
    row.coverage95 = static_cast<double>(hits) / static_cast<double>(reps);
    return row;
}

TableReport table_report(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) {
        throw Error(ErrorCode::EmptyReport, "no rows to report");
    }
    TableReport report;

    std::ostringstream text;
    char line[160];
    std::snprintf(line, sizeof(line), "%6s %6s %6s %10s %6s %9s %9s %9s %9s\n",
                  "design", "N", "M", "rule", "reps", "bias", "sd", "rmse", "cover95");
    text << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line),
                      "%6d %6lld %6lld %10s %6d %9.4f %9.4f %9.4f %9.4f\n", r.design,
                      static_cast<long long>(r.N), static_cast<long long>(r.M),
                      r.p_rule.c_str(), r.reps, r.bias, r.sd, r.rmse, r.coverage95);
        text << line;
    }
    report.text = text.str();

    std::ostringstream csv;
    csv << "design,N,M,rule,reps,bias,sd,rmse,coverage95\n";
    csv.precision(17);
    for (const auto& r : rows) {
        csv << r.design << ',' << r.N << ',' << r.M << ',' << r.p_rule << ',' << r.reps
            << ',' << r.bias << ',' << r.sd << ',' << r.rmse << ',' << r.coverage95
            << '\n';
    }
    report.csv = csv.str();
    return report;
}

}  // namespace mwsub
