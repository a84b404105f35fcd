#include "mwsub/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "mwsub/errors.hpp"
#include "mwsub/gmm.hpp"
#include "mwsub/mestim.hpp"
#include "mwsub/moments.hpp"
#include "mwsub/panel.hpp"
#include "mwsub/rng.hpp"
#include "mwsub/simulate.hpp"
#include "mwsub/sizing.hpp"
#include "mwsub/sketch.hpp"
#include "mwsub/threading.hpp"

namespace mwsub {

namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mat_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

json variance_json(const VarianceComponents& vc, const char* a_name, const char* b_name,
                   const char* total_name) {
    json out;
    out[a_name] = mat_json(vc.gamma_A);
    out[b_name] = mat_json(vc.gamma_B);
    out["lambda_hat"] = vc.lambda_hat;
    out[total_name] = mat_json(vc.gamma);
    return out;
}

/// Sketch-rate flags shared by every data subcommand. At most one of
/// --p / --c-over-cbar / --full-sample may be given; none means c = 1,
/// the baseline rule.
struct SketchFlags {
    double p_value = 0.0;
    double c_value = 1.0;
    bool full = false;
    std::uint64_t seed = 0;
    CLI::Option* p_opt = nullptr;
    CLI::Option* c_opt = nullptr;

    void add_to(CLI::App* cmd) {
        auto* group = cmd->add_option_group("sketch", "subsample-rate selection");
        p_opt = group->add_option("--p", p_value, "explicit selection probability in (0,1]");
        c_opt = group->add_option("--c-over-cbar", c_value,
                                  "p = min(c / C_bar, 1) (default: c = 1)");
        group->add_flag("--full-sample", full, "p = 1, no sketching");
        group->require_option(0, 1);
        cmd->add_option("--seed", seed, "seed of the deterministic sketch stream");
    }

    PRule rule() const {
        if (full) return PRule::full();
        if (p_opt != nullptr && p_opt->count() > 0) return PRule::explicit_p(p_value);
        if (c_opt != nullptr && c_opt->count() > 0) return PRule::c_over_cbar(c_value);
        return PRule::c_over_cbar(1.0);
    }

    json config_json() const {
        const PRule r = rule();
        json out;
        switch (r.kind) {
            case PRule::Kind::Full: out["rule"] = "full"; break;
            case PRule::Kind::COverCbar:
                out["rule"] = "c-over-cbar";
                out["c"] = r.value;
                break;
            case PRule::Kind::Explicit:
                out["rule"] = "explicit-p";
                out["p"] = r.value;
                break;
        }
        out["seed"] = seed;
        return out;
    }
};

void write_or_print(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << std::endl;
        return;
    }
    std::ofstream out(out_path);
    if (!out) {
        throw Error(ErrorCode::UsageError, "cannot write '" + out_path + "'");
    }
    out << report.dump(2) << '\n';
}

/// Maps a library error to the exit code taxonomy; numerical failures with
/// an --out target also get a structured JSON error report.
int emit_error(const Error& e, const char* command, const json& config,
               const std::string& out_path) {
    std::cerr << command << ": [" << e.code_str() << "] " << e.what() << std::endl;
    const int code = is_numerical_failure(e.code()) ? 2 : 1;
    if (code == 2 && !out_path.empty()) {
        json report;
        report["command"] = command;
        report["config"] = config;
        report["error"] = {{"code", e.code_str()}, {"message", e.what()}};
        try {
            write_or_print(report, out_path);
        } catch (const Error&) {
            // report file unwritable; stderr diagnostic already emitted
        }
    }
    return code;
}

json sketch_json(const SketchMask& mask) {
    return json{{"p", mask.p},
                {"L_hat", mask.L_hat()},
                {"L_expected", mask.L_expected},
                {"seed", mask.seed}};
}

json panel_json(const TwoWayPanel& panel) {
    const PanelDims d = dims(panel);
    return json{{"N", d.N},
                {"M", d.M},
                {"C_bar", d.C_bar},
                {"n_obs", panel.n_obs()},
                {"balanced", panel.is_balanced()},
                {"lambda1_hat", d.lambda1_hat},
                {"lambda2_hat", d.lambda2_hat}};
}

std::vector<std::string> merge_fields(const std::string& y,
                                      const std::vector<std::string>& x,
                                      const std::vector<std::string>& z) {
    std::vector<std::string> fields{y};
    auto add = [&fields](const std::string& name) {
        for (const auto& f : fields) {
            if (f == name) return;
        }
        fields.push_back(name);
    };
    for (const auto& f : x) add(f);
    for (const auto& f : z) add(f);
    return fields;
}

PRule parse_rule_token(const std::string& token) {
    if (token == "full") return PRule::full();
    try {
        if (token.size() > 1 && token[0] == 'c') {
            return PRule::c_over_cbar(std::stod(token.substr(1)));
        }
        if (token.size() > 1 && token[0] == 'p') {
            return PRule::explicit_p(std::stod(token.substr(1)));
        }
    } catch (const std::exception&) {
        // fall through to the usage error
    }
    throw Error(ErrorCode::UsageError,
                "unknown rule '" + token + "' (expected full, c<value>, or p<value>)");
}

struct MeanArgs {
    std::string data, field, out;
    SketchFlags sketch;
    double alpha = 0.05;
    VarianceMode variance = VarianceMode::Subsample;
};

struct GmmArgs {
    std::string data, y, out;
    std::vector<std::string> x, z;
    SketchFlags sketch;
    bool two_step = false;
    bool center_moments = false;
    VarianceMode variance = VarianceMode::Subsample;
};

struct MfitArgs {
    std::string data, loss, y, out;
    std::vector<std::string> x;
    SketchFlags sketch;
    VarianceMode variance = VarianceMode::Subsample;
};

struct ChoosePArgs {
    std::string data, field, out;
    double c_pre = 1.0;
    double v_max = 0.0;
    std::uint64_t seed = 0;
};

struct SimulateArgs {
    int design = 0;
    std::vector<std::int64_t> sizes{20, 40, 80, 160};
    std::vector<std::string> rules{"full", "c1", "c2"};
    int reps = 2500;
    VarianceMode variance = VarianceMode::FullSample;
    std::uint64_t seed = 0;
    std::string out;
};

const std::map<std::string, VarianceMode> kVarianceModes{
    {"subsample", VarianceMode::Subsample}, {"full", VarianceMode::FullSample}};

int run_mean(const MeanArgs& args) {
    json config = args.sketch.config_json();
    config["data"] = args.data;
    config["field"] = args.field;
    config["alpha"] = args.alpha;
    config["variance"] = args.variance == VarianceMode::FullSample ? "full" : "subsample";
    try {
        const TwoWayPanel panel = load_panel(args.data, {args.field});
        const double p = resolve_p_rule(args.sketch.rule(), dims(panel));
        config["resolved_p"] = p;
        const SketchMask mask = generate_mask(panel, SketchConfig{p, args.sketch.seed});
        const InferenceReport rep =
            mean_inference(panel, mask, panel.field_column(0), args.alpha, args.variance);

        json report;
        report["command"] = "mean";
        report["config"] = config;
        report["panel"] = panel_json(panel);
        report["sketch"] = sketch_json(mask);
        report["estimate"] = vec_json(rep.estimate);
        report["std_error"] = vec_json(rep.std_error);
        report["ci_lower"] = vec_json(rep.ci_lower);
        report["ci_upper"] = vec_json(rep.ci_upper);
        report["variance"] = variance_json(rep.variance, "gamma_A", "gamma_B", "gamma");
        report["C_bar"] = rep.C_bar;
        report["L_hat"] = rep.L_hat;
        report["p"] = rep.p;
        report["degenerate"] = rep.degenerate_flag;
        write_or_print(report, args.out);
        return 0;
    } catch (const Error& e) {
        return emit_error(e, "mean", config, args.out);
    }
}

int run_gmm(const GmmArgs& args) {
    json config = args.sketch.config_json();
    config["data"] = args.data;
    config["y"] = args.y;
    config["x"] = args.x;
    config["z"] = args.z;
    config["two_step"] = args.two_step;
    config["center_moments"] = args.center_moments;
    config["variance"] = args.variance == VarianceMode::FullSample ? "full" : "subsample";
    try {
        const TwoWayPanel panel = load_panel(args.data, merge_fields(args.y, args.x, args.z));
        const MomentModel model = linear_iv_model(panel, args.y, args.x, args.z);
        const double p = resolve_p_rule(args.sketch.rule(), dims(panel));
        config["resolved_p"] = p;
        const SketchMask mask = generate_mask(panel, SketchConfig{p, args.sketch.seed});

        GmmOptions options;
        options.two_step = args.two_step;
        options.center_moments = args.center_moments;
        const GmmFit fit = gmm_fit(panel, mask, model, Eigen::MatrixXd(), options,
                                   args.variance);

        json report;
        report["command"] = "gmm";
        report["config"] = config;
        report["panel"] = panel_json(panel);
        report["sketch"] = sketch_json(mask);
        report["theta_hat"] = vec_json(fit.theta_hat);
        report["std_error"] = vec_json(fit.std_error);
        report["sandwich"] = mat_json(fit.sandwich);
        report["G_tilde"] = mat_json(fit.G_tilde);
        report["g_bar"] = vec_json(fit.g_bar);
        report["omega"] = variance_json(fit.omega, "gamma_1", "gamma_2", "omega");
        report["V_hat"] = mat_json(fit.V_hat);
        report["L_hat"] = mask.L_hat();
        report["p"] = mask.p;
        report["iterations"] = fit.iterations;
        report["converged"] = fit.converged;
        report["degenerate"] = fit.degenerate;
        write_or_print(report, args.out);
        return 0;
    } catch (const Error& e) {
        return emit_error(e, "gmm", config, args.out);
    }
}

int run_mfit(const MfitArgs& args) {
    json config = args.sketch.config_json();
    config["data"] = args.data;
    config["loss"] = args.loss;
    config["y"] = args.y;
    config["x"] = args.x;
    config["variance"] = args.variance == VarianceMode::FullSample ? "full" : "subsample";
    try {
        const TwoWayPanel panel = load_panel(args.data, merge_fields(args.y, args.x, {}));
        const LossModel model = args.loss == "ls"
                                    ? least_squares_model(panel, args.y, args.x)
                                    : logistic_model(panel, args.y, args.x);
        const double p = resolve_p_rule(args.sketch.rule(), dims(panel));
        config["resolved_p"] = p;
        const SketchMask mask = generate_mask(panel, SketchConfig{p, args.sketch.seed});
        const MFit fit = m_fit(panel, mask, model, MOptions(), args.variance);

        json report;
        report["command"] = "mfit";
        report["config"] = config;
        report["panel"] = panel_json(panel);
        report["sketch"] = sketch_json(mask);
        report["theta_hat"] = vec_json(fit.theta_hat);
        report["std_error"] = vec_json(fit.std_error);
        report["sandwich"] = mat_json(fit.sandwich);
        report["H_tilde"] = mat_json(fit.H_tilde);
        report["sigma"] = variance_json(fit.sigma, "sigma_1", "sigma_2", "sigma");
        report["L_hat"] = mask.L_hat();
        report["p"] = mask.p;
        report["iterations"] = fit.iterations;
        report["converged"] = fit.converged;
        report["degenerate"] = fit.degenerate;
        write_or_print(report, args.out);
        return 0;
    } catch (const Error& e) {
        return emit_error(e, "mfit", config, args.out);
    }
}

int run_choose_p(const ChoosePArgs& args) {
    json config;
    config["data"] = args.data;
    config["field"] = args.field;
    config["c_pre"] = args.c_pre;
    config["v_max"] = args.v_max;
    config["seed"] = args.seed;
    try {
        const TwoWayPanel panel = load_panel(args.data, {args.field});
        const SizingResult res =
            choose_c_star(panel, panel.field_column(0), args.c_pre, args.v_max, args.seed);

        json report;
        report["command"] = "choose-p";
        report["config"] = config;
        report["panel"] = panel_json(panel);
        report["c_star"] = res.c_star;
        report["p_star"] = res.p_star;
        report["gamma_A_pre"] = res.gamma_A_pre;
        report["gamma_B_pre"] = res.gamma_B_pre;
        report["V_max"] = res.V_max;
        report["c_pre"] = res.c_pre;
        report["L_pre"] = res.L_pre;
        report["feasible"] = res.feasible;
        report["small_subsample_warning"] = res.small_subsample_warning;
        if (res.small_subsample_warning) {
            std::cerr << "choose-p: warning: expected subsample below 30 cells"
                      << std::endl;
        }
        write_or_print(report, args.out);
        return 0;
    } catch (const Error& e) {
        return emit_error(e, "choose-p", config, args.out);
    }
}

int run_simulate(const SimulateArgs& args) {
    json config;
    config["design"] = args.design;
    config["sizes"] = args.sizes;
    config["rules"] = args.rules;
    config["reps"] = args.reps;
    config["variance"] = args.variance == VarianceMode::FullSample ? "full" : "subsample";
    config["seed"] = args.seed;
    try {
        std::vector<PRule> rules;
        rules.reserve(args.rules.size());
        for (const auto& token : args.rules) rules.push_back(parse_rule_token(token));

        std::vector<MetricsRow> rows;
        json json_rows = json::array();
        for (std::int64_t size : args.sizes) {
            const DesignSpec design = DesignSpec::design(args.design, size, size);
            PanelDims cell_dims;
            cell_dims.N = cell_dims.M = cell_dims.C_bar = size;
            cell_dims.lambda1_hat = cell_dims.lambda2_hat = 1.0;
            for (const PRule& rule : rules) {
                MetricsRow row =
                    run_experiment(design, rule, args.reps, args.variance, args.seed);
                json jrow{{"design", row.design},   {"N", row.N},
                          {"M", row.M},             {"rule", row.p_rule},
                          {"reps", row.reps},       {"bias", row.bias},
                          {"sd", row.sd},           {"rmse", row.rmse},
                          {"coverage95", row.coverage95},
                          {"resolved_p", resolve_p_rule(rule, cell_dims)}};
                json_rows.push_back(jrow);
                rows.push_back(std::move(row));
            }
        }
        const TableReport table = table_report(rows);
        std::cout << table.text;

        if (!args.out.empty()) {
            std::filesystem::create_directories(args.out);
            const std::filesystem::path dir(args.out);
            std::ofstream(dir / "table.txt") << table.text;
            std::ofstream(dir / "table.csv") << table.csv;
            json report;
            report["command"] = "simulate";
            report["config"] = config;
            report["rows"] = json_rows;
            write_or_print(report, (dir / "report.json").string());
        }
        return 0;
    } catch (const Error& e) {
        return emit_error(e, "simulate",
                          config, args.out.empty()
                                      ? std::string()
                                      : (std::filesystem::path(args.out) / "report.json")
                                            .string());
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Estimation and inference for two-way cluster dependent data "
                 "with Bernoulli algorithmic subsampling"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads for the parallel kernels (0 = runtime default)");

    MeanArgs mean_args;
    auto* mean_cmd = app.add_subcommand("mean", "sketched mean with CLT confidence interval");
    mean_cmd->add_option("--data", mean_args.data, "input CSV (header i,j,<field>...)")
        ->required();
    mean_cmd->add_option("--field", mean_args.field, "field to average")->required();
    mean_args.sketch.add_to(mean_cmd);
    mean_cmd->add_option("--alpha", mean_args.alpha, "CI miss probability (default 0.05)");
    mean_cmd->add_option("--variance", mean_args.variance, "variance sample")
        ->transform(CLI::CheckedTransformer(kVarianceModes, CLI::ignore_case));
    mean_cmd->add_option("--out", mean_args.out, "JSON report path (default: stdout)");

    GmmArgs gmm_args;
    auto* gmm_cmd = app.add_subcommand("gmm", "linear-IV GMM with sandwich variance");
    gmm_cmd->add_option("--data", gmm_args.data, "input CSV")->required();
    gmm_cmd->add_option("--y", gmm_args.y, "outcome field")->required();
    gmm_cmd->add_option("--x", gmm_args.x, "regressor fields, comma separated")
        ->required()
        ->delimiter(',');
    gmm_cmd->add_option("--z", gmm_args.z, "instrument fields, comma separated")
        ->required()
        ->delimiter(',');
    gmm_args.sketch.add_to(gmm_cmd);
    gmm_cmd->add_flag("--two-step", gmm_args.two_step,
                      "re-weight with the inverse of Gamma_2 at the first-step fit");
    gmm_cmd->add_flag("--center-moments", gmm_args.center_moments,
                      "center moment values before the variance pass");
    gmm_cmd->add_option("--variance", gmm_args.variance, "variance sample")
        ->transform(CLI::CheckedTransformer(kVarianceModes, CLI::ignore_case));
    gmm_cmd->add_option("--out", gmm_args.out, "JSON report path (default: stdout)");

    MfitArgs mfit_args;
    auto* mfit_cmd = app.add_subcommand("mfit", "M-estimation (least squares / logit)");
    mfit_cmd->add_option("--data", mfit_args.data, "input CSV")->required();
    mfit_cmd->add_option("--loss", mfit_args.loss, "loss: ls or logit")
        ->required()
        ->check(CLI::IsMember({"ls", "logit"}));
    mfit_cmd->add_option("--y", mfit_args.y, "outcome field")->required();
    mfit_cmd->add_option("--x", mfit_args.x, "regressor fields, comma separated")
        ->required()
        ->delimiter(',');
    mfit_args.sketch.add_to(mfit_cmd);
    mfit_cmd->add_option("--variance", mfit_args.variance, "variance sample")
        ->transform(CLI::CheckedTransformer(kVarianceModes, CLI::ignore_case));
    mfit_cmd->add_option("--out", mfit_args.out, "JSON report path (default: stdout)");

    ChoosePArgs choose_args;
    auto* choose_cmd = app.add_subcommand("choose-p", "data-driven subsample-rate chooser");
    choose_cmd->add_option("--data", choose_args.data, "input CSV")->required();
    choose_cmd->add_option("--field", choose_args.field, "scalar functional field")
        ->required();
    choose_cmd->add_option("--c-pre", choose_args.c_pre, "preliminary constant c")
        ->required();
    choose_cmd->add_option("--v-max", choose_args.v_max, "maximum tolerable variance")
        ->required();
    choose_cmd->add_option("--seed", choose_args.seed, "preliminary sketch seed");
    choose_cmd->add_option("--out", choose_args.out, "JSON report path (default: stdout)");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage experiments");
    sim_cmd->add_option("--design", sim_args.design, "design id, 1..4")->required();
    sim_cmd->add_option("--sizes", sim_args.sizes, "square sizes N=M (default 20,40,80,160)")
        ->delimiter(',');
    sim_cmd->add_option("--rules", sim_args.rules,
                        "rate rules: full, c<value>, p<value> (default full,c1,c2)")
        ->delimiter(',');
    sim_cmd->add_option("--reps", sim_args.reps, "Monte Carlo replications (default 2500)");
    sim_cmd->add_option("--variance", sim_args.variance, "variance sample (default full)")
        ->transform(CLI::CheckedTransformer(kVarianceModes, CLI::ignore_case));
    sim_cmd->add_option("--seed", sim_args.seed, "base seed");
    sim_cmd->add_option("--out", sim_args.out, "output directory for table.txt/.csv/report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    set_num_threads(threads);
    if (mean_cmd->parsed()) return run_mean(mean_args);
    if (gmm_cmd->parsed()) return run_gmm(gmm_args);
    if (mfit_cmd->parsed()) return run_mfit(mfit_args);
    if (choose_cmd->parsed()) return run_choose_p(choose_args);
    if (sim_cmd->parsed()) return run_simulate(sim_args);
    return 1;
}

}  // namespace mwsub
