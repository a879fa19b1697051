#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bsdelay/aode.hpp"
#include "bsdelay/apps.hpp"
#include "bsdelay/asde.hpp"
#include "bsdelay/bsde.hpp"
#include "bsdelay/config.hpp"
#include "bsdelay/control.hpp"
#include "bsdelay/errors.hpp"
#include "bsdelay/report.hpp"

namespace {

using bsdelay::Config;
using nlohmann::json;

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::string seed_override;
};

Config load_config(const Common& common) {
    Config cfg = Config::from_file(common.config_path);
    if (!common.seed_override.empty()) cfg.override_key("seed", common.seed_override);
    if (const char* env = std::getenv("BSDELAY_SEED")) cfg.override_key("seed", env);
    return cfg;
}

std::string out_dir_of(const Common& common) {
    std::string dir = common.out_dir;
    if (const char* env = std::getenv("BSDELAY_OUT")) dir = env;
    std::filesystem::create_directories(dir);
    return dir;
}

void finish_report(json& report, const std::string& command, Config& cfg,
                   const std::string& dir) {
    cfg.reject_unknown();
    report["command"] = command;
    report["config"] = cfg.resolved();
    report["timestamp"] = bsdelay::iso8601_utc_now();
    bsdelay::write_json_report(report, dir + "/report.json");
    std::cout << dir << "/report.json" << std::endl;
}

bsdelay::XiSpec xi_from_config(Config& cfg, const std::string& def_kind, double def_value) {
    bsdelay::XiSpec xi;
    const std::string kind = cfg.get_string("xi", def_kind);
    if (kind == "constant") {
        xi.kind = bsdelay::XiSpec::Kind::Constant;
    } else if (kind == "brownian") {
        xi.kind = bsdelay::XiSpec::Kind::Brownian;
    } else {
        throw bsdelay::ConfigError("key xi: expected constant or brownian: " + kind);
    }
    xi.value = cfg.get_double("xi_value", def_value);
    return xi;
}

json optimality_json(const bsdelay::OptimalityReport& rep) {
    json j;
    j["J"] = rep.J_candidate;
    j["se"] = rep.J_candidate_se;
    j["violations"] = rep.violations;
    j["max_condition_residual"] = rep.max_condition_residual;
    json perts = json::array();
    for (const auto& p : rep.perturbed) {
        perts.push_back({{"id", p.id},
                         {"magnitude", p.magnitude},
                         {"J", p.J},
                         {"se", p.se},
                         {"diff", p.diff},
                         {"diff_se", p.diff_se},
                         {"violation", p.violation}});
    }
    j["perturbed"] = perts;
    return j;
}

json validation_json(const bsdelay::ValidationReport& rep) {
    return {{"K", rep.K},
            {"K_prime", rep.K_prime},
            {"bound1", rep.bound1},
            {"bound2", rep.bound2},
            {"warnings", rep.warnings}};
}

void mean_se(const bsdelay::SampledProcess& proc, int node, double& mean, double& se) {
    const int n = proc.n_paths();
    mean = 0.0;
    for (int p = 0; p < n; ++p) mean += proc.at(p, node);
    mean /= n;
    double var = 0.0;
    for (int p = 0; p < n; ++p) {
        const double d = proc.at(p, node) - mean;
        var += d * d;
    }
    var /= std::max(1, n - 1);
    se = std::sqrt(var / n);
}

int run_char_root(const Common& common) {
    Config cfg = load_config(common);
    bsdelay::CharacteristicSpec spec;
    spec.alpha = cfg.get_double("alpha", 0.1);
    spec.r = cfg.get_double("r", 0.05);
    spec.kappa = cfg.get_double("kappa", 0.5);
    spec.delta = cfg.get_double("delta", 0.1);
    const double tol = cfg.get_double("tol", 1e-12);
    const double h = bsdelay::characteristic_root(spec, tol);
    const double F = h + spec.alpha * spec.kappa * std::exp(h * spec.delta);

    json report;
    report["results"] = {{"h", h}, {"F_residual", F - (spec.alpha - spec.r)}};
    finish_report(report, "char-root", cfg, out_dir_of(common));
    return 0;
}

int run_solve_aode(const Common& common) {
    Config cfg = load_config(common);
    double a, b, delta, T, K;
    delta = cfg.get_double("delta", 0.1);
    T = cfg.get_double("T", 1.0);
    K = cfg.get_double("K", 1.0);
    if (cfg.has("a") || cfg.has("b")) {
        a = cfg.get_double("a", 0.0);
        b = cfg.get_double("b", 0.0);
    } else {
        const double alpha = cfg.get_double("alpha", 0.1);
        const double r = cfg.get_double("r", 0.05);
        const double kappa = cfg.get_double("kappa", 0.5);
        a = alpha - r;
        b = -alpha * kappa;
    }
    const int n_steps = cfg.get_int("n_steps", 1000);
    const double tol = cfg.get_double("tol", 1e-12);
    const int max_iter = cfg.get_int("max_iter", 200);

    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    const bsdelay::TimeGrid grid =
        bsdelay::TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const double h = bsdelay::advanced_exponent(a, b, delta);
    bsdelay::AODEProblem problem = bsdelay::AODEProblem::constant_coefficients(a, b, delta, K, T);
    const bsdelay::AODESolution sol = bsdelay::picard_solve_aode(problem, grid, tol, max_iter);
    const bsdelay::AODEResidual res_picard = bsdelay::aode_residual(sol.q, problem, grid);
    const bsdelay::ExponentialAnsatz ansatz{h, K, T};
    std::vector<double> q_ans(grid.n_nodes());
    for (int i = 0; i < grid.n_nodes(); ++i) q_ans[i] = ansatz(grid.node(i));
    const bsdelay::AODEResidual res_ansatz = bsdelay::aode_residual(q_ans, problem, grid);

    double sup_diff = 0.0;
    for (int i = 0; i < grid.n_nodes(); ++i) {
        if (grid.node(i) <= T - delta + 1e-12) {
            sup_diff = std::max(sup_diff, std::abs(q_ans[i] - sol.q[i]));
        }
    }

    const std::string dir = out_dir_of(common);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < grid.n_nodes(); ++i) {
        rows.push_back({grid.node(i), q_ans[i], sol.q[i], res_ansatz.per_node[i],
                        res_picard.per_node[i]});
    }
    bsdelay::write_csv(dir + "/q.csv", {"t", "q_ansatz", "q_picard", "residual_ansatz",
                                        "residual_picard"},
                       rows);

    json report;
    report["results"] = {{"h", h},
                        {"picard_iterations", sol.report.n_iterations},
                        {"sup_diff_bulk", sup_diff},
                        {"ansatz_residual_bulk", res_ansatz.max_bulk},
                        {"ansatz_residual_terminal_layer", res_ansatz.max_layer},
                        {"picard_residual_bulk", res_picard.max_bulk},
                        {"picard_residual_terminal_layer", res_picard.max_layer}};
    finish_report(report, "solve-aode", cfg, dir);
    return 0;
}

int run_solve_bsde(const Common& common) {
    Config cfg = load_config(common);
    const std::string model = cfg.get_string("model", "zero");
    bsdelay::Numerics num = bsdelay::numerics_from_config(cfg);
    const double T = cfg.get_double("T", 1.0);

    bsdelay::DelayedBSDEProblem problem;
    double delta = 0.0;
    if (model == "zero") {
        problem.generator = [](double, double, double, double, double, double, double) {
            return 0.0;
        };
    } else if (model == "linear-no-delay") {
        const double ay = cfg.get_double("a_y", 0.1);
        const double az = cfg.get_double("a_z", 0.1);
        const double c0 = cfg.get_double("c0", 0.0);
        problem.generator = [ay, az, c0](double, double y, double, double z, double, double,
                                         double) { return ay * y + az * z + c0; };
    } else if (model == "app2") {
        delta = cfg.get_double("delta", 0.1);
        const double alpha = cfg.get_double("alpha", 0.1);
        const double r = cfg.get_double("r", 0.05);
        const double kappa = cfg.get_double("kappa", 0.5);
        const double lambda = cfg.get_double("lambda", 0.4);
        problem.generator = [alpha, r, kappa, lambda](double, double y, double ydel, double z,
                                                      double, double, double) {
            return (alpha - r) * y - lambda * z - alpha * kappa * ydel;
        };
        problem.measure = bsdelay::DelayMeasure::dirac(delta);
        problem.lipschitz_C = std::max({std::abs(alpha - r), alpha * kappa, lambda});
    } else if (model == "app3") {
        delta = cfg.get_double("delta", 0.1);
        const double b1 = cfg.get_double("beta1", 0.1);
        const double b2 = cfg.get_double("beta2", 0.05);
        const double g1 = cfg.get_double("gamma1", 0.2);
        const double g2 = cfg.get_double("gamma2", 0.1);
        problem.generator = [b1, b2, g1, g2](double, double y, double ydel, double z, double zdel,
                                             double, double) {
            return -(b1 * y + b2 * ydel + g1 * z + g2 * zdel);
        };
        problem.measure = bsdelay::DelayMeasure::dirac(delta);
        problem.lipschitz_C = std::max({b1, b2, g1, g2});
    } else {
        throw bsdelay::ConfigError("key model: unknown model " + model);
    }
    problem.delta = delta;

    const double dt = T / num.n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    const bsdelay::TimeGrid grid =
        bsdelay::TimeGrid::uniform(-n_lag * dt, T, num.n_steps + n_lag);
    const bsdelay::PathEnsemble ensemble =
        bsdelay::generate_brownian(grid, num.n_paths, 1, num.seed, num.exec);
    problem.terminal = bsdelay::make_terminal(xi_from_config(cfg, "constant", 1.0), ensemble);

    bsdelay::PicardOptions opts;
    opts.tol = num.tol;
    opts.max_iter = num.max_iter;
    opts.basis = bsdelay::RegressionBasis::brownian(num.basis_degree);
    opts.exec = num.exec;
    auto [sol, rep] = bsdelay::picard_solve(problem, ensemble, opts);

    const int i0 = grid.index_of(0.0);
    double y0_mean, y0_se;
    mean_se(sol.y, i0, y0_mean, y0_se);

    const std::string dir = out_dir_of(common);
    if (cfg.get_bool("write_paths", true)) {
        std::vector<std::vector<double>> rows;
        for (int i = i0; i < grid.n_nodes(); ++i) {
            double ym, ys, zm, zs;
            mean_se(sol.y, i, ym, ys);
            mean_se(sol.z, i, zm, zs);
            rows.push_back({grid.node(i), ym, ys, zm, zs});
        }
        bsdelay::write_csv(dir + "/state.csv", {"t", "y_mean", "y_se", "z_mean", "z_se"}, rows);
    }

    json report;
    report["results"] = {{"y0_mean", y0_mean},
                        {"y0_se", y0_se},
                        {"picard_iterations", rep.n_iterations},
                        {"diffs", rep.diffs},
                        {"estimated_ratio", rep.estimated_ratio},
                        {"theoretical_K", rep.theoretical_K}};
    finish_report(report, "solve-bsde", cfg, dir);
    return 0;
}

int run_solve_asde(const Common& common) {
    Config cfg = load_config(common);
    const std::string spec = cfg.get_string("spec", "app2-adjoint");
    bsdelay::Numerics num = bsdelay::numerics_from_config(cfg);
    const double T = cfg.get_double("T", 1.0);
    const double delta = cfg.get_double("delta", 0.1);
    const double K = cfg.get_double("K", 1.0);

    const double dt = T / num.n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    const bsdelay::TimeGrid grid =
        bsdelay::TimeGrid::uniform(0.0, T + n_lag * dt, num.n_steps + n_lag);
    const bsdelay::PathEnsemble ensemble =
        bsdelay::generate_brownian(grid, num.n_paths, 1, num.seed, num.exec);

    bsdelay::ASDEProblem problem;
    problem.x0 = K;
    problem.horizon_T = T;
    problem.delta = n_lag * dt;
    problem.measure = bsdelay::DelayMeasure::dirac(n_lag * dt);
    double mart_rate = 0.0;
    if (spec == "app2-adjoint") {
        const double alpha = cfg.get_double("alpha", 0.1);
        const double r = cfg.get_double("r", 0.05);
        const double kappa = cfg.get_double("kappa", 0.5);
        const double lambda = cfg.get_double("lambda", 0.4);
        problem.drift = [alpha, r, kappa](int, int, double, double x, double adv) {
            return (alpha - r) * x - alpha * kappa * adv;
        };
        problem.diffusion = [lambda](int, int, double, double x, double) { return -lambda * x; };
        problem.lipschitz_C = std::max({std::abs(alpha - r), alpha * kappa, lambda});
        mart_rate = lambda;
    } else if (spec == "app3-adjoint") {
        const double b1 = cfg.get_double("beta1", 0.1);
        const double b2 = cfg.get_double("beta2", 0.05);
        const double g1 = cfg.get_double("gamma1", 0.2);
        const double g2 = cfg.get_double("gamma2", 0.1);
        problem.drift = [b1, b2](int, int, double, double x, double adv) {
            return -b1 * x - b2 * adv;
        };
        problem.diffusion = [g1, g2](int, int, double, double x, double adv) {
            return -g1 * x - g2 * adv;
        };
        problem.diffusion_payload = [](int, int, double x) { return x; };
        problem.lipschitz_C = std::max({b1, b2, g1, g2});
        const double h = bsdelay::advanced_exponent(-b1, -b2, n_lag * dt);
        mart_rate = g1 + g2 * std::exp(h * n_lag * dt);
    } else {
        throw bsdelay::ConfigError("key spec: unknown spec " + spec);
    }

    bsdelay::ASDEOptions opts;
    opts.tol = num.tol;
    opts.max_iter = num.max_iter;
    opts.basis = bsdelay::RegressionBasis::brownian(num.basis_degree);
    opts.exec = num.exec;
    const std::string conditioning = cfg.get_string("conditioning", "regression");
    bsdelay::SampledProcess mart;
    if (conditioning == "martingale") {
        opts.conditioning = bsdelay::ConditioningMode::MartingaleRatio;
        mart = bsdelay::exponential_martingale(mart_rate, ensemble, num.exec);
        opts.reference_martingale = &mart;
    } else if (conditioning != "regression") {
        throw bsdelay::ConfigError("key conditioning: expected regression or martingale");
    }

    auto [sol, rep] = bsdelay::picard_solve_asde(problem, ensemble, opts);

    const std::string dir = out_dir_of(common);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < grid.n_nodes(); ++i) {
        double m, s;
        mean_se(sol.x, i, m, s);
        rows.push_back({grid.node(i), m, s});
    }
    bsdelay::write_csv(dir + "/p.csv", {"t", "p_mean", "p_se"}, rows);

    double pT_mean, pT_se;
    mean_se(sol.x, grid.index_of(T), pT_mean, pT_se);
    json report;
    report["results"] = {{"p0", K},
                        {"pT_mean", pT_mean},
                        {"pT_se", pT_se},
                        {"picard_iterations", rep.n_iterations},
                        {"diffs", rep.diffs},
                        {"theoretical_K_prime", rep.theoretical_K}};
    finish_report(report, "solve-asde", cfg, dir);
    return 0;
}

bsdelay::App1Params app1_params(Config& cfg) {
    bsdelay::App1Params p;
    p.beta = cfg.get_double("beta", p.beta);
    p.alpha = cfg.get_double("alpha", p.alpha);
    p.R = cfg.get_double("R", p.R);
    p.T = cfg.get_double("T", p.T);
    p.xi = xi_from_config(cfg, "constant", 1.0);
    return p;
}

bsdelay::App2Params app2_params(Config& cfg) {
    bsdelay::App2Params p;
    p.r = cfg.get_double("r", p.r);
    p.mu = cfg.get_double("mu", p.mu);
    p.sigma = cfg.get_double("sigma", p.sigma);
    p.alpha = cfg.get_double("alpha", p.alpha);
    p.kappa = cfg.get_double("kappa", p.kappa);
    p.delta = cfg.get_double("delta", p.delta);
    p.L = cfg.get_double("L", p.L);
    p.K = cfg.get_double("K", p.K);
    p.rho = cfg.get_double("rho", p.rho);
    p.R = cfg.get_double("R", p.R);
    p.T = cfg.get_double("T", p.T);
    p.xi = xi_from_config(cfg, "constant", 1.0);
    return p;
}

bsdelay::App3Params app3_params(Config& cfg) {
    bsdelay::App3Params p;
    p.beta1 = cfg.get_double("beta1", p.beta1);
    p.beta2 = cfg.get_double("beta2", p.beta2);
    p.gamma1 = cfg.get_double("gamma1", p.gamma1);
    p.gamma2 = cfg.get_double("gamma2", p.gamma2);
    p.alpha = cfg.get_double("alpha", p.alpha);
    p.K = cfg.get_double("K", p.K);
    p.delta = cfg.get_double("delta", p.delta);
    p.T = cfg.get_double("T", p.T);
    const double Rc = cfg.get_double("R", 1.0);
    p.R = [Rc](double) { return Rc; };
    p.xi = xi_from_config(cfg, "brownian", 0.0);
    return p;
}

int run_app1(const Common& common, bool force_verify) {
    Config cfg = load_config(common);
    if (force_verify) cfg.get_string("app", "app1");
    bsdelay::App1Params params = app1_params(cfg);
    bsdelay::Numerics num = bsdelay::numerics_from_config(cfg);
    if (force_verify) num.verify = true;
    const bsdelay::App1Result res = bsdelay::app1_solve(params, num);

    const std::string dir = out_dir_of(common);
    std::vector<std::vector<double>> rows;
    const bsdelay::TimeGrid grid = bsdelay::TimeGrid::uniform(0.0, params.T, num.n_steps);
    for (int i = 0; i < grid.n_nodes(); ++i) {
        rows.push_back({grid.node(i), res.p[i], res.c[i], res.stationarity[i]});
    }
    bsdelay::write_csv(dir + "/app1.csv", {"t", "p", "c", "stationarity"}, rows);

    json report;
    report["results"] = {{"p_T", res.adjoint.p.back()},
                        {"pdot_T", res.adjoint.pdot.back()},
                        {"integro_iterations", res.adjoint.n_iterations},
                        {"gradient_max_rel_error", res.gradients.max_rel_error},
                        {"optimality", optimality_json(res.report)}};
    finish_report(report, force_verify ? "verify-optimality" : "app1", cfg, dir);
    return 0;
}

int run_app2(const Common& common, bool force_verify) {
    Config cfg = load_config(common);
    if (force_verify) cfg.get_string("app", "app2");
    bsdelay::App2Params params = app2_params(cfg);
    bsdelay::Numerics num = bsdelay::numerics_from_config(cfg);
    if (force_verify) num.verify = true;
    const bsdelay::App2Result res = bsdelay::app2_solve(params, num);

    const std::string dir = out_dir_of(common);
    {
        const bsdelay::TimeGrid grid =
            bsdelay::TimeGrid::uniform(0.0, params.T, num.n_steps);  // reporting nodes on [0, T]
        std::vector<std::vector<double>> rows;
        const int i0 = res.state.y.grid().index_of(0.0);
        for (int i = 0; i < grid.n_nodes(); ++i) {
            double ym, ys;
            mean_se(res.state.y, i0 + i, ym, ys);
            rows.push_back({grid.node(i), res.q[i], res.c_mean[i0 + i], res.theta_mean[i0 + i],
                            ym, ys, res.stationarity[i0 + i]});
        }
        bsdelay::write_csv(dir + "/app2.csv",
                           {"t", "q", "c_mean", "theta_mean", "y_mean", "y_se", "stationarity"},
                           rows);
    }

    const bsdelay::ValidationReport val =
        bsdelay::validate_well_posedness(res.range.L, params.delta);
    json report;
    report["results"] = {{"h", res.h},
                        {"lambda", res.lambda},
                        {"range_check",
                         {{"L", res.range.L},
                          {"bound1", res.range.bound1},
                          {"bound2", res.range.bound2},
                          {"bound1_ok", res.range.bound1_ok},
                          {"bound2_ok", res.range.bound2_ok}}},
                        {"well_posedness", validation_json(val)},
                        {"gradient_max_rel_error", res.gradients.max_rel_error},
                        {"optimality", optimality_json(res.report)}};
    finish_report(report, force_verify ? "verify-optimality" : "app2", cfg, dir);
    return 0;
}

int run_app3(const Common& common, bool force_verify) {
    Config cfg = load_config(common);
    if (force_verify) cfg.get_string("app", "app3");
    bsdelay::App3Params params = app3_params(cfg);
    bsdelay::Numerics num = bsdelay::numerics_from_config(cfg);
    if (force_verify) num.verify = true;
    const bsdelay::App3Result res = bsdelay::app3_solve(params, num);

    const std::string dir = out_dir_of(common);
    {
        const bsdelay::TimeGrid grid = bsdelay::TimeGrid::uniform(0.0, params.T, num.n_steps);
        const int i0 = res.state.y.grid().index_of(0.0);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < grid.n_nodes(); ++i) {
            double ym, ys;
            mean_se(res.state.y, i0 + i, ym, ys);
            rows.push_back({grid.node(i), res.coupled.q[i], res.coupled.gamma_nodewise[i],
                            res.u_mean[i0 + i], ym, ys, res.stationarity[i0 + i]});
        }
        bsdelay::write_csv(dir + "/app3.csv",
                           {"t", "q", "gamma_nodewise", "u_mean", "y_mean", "y_se",
                            "stationarity"},
                           rows);
    }

    json report;
    report["results"] = {{"h", res.coupled.h},
                        {"gamma", res.coupled.gamma},
                        {"gamma_deviation_bulk", res.coupled.max_gamma_deviation_bulk},
                        {"gradient_max_rel_error", res.gradients.max_rel_error},
                        {"optimality", optimality_json(res.report)}};
    finish_report(report, force_verify ? "verify-optimality" : "app3", cfg, dir);
    return 0;
}

int run_verify_optimality(const Common& common) {
    Config cfg = load_config(common);
    const std::string app = cfg.get_string("app", "app3");
    if (app == "app1") return run_app1(common, true);
    if (app == "app2") return run_app2(common, true);
    if (app == "app3") return run_app3(common, true);
    throw bsdelay::ConfigError("key app: expected app1, app2 or app3: " + app);
}

int run_fubini_check(const Common& common) {
    Config cfg = load_config(common);
    const std::string measure_kind = cfg.get_string("measure", "dirac");
    const double delta = cfg.get_double("delta", 0.1);
    const double T = cfg.get_double("T", 1.0);
    const int n_steps = cfg.get_int("n_steps", 200);
    const int n_paths = cfg.get_int("n_paths", 1000);
    const std::uint64_t seed = cfg.get_u64("seed", 1);

    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    const bsdelay::TimeGrid grid = bsdelay::TimeGrid::uniform(-n_lag * dt, T, n_steps + n_lag);
    const bsdelay::PathEnsemble ensemble = bsdelay::generate_brownian(grid, n_paths, 1, seed);

    bsdelay::DelayMeasure measure = (measure_kind == "lebesgue")
                                        ? bsdelay::DelayMeasure::lebesgue(n_lag * dt)
                                        : bsdelay::DelayMeasure::dirac(n_lag * dt);
    if (measure_kind != "dirac" && measure_kind != "lebesgue") {
        throw bsdelay::ConfigError("key measure: expected dirac or lebesgue: " + measure_kind);
    }

    // adapted integrand and an adapted control pair driven by the paths
    bsdelay::SampledProcess h(grid, n_paths, 1, true);
    bsdelay::SampledProcess u(grid, n_paths, 1, true);
    bsdelay::SampledProcess v(grid, n_paths, 1, true);
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < grid.n_nodes(); ++i) {
            const double t = grid.node(i);
            const double w = ensemble.w(p, i);
            h.at(p, i) = std::cos(t) + 0.5 * w;
            u.at(p, i) = std::sin(3.0 * t);
            v.at(p, i) = u.at(p, i) + 0.1 * std::sin(5.0 * t) + 0.05 * w;
        }
    }
    const double defect = bsdelay::fubini_duality_check(h, u, v, measure,
                                                        bsdelay::DelayKernel::one(), ensemble);

    json report;
    report["results"] = {{"defect", defect}, {"measure", measure_kind}};
    finish_report(report, "fubini-check", cfg, out_dir_of(common));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical toolkit for backward delayed systems and their advanced adjoints"};
    app.require_subcommand(1);

    Common common;
    app.add_option("-c,--config", common.config_path, "key=value config file")
        ->check(CLI::ExistingFile);
    app.add_option("-o,--out", common.out_dir, "output directory (env BSDELAY_OUT overrides)");
    app.add_option("-s,--seed", common.seed_override, "seed (env BSDELAY_SEED overrides)");

    const char* names[] = {"char-root",  "solve-aode", "solve-bsde",        "solve-asde", "app1",
                           "app2",       "app3",       "verify-optimality", "fubini-check"};
    const char* descs[] = {"solve the characteristic equation",
                           "advanced ODE: ansatz vs Picard grid solve",
                           "delayed BSDE Picard solve (built-in models)",
                           "advanced SDE Picard solve (built-in adjoint specs)",
                           "recursive utility with moving average",
                           "pension fund with delayed surplus",
                           "linear delayed system with quadratic cost",
                           "perturbation sweep around a closed-form control",
                           "discrete Fubini duality defect"};
    for (int i = 0; i < 9; ++i) app.add_subcommand(names[i], descs[i]);

    try {
        app.parse(argc, argv);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "char-root") return run_char_root(common);
        if (sub == "solve-aode") return run_solve_aode(common);
        if (sub == "solve-bsde") return run_solve_bsde(common);
        if (sub == "solve-asde") return run_solve_asde(common);
        if (sub == "app1") return run_app1(common, false);
        if (sub == "app2") return run_app2(common, false);
        if (sub == "app3") return run_app3(common, false);
        if (sub == "verify-optimality") return run_verify_optimality(common);
        if (sub == "fubini-check") return run_fubini_check(common);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const bsdelay::NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (double d : e.diff_history()) std::cerr << "  diff " << d << "\n";
        return static_cast<int>(e.category());
    } catch (const bsdelay::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
