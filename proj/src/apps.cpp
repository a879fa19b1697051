#include "bsdelay/apps.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

std::vector<double> make_terminal(const XiSpec& xi, const PathEnsemble& ensemble) {
    const int last = ensemble.grid().n_nodes() - 1;
    std::vector<double> out(ensemble.n_paths());
    for (int p = 0; p < ensemble.n_paths(); ++p) {
        out[p] = (xi.kind == XiSpec::Kind::Constant) ? xi.value : ensemble.w(p, last);
    }
    return out;
}

namespace {

PicardOptions picard_options(const Numerics& num) {
    PicardOptions opts;
    opts.tol = num.tol;
    opts.max_iter = num.max_iter;
    opts.basis = RegressionBasis::brownian(num.basis_degree);
    opts.exec = num.exec;
    return opts;
}

OptimalityOptions optimality_options(const Numerics& num) {
    OptimalityOptions opts;
    opts.n_perturbations = num.n_perturbations;
    opts.magnitudes = num.magnitudes;
    opts.seed = num.perturb_seed;
    opts.picard = picard_options(num);
    return opts;
}

/// Uniform grid [-n_lag dt, T] with dt = T / n_steps; delta is snapped to a
/// whole number of steps (warning if it moves).
TimeGrid state_grid(double T, double delta, int n_steps) {
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    if (std::abs(n_lag * dt - delta) > 1e-9 * std::max(1.0, T)) {
        warn("delay " + std::to_string(delta) + " snapped to " + std::to_string(n_lag * dt));
    }
    return TimeGrid::uniform(-n_lag * dt, T, n_steps + n_lag);
}

double max_over(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace

App1Result app1_solve(const App1Params& params, const Numerics& numerics) {
    if (!(params.R > 0.0 && params.R < 1.0)) throw DomainError("app1 needs 0 < R < 1");
    const double T = params.T;
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double R = params.R;

    App1Result out;
    out.adjoint_grid = TimeGrid::graded(numerics.integro_eps, T, numerics.integro_cells);
    IntegroODEProblem iprob{beta, T, 1.0, out.adjoint_grid};
    out.adjoint = integro_ode_solve(iprob, numerics.tol);
    for (double pv : out.adjoint.p) {
        if (!(pv > 0.0)) throw DomainError("app1 adjoint is not positive");
    }

    const TimeGrid grid = TimeGrid::uniform(0.0, T, numerics.n_steps);
    const PathEnsemble ensemble =
        generate_brownian(grid, numerics.n_paths, 1, numerics.seed, numerics.exec,
                          Pairing::Antithetic);

    out.p.resize(grid.n_nodes());
    out.c.resize(grid.n_nodes());
    SampledProcess p_proc(grid, numerics.n_paths, 1, true);
    SampledProcess c_proc(grid, numerics.n_paths, 1, true);
    for (int i = 0; i < grid.n_nodes(); ++i) {
        out.p[i] = out.adjoint.eval(out.adjoint_grid, grid.node(i));
        out.c[i] = std::pow(alpha * out.p[i], 1.0 / (R - 1.0));
        for (int pa = 0; pa < numerics.n_paths; ++pa) {
            p_proc.at(pa, i) = out.p[i];
            c_proc.at(pa, i) = out.c[i];
        }
    }

    ControlProblem problem;
    problem.horizon_T = T;
    problem.sense = Sense::Minimize;
    problem.admissible.lo = 0.0;
    problem.bsde.delta = T;
    problem.bsde.measure = DelayMeasure::lebesgue(T);
    problem.bsde.kernel.eval = [](double t, double) { return (t > 1e-12) ? 1.0 / t : 0.0; };
    problem.bsde.kernel.bound = numerics.n_steps / T;  // sup of 1/t on positive nodes
    problem.bsde.aggregate_options.clip_before_start = true;
    problem.bsde.lipschitz_C = std::max(alpha, beta);
    problem.bsde.terminal = make_terminal(params.xi, ensemble);
    // moving average (1/t) int_0^t y; at t = 0 the window degenerates to y itself
    problem.bsde.generator = [alpha, beta](double t, double y, double ydel, double, double,
                                           double v, double) {
        const double ma = (t > 1e-12) ? ydel : y;
        return -(alpha * v + beta * ma);
    };

    problem.hamiltonian.f = problem.bsde.generator;
    problem.hamiltonian.l = [R](const ThetaArgs& a) { return -std::pow(a.v, R) / R; };
    problem.hamiltonian.H_ydel = [beta](const ThetaArgs& a) { return beta * a.p; };
    problem.hamiltonian.H_v = [alpha, R](const ThetaArgs& a) {
        return -std::pow(a.v, R - 1.0) + alpha * a.p;
    };
    problem.hamiltonian.sample_point = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> coord(-2.0, 2.0);
        std::uniform_real_distribution<double> pos(0.1, 2.0);
        std::uniform_real_distribution<double> time(0.05, 1.0);
        ThetaArgs a;
        a.t = time(rng);
        a.y = coord(rng);
        a.ydel = coord(rng);
        a.z = coord(rng);
        a.zdel = coord(rng);
        a.v = pos(rng);
        a.vdel = coord(rng);
        a.p = coord(rng);
        return a;
    };
    problem.gamma_adjoint_y = [](double) { return -1.0; };  // p(0) = 1
    problem.running_cost = problem.hamiltonian.l;
    problem.gamma = [](double y) { return y; };
    problem.gamma_y = [](double) { return 1.0; };

    const PicardOptions popts = picard_options(numerics);
    auto [state, report] = solve_controlled(problem.bsde, c_proc, problem.eta, ensemble, popts);
    out.stationarity =
        maximum_condition_residual(problem, c_proc, state, p_proc, ensemble, numerics.exec);
    out.gradients = check_hamiltonian_gradients(problem.hamiltonian, 100, numerics.seed);

    if (numerics.verify) {
        out.report = verify_optimality(problem, c_proc, ensemble, optimality_options(numerics));
    } else {
        const ObjectiveEstimate est = objective_functional(problem, c_proc, ensemble, popts);
        out.report.J_candidate = est.J;
        out.report.J_candidate_se = est.se;
    }
    out.report.max_condition_residual = max_over(out.stationarity);
    return out;
}

RangeCheck app2_range_check(double alpha, double r, double kappa, double lambda, double delta) {
    RangeCheck rc;
    rc.L = std::max({std::abs(alpha - r), alpha * kappa, lambda});
    const double L2 = rc.L * rc.L;
    rc.bound1 = 6.0 * L2 * delta * (1.0 + 2.0 * delta * delta * std::numbers::e);
    rc.bound2 = 4.0 * L2 * delta * (1.0 + delta * delta * std::numbers::e) + delta;
    rc.bound1_ok = rc.bound1 < 1.0;
    rc.bound2_ok = rc.bound2 < 1.0;
    return rc;
}

App2Result app2_solve(const App2Params& params, const Numerics& numerics) {
    if (!(params.sigma > 0.0)) throw DomainError("app2 needs sigma > 0");
    if (!(params.R > 0.0 && params.R < 1.0)) throw DomainError("app2 needs 0 < R < 1");
    const double T = params.T;
    const double delta = params.delta;
    const double lambda = (params.mu - params.r) / params.sigma;
    const double alpha = params.alpha, r = params.r, kappa = params.kappa;
    const double L = params.L, K = params.K, rho = params.rho, R = params.R;

    App2Result out;
    out.lambda = lambda;
    out.range = app2_range_check(alpha, r, kappa, lambda, delta);

    const CharacteristicSpec cspec{alpha, r, kappa, delta};
    out.h = characteristic_root(cspec);
    const ExponentialAnsatz q_ans = exponential_ansatz(cspec, K, T);

    const TimeGrid grid = state_grid(T, delta, numerics.n_steps);
    const double dt = grid.dt();
    const int n_lag = grid.index_of(0.0);
    const TimeGrid ext_grid = TimeGrid::uniform(0.0, T + n_lag * dt, numerics.n_steps + n_lag);
    out.q.resize(ext_grid.n_nodes());
    for (int i = 0; i < ext_grid.n_nodes(); ++i) out.q[i] = q_ans(ext_grid.node(i));
    {
        AODEProblem aprob = AODEProblem::constant_coefficients(alpha - r, -alpha * kappa,
                                                              n_lag * dt, K, T);
        out.q_picard = picard_solve_aode(aprob, ext_grid, numerics.tol);
    }

    const PathEnsemble ensemble =
        generate_brownian(grid, numerics.n_paths, 1, numerics.seed, numerics.exec,
                          Pairing::Antithetic);
    const SampledProcess M = exponential_martingale(lambda, ensemble, numerics.exec);

    const int i0 = grid.index_of(0.0);
    const int last = grid.n_nodes() - 1;
    SampledProcess p_proc(grid, numerics.n_paths, 1, true);
    SampledProcess c_proc(grid, numerics.n_paths, 1, true);
    for (int pa = 0; pa < numerics.n_paths; ++pa) {
        for (int i = 0; i <= last; ++i) {
            if (i < i0) {
                p_proc.at(pa, i) = 0.0;
                c_proc.at(pa, i) = 0.0;
            } else {
                const double t = grid.node(i);
                const double p = q_ans(t) * M.at(pa, i);
                p_proc.at(pa, i) = p;
                c_proc.at(pa, i) = std::pow(p * std::exp(rho * t) / L, -1.0 / R);
            }
        }
    }

    ControlProblem problem;
    problem.horizon_T = T;
    problem.sense = Sense::Maximize;
    problem.admissible.lo = 0.0;
    problem.bsde.delta = delta;
    problem.bsde.measure = DelayMeasure::dirac(delta);
    problem.bsde.lipschitz_C = std::max({std::abs(alpha - r), alpha * kappa, lambda, 1.0});
    problem.bsde.terminal = make_terminal(params.xi, ensemble);
    problem.bsde.generator = [alpha, r, lambda, kappa](double, double y, double ydel, double z,
                                                       double, double v, double) {
        return (alpha - r) * y - lambda * z - alpha * kappa * ydel + v;
    };

    problem.hamiltonian.f = problem.bsde.generator;
    problem.hamiltonian.l = [L, rho, R](const ThetaArgs& a) {
        return L * std::exp(-rho * a.t) * std::pow(a.v, 1.0 - R) / (1.0 - R);
    };
    problem.hamiltonian.H_y = [alpha, r](const ThetaArgs& a) { return (r - alpha) * a.p; };
    problem.hamiltonian.H_ydel = [alpha, kappa](const ThetaArgs& a) {
        return alpha * kappa * a.p;
    };
    problem.hamiltonian.H_z = [lambda](const ThetaArgs& a) { return lambda * a.p; };
    problem.hamiltonian.H_v = [L, rho, R](const ThetaArgs& a) {
        return L * std::exp(-rho * a.t) * std::pow(a.v, -R) - a.p;
    };
    problem.hamiltonian.sample_point = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> coord(-2.0, 2.0);
        std::uniform_real_distribution<double> pos(0.1, 2.0);
        std::uniform_real_distribution<double> time(0.05, 1.0);
        ThetaArgs a;
        a.t = time(rng);
        a.y = coord(rng);
        a.ydel = coord(rng);
        a.z = coord(rng);
        a.zdel = coord(rng);
        a.v = pos(rng);
        a.vdel = coord(rng);
        a.p = coord(rng);
        return a;
    };
    problem.gamma_adjoint_y = [K](double) { return -K; };  // p(0) = K
    problem.running_cost = problem.hamiltonian.l;
    problem.gamma = [K](double y) { return -K * y; };
    problem.gamma_y = [K](double) { return -K; };

    const PicardOptions popts = picard_options(numerics);
    auto [state, report] = solve_controlled(problem.bsde, c_proc, problem.eta, ensemble, popts);
    out.state = state;

    out.c_mean.assign(grid.n_nodes(), 0.0);
    out.theta_mean.assign(grid.n_nodes(), std::numeric_limits<double>::quiet_NaN());
    const double y_threshold = 1e-6;
    for (int i = i0; i <= last; ++i) {
        double c_acc = 0.0, th_acc = 0.0;
        int th_n = 0;
        for (int pa = 0; pa < numerics.n_paths; ++pa) {
            c_acc += c_proc.at(pa, i);
            const double y = state.y.at(pa, i);
            if (std::abs(y) > y_threshold) {
                th_acc += state.z.at(pa, i) / (params.sigma * y);
                th_n += 1;
            }
        }
        out.c_mean[i] = c_acc / numerics.n_paths;
        if (th_n > 0) out.theta_mean[i] = th_acc / th_n;
    }

    out.stationarity =
        maximum_condition_residual(problem, c_proc, state, p_proc, ensemble, numerics.exec);
    out.gradients = check_hamiltonian_gradients(problem.hamiltonian, 100, numerics.seed);
    if (numerics.verify) {
        out.report = verify_optimality(problem, c_proc, ensemble, optimality_options(numerics));
    } else {
        const ObjectiveEstimate est = objective_functional(problem, c_proc, ensemble, popts);
        out.report.J_candidate = est.J;
        out.report.J_candidate_se = est.se;
    }
    out.report.max_condition_residual = max_over(out.stationarity);
    return out;
}

App3Result app3_solve(const App3Params& params, const Numerics& numerics) {
    const double T = params.T;
    const double delta = params.delta;
    const double alpha = params.alpha, K = params.K;
    const double b1 = params.beta1, b2 = params.beta2;
    const double g1 = params.gamma1, g2 = params.gamma2;

    const TimeGrid grid = state_grid(T, delta, numerics.n_steps);
    const double dt = grid.dt();
    const int n_lag = grid.index_of(0.0);
    const TimeGrid ext_grid = TimeGrid::uniform(0.0, T + n_lag * dt, numerics.n_steps + n_lag);

    App3Result out;
    out.coupled = coupled_aode_solve(b1, b2, g1, g2, K, n_lag * dt, T, ext_grid);

    const PathEnsemble ensemble =
        generate_brownian(grid, numerics.n_paths, 1, numerics.seed, numerics.exec,
                          Pairing::Antithetic);
    const SampledProcess M = exponential_martingale(out.coupled.gamma, ensemble, numerics.exec);

    const int i0 = grid.index_of(0.0);
    const int last = grid.n_nodes() - 1;
    const ExponentialAnsatz q_ans{out.coupled.h, K, T};
    SampledProcess p_proc(grid, numerics.n_paths, 1, true);
    SampledProcess u_proc(grid, numerics.n_paths, 1, true);
    for (int i = 0; i <= last; ++i) {
        const double t = grid.node(i);
        const double Rt = (i >= i0) ? params.R(t) : 1.0;
        if (i >= i0 && !(Rt > 0.0)) throw DomainError("app3 needs R(t) > 0 on [0, T]");
        for (int pa = 0; pa < numerics.n_paths; ++pa) {
            if (i < i0) {
                p_proc.at(pa, i) = 0.0;
                u_proc.at(pa, i) = 0.0;
            } else {
                const double p = q_ans(t) * M.at(pa, i);
                p_proc.at(pa, i) = p;
                u_proc.at(pa, i) = alpha * p / Rt;
            }
        }
    }

    ControlProblem problem;
    problem.horizon_T = T;
    problem.sense = Sense::Minimize;
    problem.bsde.delta = delta;
    problem.bsde.measure = DelayMeasure::dirac(delta);
    problem.bsde.lipschitz_C = std::max({b1, b2, g1, g2, alpha, 1.0});
    problem.bsde.terminal = make_terminal(params.xi, ensemble);
    problem.bsde.generator = [b1, b2, g1, g2, alpha](double, double y, double ydel, double z,
                                                     double zdel, double v, double) {
        return -(b1 * y + b2 * ydel + g1 * z + g2 * zdel + alpha * v);
    };

    problem.hamiltonian.f = problem.bsde.generator;
    problem.hamiltonian.l = [Rf = params.R](const ThetaArgs& a) {
        return -0.5 * Rf(a.t) * a.v * a.v;
    };
    problem.hamiltonian.H_y = [b1](const ThetaArgs& a) { return b1 * a.p; };
    problem.hamiltonian.H_ydel = [b2](const ThetaArgs& a) { return b2 * a.p; };
    problem.hamiltonian.H_z = [g1](const ThetaArgs& a) { return g1 * a.p; };
    problem.hamiltonian.H_zdel = [g2](const ThetaArgs& a) { return g2 * a.p; };
    problem.hamiltonian.H_v = [Rf = params.R, alpha](const ThetaArgs& a) {
        return -Rf(a.t) * a.v + alpha * a.p;
    };
    problem.gamma_adjoint_y = [K](double) { return -K; };  // p(0) = K
    problem.running_cost = [Rf = params.R](const ThetaArgs& a) {
        return 0.5 * Rf(a.t) * a.v * a.v;
    };
    problem.gamma = [K](double y) { return K * y; };
    problem.gamma_y = [K](double) { return K; };

    const PicardOptions popts = picard_options(numerics);
    auto [state, report] = solve_controlled(problem.bsde, u_proc, problem.eta, ensemble, popts);
    out.state = state;

    out.u_mean.assign(grid.n_nodes(), 0.0);
    for (int i = i0; i <= last; ++i) {
        double acc = 0.0;
        for (int pa = 0; pa < numerics.n_paths; ++pa) acc += u_proc.at(pa, i);
        out.u_mean[i] = acc / numerics.n_paths;
    }

    out.stationarity =
        maximum_condition_residual(problem, u_proc, state, p_proc, ensemble, numerics.exec);
    out.gradients = check_hamiltonian_gradients(problem.hamiltonian, 100, numerics.seed);
    if (numerics.verify) {
        out.report = verify_optimality(problem, u_proc, ensemble, optimality_options(numerics));
    } else {
        const ObjectiveEstimate est = objective_functional(problem, u_proc, ensemble, popts);
        out.report.J_candidate = est.J;
        out.report.J_candidate_se = est.se;
    }
    out.report.max_condition_residual = max_over(out.stationarity);
    return out;
}

}  // namespace bsdelay
