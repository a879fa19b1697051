#include "bsdelay/control.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

double HamiltonianSpec::value(const ThetaArgs& a) const {
    const double lv = l ? l(a) : 0.0;
    return lv - f(a.t, a.y, a.ydel, a.z, a.zdel, a.v, a.vdel) * a.p;
}

GradientCheck check_hamiltonian_gradients(const HamiltonianSpec& spec, int n_points,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> time(0.05, 1.0);

    struct Slot {
        double ThetaArgs::* field;
        const std::function<double(const ThetaArgs&)>* partial;
    };
    const Slot slots[] = {
        {&ThetaArgs::y, &spec.H_y},       {&ThetaArgs::ydel, &spec.H_ydel},
        {&ThetaArgs::z, &spec.H_z},       {&ThetaArgs::zdel, &spec.H_zdel},
        {&ThetaArgs::v, &spec.H_v},       {&ThetaArgs::vdel, &spec.H_vdel},
    };

    GradientCheck out;
    out.n_points = n_points;
    const double step = 1e-6;
    for (int k = 0; k < n_points; ++k) {
        ThetaArgs a;
        if (spec.sample_point) {
            a = spec.sample_point(rng);
        } else {
            a.t = time(rng);
            a.y = coord(rng);
            a.ydel = coord(rng);
            a.z = coord(rng);
            a.zdel = coord(rng);
            a.v = coord(rng);
            a.vdel = coord(rng);
            a.p = coord(rng);
        }
        for (const auto& s : slots) {
            const double analytic = *s.partial ? (*s.partial)(a) : 0.0;
            ThetaArgs hi = a, lo = a;
            hi.*(s.field) += step;
            lo.*(s.field) -= step;
            const double fd = (spec.value(hi) - spec.value(lo)) / (2.0 * step);
            const double rel = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
            out.max_rel_error = std::max(out.max_rel_error, rel);
        }
    }
    return out;
}

namespace {

// Theta tables for a solved trajectory: delayed aggregates of y, z and the
// control, computed once over [i0, last].
struct ThetaContext {
    SampledProcess y, z, v;
    std::vector<std::vector<double>> Yd, Zd, Vd;
    int i0 = 0;
    int last = 0;

    ThetaContext(const ControlProblem& problem, const SampledProcess& control,
                 const BSDESolution& solution, Execution exec)
        : y(solution.y), z(solution.z), v(control) {
        const TimeGrid& grid = y.grid();
        i0 = (grid.t_start() < 0.0) ? grid.index_of(0.0) : 0;
        last = grid.n_nodes() - 1;
        if (i0 > 0) {
            y = splice_boundary_path(y, problem.bsde.initial_y, BoundarySegment::Initial, 0.0);
            z = splice_boundary_path(z, problem.bsde.initial_z, BoundarySegment::Initial, 0.0);
            v = splice_boundary_path(v, problem.eta, BoundarySegment::Initial, 0.0);
        }
        Yd = aggregate_all(y, i0, last, problem.bsde.measure, problem.bsde.kernel,
                           Direction::Delayed, problem.bsde.aggregate_options, exec);
        Zd = aggregate_all(z, i0, last, problem.bsde.measure, problem.bsde.kernel,
                           Direction::Delayed, problem.bsde.aggregate_options, exec);
        Vd = aggregate_all(v, i0, last, problem.bsde.measure, problem.bsde.kernel,
                           Direction::Delayed, problem.bsde.aggregate_options, exec);
    }

    ThetaArgs at(int node, int path, double p) const {
        ThetaArgs a;
        a.t = y.grid().node(node);
        a.y = y.at(path, node);
        a.ydel = Yd[node][path];
        a.z = z.at(path, node);
        a.zdel = Zd[node][path];
        a.v = v.at(path, node);
        a.vdel = Vd[node][path];
        a.p = p;
        return a;
    }
};

DelayKernel swap_kernel(const DelayKernel& k) {
    DelayKernel s;
    s.bound = k.bound;
    s.eval = [eval = k.eval](double t, double u) { return eval(u, t); };
    return s;
}

}  // namespace

ASDEProblem build_adjoint(const ControlProblem& problem,
                          std::shared_ptr<const SampledProcess> control,
                          std::shared_ptr<const BSDESolution> solution, Execution exec) {
    auto ctx = std::make_shared<const ThetaContext>(problem, *control, *solution, exec);
    const int i0 = ctx->i0;
    const int last = ctx->last;
    const double dt = ctx->y.grid().dt();
    const double T = problem.horizon_T;

    double y0 = 0.0;
    for (int p = 0; p < ctx->y.n_paths(); ++p) y0 += ctx->y.at(p, i0);
    y0 /= ctx->y.n_paths();

    const bool has_ydel = static_cast<bool>(problem.hamiltonian.H_ydel);
    const bool has_zdel = static_cast<bool>(problem.hamiltonian.H_zdel);

    ASDEProblem adj;
    adj.x0 = -problem.gamma_adjoint_y(y0);
    adj.horizon_T = T;
    adj.terminal_path = [](double) { return 0.0; };
    adj.lipschitz_C = problem.bsde.lipschitz_C;
    if (has_ydel || has_zdel) {
        adj.delta = problem.bsde.delta;
        adj.measure = problem.bsde.measure;
        adj.kernel = swap_kernel(problem.bsde.kernel);
        adj.aggregate_options = problem.bsde.aggregate_options;
        adj.aggregate_options.has_chi_clip = true;
        adj.aggregate_options.chi_clip_at = T;
        adj.aggregate_options.clip_before_start = false;
    } else {
        adj.delta = 0.0;  // classical SDE; skip the advanced machinery entirely
    }

    const auto sol_node = [i0, last](int step) { return std::min(i0 + step, last); };

    const auto payload_of = [ctx, i0, last, dt, T](std::function<double(const ThetaArgs&)> part) {
        return [ctx, i0, last, dt, T, part = std::move(part)](int future_node, int path,
                                                             double x_future) {
            const double tf = future_node * dt;
            const int node = i0 + future_node;
            if (tf > T + 1e-12 || node > last) return 0.0;  // chi_{[0,T]}
            return part ? part(ctx->at(node, path, x_future)) : 0.0;
        };
    };
    if (has_ydel || has_zdel) {
        adj.drift_payload = payload_of(problem.hamiltonian.H_ydel);
        adj.diffusion_payload = payload_of(problem.hamiltonian.H_zdel);
    }

    adj.drift = [ctx, sol_node, H_y = problem.hamiltonian.H_y](int step, int path, double,
                                                               double x, double adv) {
        const double hy = H_y ? H_y(ctx->at(sol_node(step), path, x)) : 0.0;
        return -hy - adv;
    };
    adj.diffusion = [ctx, sol_node, H_z = problem.hamiltonian.H_z, has_zdel](
                        int step, int path, double, double x, double adv) {
        const double hz = H_z ? H_z(ctx->at(sol_node(step), path, x)) : 0.0;
        return -hz - (has_zdel ? adv : 0.0);
    };
    return adj;
}

std::vector<double> maximum_condition_residual(const ControlProblem& problem,
                                               const SampledProcess& u,
                                               const BSDESolution& solution,
                                               const SampledProcess& p,
                                               const PathEnsemble& ensemble, Execution exec) {
    const ThetaContext ctx(problem, u, solution, exec);
    const TimeGrid& grid = ctx.y.grid();
    const int n_paths = ctx.y.n_paths();
    const int iT = grid.index_of(problem.horizon_T);

    std::vector<std::vector<double>> adv;
    if (problem.hamiltonian.H_vdel) {
        SampledProcess hv(grid, n_paths, 1, true);
        for (int i = ctx.i0; i <= iT; ++i) {
            for (int pa = 0; pa < n_paths; ++pa) {
                hv.at(pa, i) = problem.hamiltonian.H_vdel(ctx.at(i, pa, p.at(pa, i)));
            }
        }
        AggregateOptions opts = problem.bsde.aggregate_options;
        opts.has_chi_clip = true;
        opts.chi_clip_at = problem.horizon_T;
        auto raw = aggregate_all(hv, ctx.i0, iT, problem.bsde.measure,
                                 swap_kernel(problem.bsde.kernel), Direction::Advanced, opts,
                                 exec);
        adv.resize(grid.n_nodes());
        for (int i = ctx.i0; i <= iT; ++i) {
            adv[i] = conditional_expectation(raw[i], i, ensemble, RegressionBasis::brownian(3));
        }
    }

    std::vector<double> res(grid.n_nodes(), 0.0);
    for (int i = ctx.i0; i <= iT; ++i) {
        double acc = 0.0;
        for (int pa = 0; pa < n_paths; ++pa) {
            const ThetaArgs a = ctx.at(i, pa, p.at(pa, i));
            const double hv = problem.hamiltonian.H_v ? problem.hamiltonian.H_v(a) : 0.0;
            const double av = adv.empty() ? 0.0 : adv[i][pa];
            acc += std::abs(hv + av);
        }
        res[i] = acc / n_paths;
    }
    return res;
}

std::vector<double> hamiltonian_gap_scan(const ControlProblem& problem, const SampledProcess& u,
                                         const BSDESolution& solution, const SampledProcess& p,
                                         const PathEnsemble& ensemble,
                                         const std::vector<double>& v_grid) {
    (void)ensemble;
    const ThetaContext ctx(problem, u, solution, Execution::Parallel);
    const TimeGrid& grid = ctx.y.grid();
    const int n_paths = ctx.y.n_paths();
    const int iT = grid.index_of(problem.horizon_T);

    std::vector<double> gap(grid.n_nodes(), 0.0);
    for (int i = ctx.i0; i <= iT; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (double vv : v_grid) {
            double acc = 0.0;
            for (int pa = 0; pa < n_paths; ++pa) {
                ThetaArgs a = ctx.at(i, pa, p.at(pa, i));
                const double h_u = problem.hamiltonian.value(a);
                a.v = vv;
                acc += problem.hamiltonian.value(a) - h_u;
            }
            best = std::max(best, acc / n_paths);
        }
        gap[i] = best;
    }
    return gap;
}

ObjectiveEstimate objective_functional(const ControlProblem& problem,
                                       const SampledProcess& control,
                                       const PathEnsemble& ensemble,
                                       const PicardOptions& opts) {
    auto [sol, report] = solve_controlled(problem.bsde, control, problem.eta, ensemble, opts);
    const ThetaContext ctx(problem, control, sol, opts.exec);
    const TimeGrid& grid = ensemble.grid();
    const int n_paths = ensemble.n_paths();
    const int iT = grid.index_of(problem.horizon_T);

    ObjectiveEstimate est;
    est.per_path.assign(n_paths, 0.0);
    std::vector<double> running(n_paths, 0.0);
    const bool exec_par = opts.exec == Execution::Parallel;
#pragma omp parallel for schedule(static) if (exec_par)
    for (int pa = 0; pa < n_paths; ++pa) {
        double acc = 0.0;
        for (int i = ctx.i0; i < iT; ++i) {
            acc += problem.running_cost(ctx.at(i, pa, 0.0)) * grid.dt(i);
        }
        running[pa] = acc;
    }

    double y0 = 0.0;
    for (int pa = 0; pa < n_paths; ++pa) y0 += sol.y.at(pa, ctx.i0);
    y0 /= n_paths;
    est.y0_mean = y0;

    double run_mean = 0.0;
    for (double r : running) run_mean += r;
    run_mean /= n_paths;
    est.J = run_mean + problem.gamma(y0);

    const double gy = problem.gamma_y(y0);
    for (int pa = 0; pa < n_paths; ++pa) {
        est.per_path[pa] = running[pa] + gy * sol.y.at(pa, ctx.i0);
    }
    double mean = 0.0, var = 0.0;
    for (double a : est.per_path) mean += a;
    mean /= n_paths;
    for (double a : est.per_path) var += (a - mean) * (a - mean);
    var /= std::max(1, n_paths - 1);
    est.se = std::sqrt(var / n_paths);
    return est;
}

OptimalityReport verify_optimality(const ControlProblem& problem, const SampledProcess& candidate,
                                   const PathEnsemble& ensemble, const OptimalityOptions& opts) {
    const TimeGrid& grid = ensemble.grid();
    const int n_paths = ensemble.n_paths();
    const int i0 = (grid.t_start() < 0.0) ? grid.index_of(0.0) : 0;
    const int iT = grid.index_of(problem.horizon_T);
    const double T = problem.horizon_T;

    OptimalityReport report;
    const ObjectiveEstimate base = objective_functional(problem, candidate, ensemble, opts.picard);
    report.J_candidate = base.J;
    report.J_candidate_se = base.se;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_int_distribution<int> freq(1, 4);
    std::uniform_int_distribution<int> coin(0, 1);
    const int n_mag = static_cast<int>(opts.magnitudes.size());

    for (int k = 0; k < opts.n_perturbations; ++k) {
        const int family = k % 3;
        const double rho = opts.magnitudes[(k / 3) % n_mag];
        const double ph = phase(rng);
        const double om = 2.0 * std::numbers::pi * freq(rng) / T;
        const double sign = coin(rng) ? 1.0 : -1.0;
        const double shift = (problem.bsde.delta > 0.0) ? problem.bsde.delta : 0.25 * T;

        SampledProcess v = candidate;
        std::string id;
        switch (family) {
            case 0: id = "sin"; break;
            case 1: id = "adapted-w"; break;
            default: id = "shifted"; break;
        }
        id += "-" + std::to_string(k);
        for (int pa = 0; pa < n_paths; ++pa) {
            for (int i = i0; i <= iT; ++i) {
                const double t = grid.node(i);
                double d = 0.0;
                switch (family) {
                    case 0: d = std::sin(om * t + ph); break;
                    case 1: d = sign * ensemble.w(pa, i); break;
                    default: d = (t >= shift) ? std::sin(om * (t - shift) + ph) : 0.0; break;
                }
                v.at(pa, i) = problem.admissible.clamp(candidate.at(pa, i) + rho * d);
            }
        }

        const ObjectiveEstimate pert = objective_functional(problem, v, ensemble, opts.picard);
        PerturbationResult res;
        res.id = id;
        res.magnitude = rho;
        res.J = pert.J;
        res.se = pert.se;
        res.diff = pert.J - base.J;
        double dmean = 0.0;
        for (int pa = 0; pa < n_paths; ++pa) dmean += pert.per_path[pa] - base.per_path[pa];
        dmean /= n_paths;
        double dvar = 0.0;
        for (int pa = 0; pa < n_paths; ++pa) {
            const double d = pert.per_path[pa] - base.per_path[pa] - dmean;
            dvar += d * d;
        }
        dvar /= std::max(1, n_paths - 1);
        res.diff_se = std::sqrt(dvar / n_paths);
        res.violation = (problem.sense == Sense::Minimize)
                            ? (res.diff < -2.0 * res.diff_se)
                            : (res.diff > 2.0 * res.diff_se);
        if (res.violation) report.violations += 1;
        report.perturbed.push_back(std::move(res));
    }
    return report;
}

double fubini_duality_check(const SampledProcess& H_vdel, const SampledProcess& u,
                            const SampledProcess& v, const DelayMeasure& measure,
                            const DelayKernel& kernel, const PathEnsemble& ensemble,
                            const AggregateOptions& agg_opts) {
    const TimeGrid& grid = ensemble.grid();
    const int n_paths = ensemble.n_paths();
    const int i0 = (grid.t_start() < 0.0) ? grid.index_of(0.0) : 0;
    const int last = grid.n_nodes() - 1;

    // control difference, zero on the initial segment (shared eta)
    SampledProcess dv(grid, n_paths, 1, true);
    for (int pa = 0; pa < n_paths; ++pa) {
        for (int i = 0; i <= last; ++i) {
            dv.at(pa, i) = (i < i0) ? 0.0 : v.at(pa, i) - u.at(pa, i);
        }
    }

    std::vector<std::vector<StencilEntry>> stencils(last);
    for (int s = i0; s < last; ++s) {
        stencils[s] = aggregate_stencil(grid, s, measure, kernel, Direction::Delayed, agg_opts);
    }

    double lhs = 0.0, rhs = 0.0;
    std::vector<double> coef(grid.n_nodes());
    for (int pa = 0; pa < n_paths; ++pa) {
        double l_acc = 0.0;
        std::fill(coef.begin(), coef.end(), 0.0);
        for (int s = i0; s < last; ++s) {
            const double h = H_vdel.at(pa, s) * grid.dt(s);
            double agg = 0.0;
            for (const auto& e : stencils[s]) {
                agg += e.weight * dv.at(pa, e.node);
                coef[e.node] += e.weight * h;
            }
            l_acc += h * agg;
        }
        double r_acc = 0.0;
        for (int i = 0; i <= last; ++i) r_acc += coef[i] * dv.at(pa, i);
        lhs += l_acc;
        rhs += r_acc;
    }
    return std::abs(lhs - rhs) / n_paths;
}

}  // namespace bsdelay
