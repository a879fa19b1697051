#include "bsdelay/asde.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

AsdeContraction asde_contraction_constant(double C, double M, double delta,
                                          const DelayMeasure& measure, double beta) {
    if (!(beta > 1.0)) throw DomainError("asde_contraction_constant needs beta > 1");
    const double wmass = measure.exp_weighted_mass(beta, Direction::Advanced);
    const double K = 4.0 * C * C * (1.0 + M * M * delta * wmass) / (beta - 1.0);
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (delta > 0.0 && delta < 1.0 && std::abs(beta * delta - 1.0) < 1e-12) {
        bound = 4.0 * C * C * delta *
                (1.0 + M * M * delta * std::numbers::e * measure.total_mass()) / (1.0 - delta);
    }
    return {K, beta, bound};
}

namespace {

// E^{F_t}[payload] per path for one node, from the frozen iterate.
std::vector<double> conditioned_advanced(
    const SampledProcess& frozen, int node, const ASDEProblem& problem,
    const std::function<double(int, int, double)>& payload, const ASDEOptions& opts,
    const PathEnsemble& ensemble) {
    const auto stencil = aggregate_stencil(frozen.grid(), node, problem.measure, problem.kernel,
                                           Direction::Advanced, problem.aggregate_options);
    const int n_paths = frozen.n_paths();
    std::vector<double> agg(n_paths, 0.0);
    const bool exec_par = opts.exec == Execution::Parallel;
#pragma omp parallel for schedule(static) if (exec_par)
    for (int p = 0; p < n_paths; ++p) {
        double acc = 0.0;
        for (const auto& e : stencil) {
            const double xf = frozen.at(p, e.node);
            const double val = payload ? payload(e.node, p, xf) : xf;
            if (opts.conditioning == ConditioningMode::MartingaleRatio) {
                const double mt = opts.reference_martingale->at(p, node);
                const double ms = opts.reference_martingale->at(p, e.node);
                acc += e.weight * val * (mt / ms);
            } else {
                acc += e.weight * val;
            }
        }
        agg[p] = acc;
    }
    if (opts.conditioning == ConditioningMode::MartingaleRatio) return agg;
    return conditional_expectation(agg, node, ensemble, opts.basis);
}

}  // namespace

std::pair<ASDESolution, PicardReport> picard_solve_asde(const ASDEProblem& problem,
                                                        const PathEnsemble& ensemble,
                                                        const ASDEOptions& opts) {
    const TimeGrid& grid = ensemble.grid();
    if (grid.t_start() < -1e-15) throw DomainError("ASDE grid must start at 0");
    const int iT = grid.index_of(problem.horizon_T);
    const int last = grid.n_nodes() - 1;
    const int n_paths = ensemble.n_paths();
    if (opts.conditioning == ConditioningMode::MartingaleRatio && !opts.reference_martingale) {
        throw ConfigError("MartingaleRatio conditioning needs a reference martingale");
    }

    const double beta = (problem.delta > 0.0) ? 1.0 / problem.delta : 2.0;
    // frozen iterate: x0 on [0, T], lambda beyond
    SampledProcess X(grid, n_paths, 1, true);
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i <= last; ++i) {
            X.at(p, i) = (i <= iT) ? problem.x0 : problem.terminal_path(grid.node(i));
        }
    }

    SampledProcess x = X;
    const bool exec_par = opts.exec == Execution::Parallel;
    PicardReport report;
    report.beta = beta;
    if (beta > 1.0) {
        report.theoretical_K =
            asde_contraction_constant(problem.lipschitz_C, problem.kernel.bound, problem.delta,
                                      problem.measure, beta)
                .K_prime;
    }

    const bool has_advanced = problem.delta > 0.0 && problem.measure.total_mass() > 0.0;

    for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
        for (int p = 0; p < n_paths; ++p) x.at(p, 0) = problem.x0;
        for (int i = 0; i < iT; ++i) {
            const double t = grid.node(i);
            const double dt = grid.dt(i);
            std::vector<double> adv_b, adv_s;
            if (has_advanced) {
                adv_b = conditioned_advanced(X, i, problem, problem.drift_payload, opts, ensemble);
                if (problem.diffusion_payload) {
                    adv_s = conditioned_advanced(X, i, problem, problem.diffusion_payload, opts,
                                                 ensemble);
                }
            }
#pragma omp parallel for schedule(static) if (exec_par)
            for (int p = 0; p < n_paths; ++p) {
                const double xi = x.at(p, i);
                const double ab = adv_b.empty() ? 0.0 : adv_b[p];
                const double as = adv_s.empty() ? ab : adv_s[p];
                x.at(p, i + 1) = xi + problem.drift(i, p, t, xi, ab) * dt +
                                 problem.diffusion(i, p, t, xi, as) * ensemble.dw(p, i);
            }
        }
        for (int i = iT + 1; i <= last; ++i) {
            const double lam = problem.terminal_path(grid.node(i));
            for (int p = 0; p < n_paths; ++p) x.at(p, i) = lam;
        }

        // beta-weighted discrete norm of the iterate difference on [0, T+delta]
        double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc) if (exec_par)
        for (int p = 0; p < n_paths; ++p) {
            double s = 0.0;
            for (int i = 0; i <= last; ++i) {
                const double wgt =
                    std::exp(-beta * grid.node(i)) * ((i < last) ? grid.dt(i) : grid.dt(i - 1));
                const double dx = x.at(p, i) - X.at(p, i);
                s += dx * dx * wgt;
            }
            acc += s;
        }
        const double diff = std::sqrt(acc / n_paths);
        report.diffs.push_back(diff);
        report.n_iterations = sweep + 1;
        X = x;
        if (diff < opts.tol) {
            report.estimated_ratio = geometric_ratio(report.diffs);
            return {ASDESolution{std::move(x)}, std::move(report)};
        }
    }
    throw NonConvergenceError("ASDE Picard iteration did not reach tol " +
                                  std::to_string(opts.tol) + " in " +
                                  std::to_string(opts.max_iter) + " sweeps",
                              report.diffs);
}

SampledProcess martingale_decomposition_solve(const std::vector<double>& q_nodes,
                                              double martingale_rate,
                                              const PathEnsemble& ensemble, Execution exec) {
    const TimeGrid& grid = ensemble.grid();
    if (static_cast<int>(q_nodes.size()) != grid.n_nodes()) {
        throw DomainError("q table length != grid nodes");
    }
    SampledProcess m = exponential_martingale(martingale_rate, ensemble, exec);
    SampledProcess p(grid, ensemble.n_paths(), 1, true);
    const int n_paths = ensemble.n_paths();
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int pp = 0; pp < n_paths; ++pp) {
        for (int i = 0; i < grid.n_nodes(); ++i) p.at(pp, i) = q_nodes[i] * m.at(pp, i);
    }
    return p;
}

SampledProcess martingale_decomposition_solve(const ASDEProblem& problem,
                                              const std::vector<double>& q_nodes,
                                              const PathEnsemble& ensemble, Execution exec) {
    // the shortcut needs diffusion proportional to x (advanced-free) and an
    // affine drift; probe at a few sample points
    const double t_probe[3] = {0.0, 0.5 * problem.horizon_T, problem.horizon_T};
    for (double t : t_probe) {
        const double s1 = problem.diffusion(0, 0, t, 1.0, 0.0);
        const double s2 = problem.diffusion(0, 0, t, 2.0, 0.0);
        const double s0 = problem.diffusion(0, 0, t, 0.0, 0.0);
        const double sa = problem.diffusion(0, 0, t, 1.0, 3.7);
        if (std::abs(s2 - 2.0 * s1) > 1e-12 * (1.0 + std::abs(s1)) || std::abs(s0) > 1e-14 ||
            std::abs(sa - s1) > 1e-12 * (1.0 + std::abs(s1))) {
            throw DomainError("martingale decomposition needs diffusion of the form -rate * x");
        }
        const double b0 = problem.drift(0, 0, t, 0.0, 0.0);
        const double b2 = problem.drift(0, 0, t, 2.0, 2.0);
        const double b1 = problem.drift(0, 0, t, 1.0, 1.0);
        if (std::abs(b2 - 2.0 * b1 + b0) > 1e-12 * (1.0 + std::abs(b1))) {
            throw DomainError("martingale decomposition needs an affine drift");
        }
    }
    const double rate = -problem.diffusion(0, 0, 0.0, 1.0, 0.0);
    return martingale_decomposition_solve(q_nodes, rate, ensemble, exec);
}

}  // namespace bsdelay
