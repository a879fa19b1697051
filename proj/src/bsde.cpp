#include "bsdelay/bsde.hpp"

#include <omp.h>

#include <cmath>
#include <numbers>
#include <string>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

ContractionInfo contraction_constant(double C, double M, double delta,
                                     const DelayMeasure& measure) {
    if (delta == 0.0) return {0.0, 0.0};
    const double beta = 1.0 / delta;
    const double K =
        6.0 * C * C * delta * (1.0 + 2.0 * M * M * delta * std::numbers::e * measure.total_mass());
    return {K, beta};
}

double geometric_ratio(const std::vector<double>& diffs) {
    // least-squares slope of log(diff_k) over sweeps above the noise floor
    std::vector<double> logs;
    const double floor = diffs.empty() ? 0.0 : diffs.front() * 1e-13;
    for (double d : diffs) {
        if (d > floor && d > 0.0) logs.push_back(std::log(d));
    }
    if (logs.size() < 2) return 0.0;
    const double n = static_cast<double>(logs.size());
    double sx = 0.0, sy = 0.0, sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < logs.size(); ++k) {
        sx += static_cast<double>(k);
        sy += logs[k];
        sxy += static_cast<double>(k) * logs[k];
        sxx += static_cast<double>(k) * static_cast<double>(k);
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(slope);
}

namespace {

struct ControlView {
    const SampledProcess* v = nullptr;
    const std::vector<std::vector<double>>* vdel = nullptr;
};

std::pair<BSDESolution, PicardReport> solve_impl(const DelayedBSDEProblem& problem,
                                                 const PathEnsemble& ensemble,
                                                 const PicardOptions& opts,
                                                 const ControlView& ctrl) {
    const TimeGrid& grid = ensemble.grid();
    const int n_paths = ensemble.n_paths();
    const int last = grid.n_nodes() - 1;
    const int i0 = (grid.t_start() < 0.0) ? grid.index_of(0.0) : 0;
    if (static_cast<int>(problem.terminal.size()) != n_paths) {
        throw DomainError("terminal condition length != n_paths");
    }

    const auto [K, beta] =
        contraction_constant(problem.lipschitz_C, problem.kernel.bound, problem.delta,
                             problem.measure);
    if (K >= 1.0) {
        warn_once("contraction constant K = " + std::to_string(K) +
             " >= 1; the Picard map may not contract for this delay");
    }

    double xi_mean = 0.0;
    for (double v : problem.terminal) xi_mean += v;
    xi_mean /= n_paths;

    // frozen iterate; boundary segment carries the given initial paths
    SampledProcess Y(grid, n_paths, 1, true);
    SampledProcess Z(grid, n_paths, 1, true);
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < grid.n_nodes(); ++i) {
            if (i < i0) {
                Y.at(p, i) = problem.initial_y(grid.node(i));
                Z.at(p, i) = problem.initial_z(grid.node(i));
            } else {
                Y.at(p, i) = xi_mean;
                Z.at(p, i) = 0.0;
            }
        }
    }

    SampledProcess y = Y;
    SampledProcess z = Z;
    const bool exec_par = opts.exec == Execution::Parallel;
    PicardReport report;
    report.theoretical_K = K;
    report.beta = beta;

    std::vector<double> target_y(n_paths), target_zw(n_paths);
    for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
        // delayed aggregates of the frozen iterate, one stencil per node
        auto Yd = aggregate_all(Y, i0, last - 1, problem.measure, problem.kernel,
                                Direction::Delayed, problem.aggregate_options, opts.exec);
        auto Zd = aggregate_all(Z, i0, last - 1, problem.measure, problem.kernel,
                                Direction::Delayed, problem.aggregate_options, opts.exec);

        for (int p = 0; p < n_paths; ++p) y.at(p, last) = problem.terminal[p];

        for (int i = last - 1; i >= i0; --i) {
            const double dt = grid.dt(i);
            const double t = grid.node(i);
#pragma omp parallel for schedule(static) if (exec_par)
            for (int p = 0; p < n_paths; ++p) target_y[p] = y.at(p, i + 1);
            auto ce_y = conditional_expectation(target_y, i, ensemble, opts.basis);
            // martingale control variate: the projected part of y(t_{i+1}) is
            // orthogonal to dW, so subtracting it leaves the z estimator
            // unbiased while removing most of the 1/dt noise amplification
#pragma omp parallel for schedule(static) if (exec_par)
            for (int p = 0; p < n_paths; ++p) {
                target_zw[p] = (y.at(p, i + 1) - ce_y[p]) * ensemble.dw(p, i);
            }
            auto ce_zw = conditional_expectation(target_zw, i, ensemble, opts.basis);
#pragma omp parallel for schedule(static) if (exec_par)
            for (int p = 0; p < n_paths; ++p) {
                const double zi = ce_zw[p] / dt;
                const double v = ctrl.v ? ctrl.v->at(p, i) : 0.0;
                const double vd = ctrl.vdel ? (*ctrl.vdel)[i][p] : 0.0;
                const double f = problem.generator(t, Y.at(p, i), Yd[i][p], Z.at(p, i), Zd[i][p],
                                                   v, vd);
                z.at(p, i) = zi;
                y.at(p, i) = ce_y[p] + f * dt;
            }
        }
        // z at the horizon is undefined by the scheme; extrapolate for reporting
        for (int p = 0; p < n_paths; ++p) z.at(p, last) = z.at(p, last - 1);

        // discrete beta-norm of the iterate difference on [0, T]
        double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc) if (exec_par)
        for (int p = 0; p < n_paths; ++p) {
            double s = 0.0;
            for (int i = i0; i <= last; ++i) {
                const double wgt = std::exp(beta * grid.node(i)) * ((i < last) ? grid.dt(i)
                                                                               : grid.dt(i - 1));
                const double dy = y.at(p, i) - Y.at(p, i);
                const double dz = (i < last) ? z.at(p, i) - Z.at(p, i) : 0.0;
                s += (dy * dy + dz * dz) * wgt;
            }
            acc += s;
        }
        const double diff = std::sqrt(acc / n_paths);
        report.diffs.push_back(diff);
        report.n_iterations = sweep + 1;

        Y = y;
        Z = z;
        if (diff < opts.tol) {
            report.estimated_ratio = geometric_ratio(report.diffs);
            return {BSDESolution{std::move(y), std::move(z)}, std::move(report)};
        }
    }
    throw NonConvergenceError("delayed BSDE Picard iteration did not reach tol " +
                                  std::to_string(opts.tol) + " in " +
                                  std::to_string(opts.max_iter) + " sweeps",
                              report.diffs);
}

}  // namespace

std::pair<BSDESolution, PicardReport> picard_solve(const DelayedBSDEProblem& problem,
                                                   const PathEnsemble& ensemble,
                                                   const PicardOptions& opts) {
    return solve_impl(problem, ensemble, opts, ControlView{});
}

std::pair<BSDESolution, PicardReport> solve_controlled(
    const DelayedBSDEProblem& problem, const SampledProcess& control,
    const std::function<double(double)>& eta, const PathEnsemble& ensemble,
    const PicardOptions& opts) {
    if (!control.adapted()) throw DomainError("control process must be adapted");
    const TimeGrid& grid = ensemble.grid();
    const int i0 = (grid.t_start() < 0.0) ? grid.index_of(0.0) : 0;
    SampledProcess v = (i0 > 0)
                           ? splice_boundary_path(control, eta, BoundarySegment::Initial, 0.0)
                           : control;
    auto vdel = aggregate_all(v, i0, grid.n_nodes() - 2, problem.measure, problem.kernel,
                              Direction::Delayed, problem.aggregate_options, opts.exec);
    ControlView ctrl{&v, &vdel};
    return solve_impl(problem, ensemble, opts, ctrl);
}

}  // namespace bsdelay
