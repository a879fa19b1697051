#include "bsdelay/aode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bsdelay/errors.hpp"

namespace bsdelay {

AODEProblem AODEProblem::constant_coefficients(double a, double b, double delta, double q0,
                                               double horizon_T) {
    AODEProblem p;
    p.a = [a](double) { return a; };
    p.b = [b](double) { return b; };
    p.delta = delta;
    p.q0 = q0;
    p.horizon_T = horizon_T;
    return p;
}

double advanced_exponent(double a, double b, double delta, double tol) {
    if (!(tol > 0.0)) throw DomainError("advanced_exponent needs tol > 0");
    const auto G = [&](double h) { return h - b * std::exp(h * delta) - a; };
    const auto Gp = [&](double h) { return 1.0 - b * delta * std::exp(h * delta); };

    // bracket by doubling around the delta = 0 root
    double h0 = a + b;
    double lo = h0, hi = h0;
    double step = std::max(1.0, std::abs(h0));
    const double g0 = G(h0);
    if (g0 > 0.0) {
        for (int k = 0; k < 200 && G(lo) > 0.0; ++k, step *= 2.0) lo -= step;
    } else {
        for (int k = 0; k < 200 && G(hi) < 0.0; ++k, step *= 2.0) hi += step;
    }
    if (!(G(lo) <= 0.0 && G(hi) >= 0.0)) {
        throw DomainError("advanced_exponent: no sign change found (b delta too large?)");
    }

    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        (G(mid) < 0.0 ? lo : hi) = mid;
    }
    double h = 0.5 * (lo + hi);
    for (int k = 0; k < 60; ++k) {
        const double g = G(h);
        if (std::abs(g) <= tol) break;
        const double d = Gp(h);
        if (d == 0.0) break;
        h -= g / d;
    }
    return h;
}

double characteristic_root(const CharacteristicSpec& spec, double tol) {
    // F(h) = h + alpha kappa e^{h delta} = alpha - r, i.e. a = alpha - r,
    // b = -alpha kappa in the generic form
    return advanced_exponent(spec.alpha - spec.r, -spec.alpha * spec.kappa, spec.delta, tol);
}

double ExponentialAnsatz::operator()(double t) const {
    if (t > horizon_T * (1.0 + 1e-12) + 1e-15) return 0.0;
    return K * std::exp(h * t);
}

ExponentialAnsatz exponential_ansatz(const CharacteristicSpec& spec, double K, double horizon_T,
                                     double tol) {
    return ExponentialAnsatz{characteristic_root(spec, tol), K, horizon_T};
}

namespace {

double interp(const TimeGrid& grid, const std::vector<double>& q, double t) {
    const auto& nodes = grid.nodes();
    if (t <= nodes.front()) return q.front();
    if (t >= nodes.back()) return q.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    const int i = static_cast<int>(it - nodes.begin()) - 1;
    const double w = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return (1.0 - w) * q[i] + w * q[i + 1];
}

// int_0^h e^{a(h-u)} du and int_0^h u e^{a(h-u)} du, stable for small a h
void exp_step_weights(double a, double h, double& I0, double& I1) {
    const double ah = a * h;
    if (std::abs(ah) < 1e-8) {
        I0 = h * (1.0 + 0.5 * ah);
        I1 = 0.5 * h * h * (1.0 + ah / 3.0);
    } else {
        I0 = std::expm1(ah) / a;
        I1 = (std::expm1(ah) - ah) / (a * a);
    }
}

}  // namespace

AODESolution picard_solve_aode(const AODEProblem& problem, const TimeGrid& grid, double tol,
                               int max_iter) {
    const int iT = grid.index_of(problem.horizon_T);
    const int n = grid.n_nodes();

    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) {
        q[i] = (i <= iT) ? problem.q0 : problem.terminal_path(grid.node(i));
    }

    AODESolution sol;
    std::vector<double> qn(n), adv(iT + 1);
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        for (int i = 0; i <= iT; ++i) {
            const double t = grid.node(i);
            adv[i] = problem.b(t) * interp(grid, q, t + problem.delta);
        }
        qn[0] = problem.q0;
        for (int i = 0; i < iT; ++i) {
            const double h = grid.dt(i);
            const double a = problem.a(grid.node(i));
            double I0, I1;
            exp_step_weights(a, h, I0, I1);
            qn[i + 1] = std::exp(a * h) * qn[i] + adv[i] * I0 + (adv[i + 1] - adv[i]) / h * I1;
        }
        for (int i = iT + 1; i < n; ++i) qn[i] = problem.terminal_path(grid.node(i));

        double diff = 0.0;
        for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(qn[i] - q[i]));
        sol.report.diffs.push_back(diff);
        sol.report.n_iterations = sweep + 1;
        q = qn;
        if (diff < tol) {
            sol.report.estimated_ratio = geometric_ratio(sol.report.diffs);
            sol.q = std::move(q);
            return sol;
        }
    }
    throw NonConvergenceError("advanced ODE Picard iteration did not reach tol " +
                                  std::to_string(tol) + " in " + std::to_string(max_iter) +
                                  " sweeps",
                              sol.report.diffs);
}

AODEResidual aode_residual(const std::vector<double>& q, const AODEProblem& problem,
                           const TimeGrid& grid) {
    const int iT = grid.index_of(problem.horizon_T);
    AODEResidual res;
    res.per_node.assign(grid.n_nodes(), 0.0);
    const double split = problem.horizon_T - problem.delta;
    for (int i = 1; i < iT; ++i) {
        const double t = grid.node(i);
        const double dq = (q[i + 1] - q[i - 1]) / (grid.node(i + 1) - grid.node(i - 1));
        const double r =
            dq - problem.a(t) * q[i] - problem.b(t) * interp(grid, q, t + problem.delta);
        res.per_node[i] = r;
        if (t <= split + 1e-12) {
            res.max_bulk = std::max(res.max_bulk, std::abs(r));
        } else {
            res.max_layer = std::max(res.max_layer, std::abs(r));
        }
    }
    return res;
}

CoupledAODEResult coupled_aode_solve(double beta1, double beta2, double gamma1, double gamma2,
                                     double K, double delta, double horizon_T,
                                     const TimeGrid& grid, double degeneracy_threshold) {
    CoupledAODEResult out;
    out.h = advanced_exponent(-beta1, -beta2, delta);
    out.gamma = gamma1 + gamma2 * std::exp(out.h * delta);

    const ExponentialAnsatz ansatz{out.h, K, horizon_T};
    const int n = grid.n_nodes();
    out.q.resize(n);
    out.gamma_nodewise.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < n; ++i) {
        const double t = grid.node(i);
        out.q[i] = ansatz(t);
        if (t <= horizon_T + 1e-12 && std::abs(out.q[i]) > degeneracy_threshold) {
            const double g = gamma1 + gamma2 * ansatz(t + delta) / out.q[i];
            out.gamma_nodewise[i] = g;
            if (t <= horizon_T - delta + 1e-12) {
                out.max_gamma_deviation_bulk =
                    std::max(out.max_gamma_deviation_bulk, std::abs(g - out.gamma));
            }
        }
    }
    return out;
}

IntegroODESolution integro_ode_solve(const IntegroODEProblem& problem, double tol, int max_iter) {
    const TimeGrid& grid = problem.grid;
    if (std::abs(grid.t_start()) > 1e-15) throw DomainError("integro-ODE grid must start at 0");
    const int N = grid.n_steps();
    if (N < 2) throw DomainError("integro-ODE grid too coarse");
    const double eps = grid.node(1);
    if (!(eps > 0.0)) throw DomainError("integro-ODE needs a positive inner cutoff");

    std::vector<double> p(N + 1, problem.p0), pn(N + 1), G(N + 1);

    // tail integrals G_j = int_{u_j}^T p/u du for piecewise-linear p, j >= 1
    const auto tail_integrals = [&](const std::vector<double>& pv) {
        G[N] = 0.0;
        for (int i = N - 1; i >= 1; --i) {
            const double u0 = grid.node(i), u1 = grid.node(i + 1);
            const double du = u1 - u0;
            const double m = (pv[i + 1] - pv[i]) / du;
            G[i] = G[i + 1] + (pv[i] - m * u0) * std::log(u1 / u0) + m * du;
        }
    };

    IntegroODESolution sol;
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        tail_integrals(p);
        pn[0] = problem.p0;
        // first cell: p linear on [0, eps], int_0^eps log(eps/s) ds = eps
        pn[1] = problem.p0 +
                problem.beta * (problem.p0 * eps + 0.5 * (p[1] - p[0]) * eps + eps * G[1]);
        for (int j = 1; j < N; ++j) {
            const double u0 = grid.node(j), u1 = grid.node(j + 1);
            const double du = u1 - u0;
            const double L = std::log(u1 / u0);
            const double m = (p[j + 1] - p[j]) / du;
            // int_{u_j}^{u_{j+1}} p(u)(u - u_j)/u du, exact for linear p
            const double D =
                p[j] * du + 0.5 * m * du * du - u0 * ((p[j] - m * u0) * L + m * du);
            pn[j + 1] = pn[j] + problem.beta * (G[j + 1] * du + D);
        }

        double diff = 0.0;
        for (int j = 0; j <= N; ++j) diff = std::max(diff, std::abs(pn[j] - p[j]));
        p = pn;
        sol.n_iterations = sweep + 1;
        if (diff < tol) {
            tail_integrals(p);
            sol.p = std::move(p);
            sol.pdot.resize(N + 1);
            sol.pdot[0] = std::numeric_limits<double>::infinity();  // -beta log s blowup at 0
            for (int j = 1; j <= N; ++j) sol.pdot[j] = problem.beta * G[j];
            return sol;
        }
    }
    throw NonConvergenceError("integro-ODE Picard iteration did not reach tol " +
                                  std::to_string(tol) + " in " + std::to_string(max_iter) +
                                  " sweeps",
                              {});
}

double IntegroODESolution::eval(const TimeGrid& grid, double t) const {
    const auto& nodes = grid.nodes();
    if (t <= nodes.front()) return p.front();
    if (t >= nodes.back()) return p.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    const int i = static_cast<int>(it - nodes.begin()) - 1;
    const double w = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return (1.0 - w) * p[i] + w * p[i + 1];
}

}  // namespace bsdelay
