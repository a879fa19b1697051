#pragma once

#include <functional>
#include <vector>

#include "bsdelay/bsde.hpp"  // PicardReport
#include "bsdelay/time_grid.hpp"

namespace bsdelay {

/// Time-advanced ODE q'(t) = a(t) q(t) + b(t) q(t+delta) on [0, T],
/// q(0) = q0, q = terminal_path on (T, T+delta].
struct AODEProblem {
    std::function<double(double)> a = [](double) { return 0.0; };
    std::function<double(double)> b = [](double) { return 0.0; };
    double delta = 0.0;
    double q0 = 0.0;
    std::function<double(double)> terminal_path = [](double) { return 0.0; };
    double horizon_T = 1.0;

    static AODEProblem constant_coefficients(double a, double b, double delta, double q0,
                                             double horizon_T);
};

/// Parameters of the characteristic equation h + alpha kappa e^{h delta} = alpha - r.
struct CharacteristicSpec {
    double alpha = 0.0;
    double r = 0.0;
    double kappa = 0.0;
    double delta = 0.0;
};

/// Root of G(h) = h - b e^{h delta} - a = 0, the exponent of the ansatz
/// q = K e^{h t} for q' = a q + b q(t+delta). Strictly increasing G for b <= 0;
/// bracketing by doubling from h0 = a + b, bisection, then Newton polish.
double advanced_exponent(double a, double b, double delta, double tol = 1e-12);

/// h with F(h) = h + alpha kappa e^{h delta} = alpha - r.
double characteristic_root(const CharacteristicSpec& spec, double tol = 1e-12);

/// The claimed closed form: q(t) = K e^{h t} on [0, T], 0 on (T, T+delta].
struct ExponentialAnsatz {
    double h;
    double K;
    double horizon_T;
    double operator()(double t) const;
};
ExponentialAnsatz exponential_ansatz(const CharacteristicSpec& spec, double K, double horizon_T,
                                     double tol = 1e-12);

struct AODESolution {
    std::vector<double> q;  // per grid node on [0, T+delta]
    PicardReport report;
};

/// Picard iteration with the advanced term frozen at the previous iterate:
/// each sweep integrates q' = a q + g(t), g piecewise linear between nodes,
/// exactly by integrating factor. Grid must cover [0, T+delta].
AODESolution picard_solve_aode(const AODEProblem& problem, const TimeGrid& grid,
                               double tol = 1e-12, int max_iter = 200);

/// Central-difference defect q'(t_i) - a q(t_i) - b q(t_i+delta) at interior
/// nodes of [0, T). The node at T itself is skipped (the terminal splice is
/// discontinuous there). Maxima are split at T - delta: the bulk should vanish
/// to quadrature order, the terminal layer generally does not.
struct AODEResidual {
    std::vector<double> per_node;  // aligned with grid nodes; 0 where undefined
    double max_bulk = 0.0;         // over [0, T - delta]
    double max_layer = 0.0;        // over (T - delta, T)
};
AODEResidual aode_residual(const std::vector<double>& q, const AODEProblem& problem,
                           const TimeGrid& grid);

/// The pair q' = -beta1 q - beta2 q(t+delta), gamma q = gamma1 q + gamma2 q(t+delta).
/// gamma is the ansatz constant gamma1 + gamma2 e^{h delta}; the nodewise ratio
/// gamma1 + gamma2 q(t+delta)/q(t) is reported where |q| > degeneracy_threshold
/// (NaN elsewhere) so the terminal-layer deviation is visible.
struct CoupledAODEResult {
    std::vector<double> q;  // ansatz values on the grid
    double h;
    double gamma;
    std::vector<double> gamma_nodewise;
    double max_gamma_deviation_bulk = 0.0;  // over [0, T - delta]
};
CoupledAODEResult coupled_aode_solve(double beta1, double beta2, double gamma1, double gamma2,
                                     double K, double delta, double horizon_T,
                                     const TimeGrid& grid,
                                     double degeneracy_threshold = 1e-12);

/// p(t) = p0 + int_0^t g(s) ds with g(s) = beta int_s^T p(u)/u du. The inner
/// integrand is singular at 0 but g is integrable; the solver runs on a graded
/// grid and integrates piecewise-linear p against 1/u in closed form (the first
/// cell uses int_0^eps log(eps/s) ds = eps).
struct IntegroODEProblem {
    double beta = 0.0;
    double horizon_T = 1.0;
    double p0 = 1.0;
    TimeGrid grid;  // graded on [0, T]
};

struct IntegroODESolution {
    std::vector<double> p;     // per grid node
    std::vector<double> pdot;  // g at the nodes; exactly 0 at T
    int n_iterations = 0;

    /// Linear interpolation of p between grid nodes.
    double eval(const TimeGrid& grid, double t) const;
};
IntegroODESolution integro_ode_solve(const IntegroODEProblem& problem, double tol = 1e-12,
                                     int max_iter = 200);

}  // namespace bsdelay
