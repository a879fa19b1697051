#pragma once

#include <functional>
#include <vector>

#include "bsdelay/bsde.hpp"  // PicardReport, geometric_ratio
#include "bsdelay/delay.hpp"
#include "bsdelay/ensemble.hpp"
#include "bsdelay/regression.hpp"

namespace bsdelay {

/// Contraction constant of the time-advanced Picard map:
/// K' = 4 C^2 [1 + M^2 delta int_0^delta e^{beta s} alpha(ds)] / (beta - 1).
/// When beta == 1/delta also carries the bound form
/// 4 C^2 delta [1 + M^2 delta e alpha([0, delta])] / (1 - delta).
struct AsdeContraction {
    double K_prime;
    double beta;
    double proof_bound;  // NaN unless beta == 1/delta and delta < 1
};
AsdeContraction asde_contraction_constant(double C, double M, double delta,
                                          const DelayMeasure& measure, double beta);

/// Forward equation whose coefficients see future values through conditional
/// expectations:
///   dx = b(t, x, E^{F_t}[payload_{delta+}]) dt + sigma(t, x, ...) dW,
///   x(0) = x0,  x = lambda on (T, T+delta].
/// Coefficients receive the step and path so application adjoints can read
/// ambient processes. The payload maps a future frozen-iterate value into the
/// quantity aggregated over [t, t+delta] and conditioned on F_t; identity when
/// unset.
struct ASDEProblem {
    std::function<double(int step, int path, double t, double x, double adv)> drift;
    std::function<double(int step, int path, double t, double x, double adv)> diffusion;
    std::function<double(int future_node, int path, double x_future)> drift_payload;      // optional
    std::function<double(int future_node, int path, double x_future)> diffusion_payload;  // optional
    double x0 = 0.0;
    std::function<double(double)> terminal_path = [](double) { return 0.0; };  // lambda on (T, T+delta]
    double horizon_T = 1.0;
    double delta = 0.0;
    DelayMeasure measure = DelayMeasure::dirac(0.0);
    DelayKernel kernel = DelayKernel::one();
    double lipschitz_C = 1.0;
    AggregateOptions aggregate_options{};
};

struct ASDESolution {
    SampledProcess x;  // on [0, T+delta], terminal segment = lambda
};

enum class ConditioningMode {
    Regression,       // E^{F_t}[.] by least-squares regression on the time-t state
    MartingaleRatio,  // E^{F_t}[X(s)] = X(s) Mref(t)/Mref(s), exact for X = deterministic * Mref
};

struct ASDEOptions {
    double tol = 1e-8;
    int max_iter = 40;
    RegressionBasis basis = RegressionBasis::brownian(3);
    Execution exec = Execution::Parallel;
    ConditioningMode conditioning = ConditioningMode::Regression;
    const SampledProcess* reference_martingale = nullptr;  // required for MartingaleRatio
};

/// Picard iteration of the map X -> x: advanced aggregates and their
/// conditional expectations are taken on the frozen iterate, then one forward
/// Euler-Maruyama sweep. The instantaneous coefficient argument uses the
/// running state, so problems without advanced terms reduce to plain
/// Euler-Maruyama in a single sweep.
std::pair<ASDESolution, PicardReport> picard_solve_asde(const ASDEProblem& problem,
                                                        const PathEnsemble& ensemble,
                                                        const ASDEOptions& opts = {});

/// p(t) = q(t) M(t) with M = exp(-rate W - rate^2 t / 2); the shortcut for
/// linear adjoint equations with multiplicative diffusion.
SampledProcess martingale_decomposition_solve(const std::vector<double>& q_nodes,
                                              double martingale_rate,
                                              const PathEnsemble& ensemble,
                                              Execution exec = Execution::Parallel);

/// Validates the multiplicative structure of a linear adjoint ASDE (drift
/// a x - b E[x(t+delta)], diffusion -rate x) by probing the coefficients, then
/// applies the decomposition. Throws DomainError on non-multiplicative specs.
SampledProcess martingale_decomposition_solve(const ASDEProblem& problem,
                                              const std::vector<double>& q_nodes,
                                              const PathEnsemble& ensemble,
                                              Execution exec = Execution::Parallel);

}  // namespace bsdelay
