#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bsdelay/delay.hpp"
#include "bsdelay/ensemble.hpp"
#include "bsdelay/regression.hpp"

namespace bsdelay {

/// Contraction constant of the delayed-BSDE Picard map at the weight
/// beta = 1/delta: K = 6 C^2 delta [1 + 2 M^2 delta e alpha([-delta,0])].
struct ContractionInfo {
    double K;
    double beta;
};
ContractionInfo contraction_constant(double C, double M, double delta,
                                     const DelayMeasure& measure);

/// Backward equation with a time-delayed generator:
///   y(t) = xi + int_t^T f(s, y, y_del, z, z_del, v, v_del) ds - int_t^T z dW.
/// The control slots (v, v_del) are ignored by uncontrolled problems.
struct DelayedBSDEProblem {
    std::function<double(double t, double y, double ydel, double z, double zdel, double v,
                         double vdel)>
        generator;
    std::vector<double> terminal;  // xi per path, measurable at T
    double delta = 0.0;
    DelayMeasure measure = DelayMeasure::dirac(0.0);
    DelayKernel kernel = DelayKernel::one();
    std::function<double(double)> initial_y = [](double) { return 0.0; };  // phi on [-delta, 0)
    std::function<double(double)> initial_z = [](double) { return 0.0; };  // psi on [-delta, 0)
    double lipschitz_C = 1.0;
    AggregateOptions aggregate_options{};
};

struct BSDESolution {
    SampledProcess y;
    SampledProcess z;  // z at the last node is extrapolated from the previous one
};

struct PicardReport {
    int n_iterations = 0;
    std::vector<double> diffs;  // successive beta-norm iterate differences
    double estimated_ratio = 0.0;
    double theoretical_K = 0.0;
    double beta = 0.0;
};

struct PicardOptions {
    double tol = 1e-8;
    int max_iter = 40;
    RegressionBasis basis = RegressionBasis::brownian(3);
    Execution exec = Execution::Parallel;
};

/// Picard iteration of the map (Y, Z) -> (y, z): the generator is evaluated at
/// the frozen iterate (including all delayed aggregates) and the inner step
/// solves a classical BSDE backward by regression Monte Carlo.
std::pair<BSDESolution, PicardReport> picard_solve(const DelayedBSDEProblem& problem,
                                                   const PathEnsemble& ensemble,
                                                   const PicardOptions& opts = {});

/// Same solve with the generator partially applied at (v(t), v_del(t)). The
/// control must be adapted; eta is its deterministic initial path on [-delta, 0).
std::pair<BSDESolution, PicardReport> solve_controlled(
    const DelayedBSDEProblem& problem, const SampledProcess& control,
    const std::function<double(double)>& eta, const PathEnsemble& ensemble,
    const PicardOptions& opts = {});

/// Geometric-fit slope of a diff history (least squares on the log).
double geometric_ratio(const std::vector<double>& diffs);

}  // namespace bsdelay
