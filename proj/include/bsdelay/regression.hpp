#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bsdelay/ensemble.hpp"

namespace bsdelay {

/// Polynomial regression basis on a per-path state at a node. Degree 0 reduces
/// the conditional expectation to the cross-path sample mean.
struct RegressionBasis {
    int degree = 3;
    /// Regressor variables for (path, node); default: Brownian components.
    std::function<void(const PathEnsemble&, int path, int node, std::vector<double>&)> state;

    static RegressionBasis brownian(int degree = 3);
    static RegressionBasis mean_only() { return brownian(0); }
};

struct RegressionDiagnostics {
    double condition = 0.0;
    bool rank_deficient = false;
};

/// Least-squares projection of target onto polynomial functions of the time-t
/// state, evaluated per path. Rank-deficient normal equations fall back to a
/// pseudo-inverse with a logged condition-number warning.
std::vector<double> conditional_expectation(std::span<const double> target, int node,
                                            const PathEnsemble& ensemble,
                                            const RegressionBasis& basis,
                                            RegressionDiagnostics* diag = nullptr);

}  // namespace bsdelay
