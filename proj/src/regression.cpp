#include "bsdelay/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

RegressionBasis RegressionBasis::brownian(int degree) {
    RegressionBasis b;
    b.degree = degree;
    b.state = [](const PathEnsemble& ens, int path, int node, std::vector<double>& out) {
        out.resize(ens.dim());
        for (int k = 0; k < ens.dim(); ++k) out[k] = ens.w(path, node, k);
    };
    return b;
}

namespace {

// Multi-indices of total degree <= degree over n_vars variables.
void build_exponents(int n_vars, int degree, std::vector<int>& current,
                     std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == n_vars) {
        out.push_back(current);
        return;
    }
    int used = 0;
    for (int e : current) used += e;
    for (int e = 0; e + used <= degree; ++e) {
        current.push_back(e);
        build_exponents(n_vars, degree, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<double> conditional_expectation(std::span<const double> target, int node,
                                            const PathEnsemble& ensemble,
                                            const RegressionBasis& basis,
                                            RegressionDiagnostics* diag) {
    const int n = ensemble.n_paths();
    if (static_cast<int>(target.size()) != n) {
        throw DomainError("conditional_expectation target length != n_paths");
    }
    for (double v : target) {
        if (!std::isfinite(v)) throw DomainError("conditional_expectation target is not finite");
    }

    if (basis.degree == 0) {
        double mean = 0.0;
        for (double v : target) mean += v;
        mean /= n;
        return std::vector<double>(n, mean);
    }

    std::vector<double> state;
    basis.state(ensemble, 0, node, state);
    const int n_vars = static_cast<int>(state.size());
    std::vector<std::vector<int>> exps;
    {
        std::vector<int> cur;
        build_exponents(n_vars, basis.degree, cur, exps);
    }
    const int n_basis = static_cast<int>(exps.size());

    Eigen::MatrixXd design(n, n_basis);
    for (int p = 0; p < n; ++p) {
        basis.state(ensemble, p, node, state);
        for (int j = 0; j < n_basis; ++j) {
            double m = 1.0;
            for (int k = 0; k < n_vars; ++k) {
                for (int e = 0; e < exps[j][k]; ++e) m *= state[k];
            }
            design(p, j) = m;
        }
    }

    // degenerate state (e.g. the time-0 node, where W == 0 on every path):
    // the sigma-algebra is trivial and the projection is the plain mean
    bool degenerate = true;
    for (int j = 0; j < n_basis && degenerate; ++j) {
        int total = 0;
        for (int k = 0; k < n_vars; ++k) total += exps[j][k];
        if (total == 0) continue;
        const double ref = design(0, j);
        for (int p = 1; p < n; ++p) {
            if (design(p, j) != ref) {
                degenerate = false;
                break;
            }
        }
    }
    if (degenerate) {
        double mean = 0.0;
        for (double v : target) mean += v;
        mean /= n;
        if (diag) {
            diag->condition = 1.0;
            diag->rank_deficient = false;
        }
        return std::vector<double>(n, mean);
    }

    Eigen::Map<const Eigen::VectorXd> y(target.data(), n);
    // normal equations; assembly order is deterministic
    Eigen::MatrixXd gram = design.transpose() * design;
    Eigen::VectorXd rhs = design.transpose() * y;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double ev_max = es.eigenvalues().maxCoeff();
    const double ev_min = es.eigenvalues().minCoeff();
    const double cond = (ev_min > 0.0) ? ev_max / ev_min : std::numeric_limits<double>::infinity();

    Eigen::VectorXd coef;
    bool deficient = !(ev_min > ev_max * 1e-13);
    if (deficient) {
        warn("regression normal equations rank-deficient (condition " + std::to_string(cond) +
             "); using pseudo-inverse");
        Eigen::VectorXd inv_ev = es.eigenvalues();
        for (int j = 0; j < inv_ev.size(); ++j) {
            inv_ev(j) = (inv_ev(j) > ev_max * 1e-13) ? 1.0 / inv_ev(j) : 0.0;
        }
        coef = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose() * rhs;
    } else {
        coef = gram.ldlt().solve(rhs);
    }
    if (diag) {
        diag->condition = cond;
        diag->rank_deficient = deficient;
    }

    Eigen::VectorXd fitted = design * coef;
    return std::vector<double>(fitted.data(), fitted.data() + n);
}

}  // namespace bsdelay
