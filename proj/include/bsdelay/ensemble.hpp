#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsdelay/exec.hpp"
#include "bsdelay/process.hpp"
#include "bsdelay/time_grid.hpp"

namespace bsdelay {

/// Seeded ensemble of Brownian increments and cumulative paths. Increments on
/// steps starting before time 0 are zero, so W == 0 on [t_start, 0] and W is
/// standard Brownian motion from the time-0 node on.
class PathEnsemble {
public:
    PathEnsemble(TimeGrid grid, int n_paths, int dim, std::uint64_t seed);

    const TimeGrid& grid() const { return grid_; }
    int n_paths() const { return n_paths_; }
    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }

    double dw(int path, int step, int k = 0) const {
        return increments_[(static_cast<std::size_t>(path) * grid_.n_steps() + step) * dim_ + k];
    }
    double w(int path, int node, int k = 0) const {
        return cumulative_[(static_cast<std::size_t>(path) * grid_.n_nodes() + node) * dim_ + k];
    }

    std::vector<double>& increments() { return increments_; }
    const std::vector<double>& increments() const { return increments_; }
    const std::vector<double>& cumulative() const { return cumulative_; }

    /// Recompute cumulative sums after writing increments directly.
    void rebuild_cumulative();

private:
    TimeGrid grid_;
    int n_paths_;
    int dim_;
    std::uint64_t seed_;
    std::vector<double> increments_;
    std::vector<double> cumulative_;
};

enum class Pairing {
    Independent,  // one stream per path
    Antithetic,   // odd paths mirror their even partner: W_{2j+1} = -W_{2j}
};

/// Gaussian increments with variance dt_i per step; deterministic given the
/// seed, identical for serial and parallel execution (per-path streams).
/// Antithetic pairing zeroes every cross-path sample mean of W exactly, which
/// the perturbation sweeps rely on as a variance reduction.
PathEnsemble generate_brownian(const TimeGrid& grid, int n_paths, int dim, std::uint64_t seed,
                               Execution exec = Execution::Parallel,
                               Pairing pairing = Pairing::Independent);

/// M(t) = exp(-lambda . W(t) - 0.5 |lambda|^2 max(t, 0)); M == 1 before time 0.
SampledProcess exponential_martingale(const std::vector<double>& lambda,
                                      const PathEnsemble& ensemble,
                                      Execution exec = Execution::Parallel);
SampledProcess exponential_martingale(double lambda, const PathEnsemble& ensemble,
                                      Execution exec = Execution::Parallel);

enum class QuadratureMode {
    Ito,       // left-endpoint sum of integrand * dW (first Brownian component)
    Lebesgue,  // left-endpoint sum of integrand * dt
};

/// Per-path terminal value of the integral over [0, T]; requires an adapted
/// integrand (left-endpoint sums preserve adaptedness).
std::vector<double> path_integral(const SampledProcess& integrand, const PathEnsemble& ensemble,
                                  QuadratureMode mode, Execution exec = Execution::Parallel);

/// Versioned binary dump (header: seed, grid, dim, n_paths) for ensemble reuse.
void dump_ensemble(const PathEnsemble& ensemble, const std::string& path);
PathEnsemble load_ensemble(const std::string& path);

}  // namespace bsdelay
