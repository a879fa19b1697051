#include "bsdelay/delay.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "bsdelay/errors.hpp"

namespace bsdelay {

DelayMeasure DelayMeasure::dirac(double lag) {
    if (lag < 0.0) throw DomainError("lag must be nonnegative");
    return DelayMeasure{MeasureKind::DiracAtLag, lag, {}};
}

DelayMeasure DelayMeasure::lebesgue(double lag) {
    if (lag < 0.0) throw DomainError("lag must be nonnegative");
    return DelayMeasure{MeasureKind::LebesgueOnWindow, lag, {}};
}

DelayMeasure DelayMeasure::finite_atoms(double lag, std::vector<std::pair<double, double>> atoms) {
    if (lag < 0.0) throw DomainError("lag must be nonnegative");
    for (const auto& [r, w] : atoms) {
        if (r < -lag - 1e-15 || r > 1e-15) throw DomainError("atom offset outside [-lag, 0]");
        if (w < 0.0) throw DomainError("atom weight must be nonnegative");
    }
    return DelayMeasure{MeasureKind::FiniteAtoms, lag, std::move(atoms)};
}

double DelayMeasure::total_mass() const {
    switch (kind) {
        case MeasureKind::DiracAtLag: return 1.0;
        case MeasureKind::LebesgueOnWindow: return lag;
        case MeasureKind::FiniteAtoms: {
            double m = 0.0;
            for (const auto& [r, w] : atoms) m += w;
            return m;
        }
    }
    return 0.0;
}

double DelayMeasure::exp_weighted_mass(double beta, Direction dir) const {
    if (beta < 0.0) throw DomainError("exp_weighted_mass needs beta >= 0");
    // Delayed integrates e^{-beta r} over offsets r in [-lag, 0]; Advanced
    // integrates e^{beta s} over the reflected offsets s in [0, lag]. Both give
    // the same value for the reflected measure, so a single closed form serves.
    switch (kind) {
        case MeasureKind::DiracAtLag: return std::exp(beta * lag);
        case MeasureKind::LebesgueOnWindow:
            if (beta == 0.0) return lag;
            return std::expm1(beta * lag) / beta;
        case MeasureKind::FiniteAtoms: {
            double m = 0.0;
            for (const auto& [r, w] : atoms) m += w * std::exp(-beta * r);
            return m;
        }
    }
    return 0.0;
}

namespace {

// Interpolated point evaluation: one or two stencil entries at time s.
void push_point(std::vector<StencilEntry>& out, const TimeGrid& grid, double s, double weight,
                const AggregateOptions& opts) {
    const double scale = std::max(1.0, std::abs(grid.t_end() - grid.t_start()));
    if (s < grid.t_start() - 1e-9 * scale) {
        throw DomainError("delay window extends before the grid start; missing initial path");
    }
    if (s > grid.t_end() + 1e-9 * scale) {
        throw DomainError("delay window extends past the grid end; missing terminal path");
    }
    const int j = grid.nearest_index(s);
    if (std::abs(grid.node(j) - s) <= 1e-9 * scale) {
        out.push_back({j, weight});
        return;
    }
    if (!opts.interpolate_offgrid) {
        throw ConfigError("off-grid offset " + std::to_string(s) + " with interpolation disabled");
    }
    const int lo = (grid.node(j) < s) ? j : j - 1;
    const int hi = lo + 1;
    const double frac = (s - grid.node(lo)) / (grid.node(hi) - grid.node(lo));
    out.push_back({lo, weight * (1.0 - frac)});
    out.push_back({hi, weight * frac});
}

}  // namespace

std::vector<StencilEntry> aggregate_stencil(const TimeGrid& grid, int t_index,
                                            const DelayMeasure& measure,
                                            const DelayKernel& kernel, Direction dir,
                                            const AggregateOptions& opts) {
    const double t = grid.node(t_index);
    const double sign = (dir == Direction::Delayed) ? -1.0 : 1.0;
    std::vector<StencilEntry> out;

    auto chi = [&](double s) {
        return !opts.has_chi_clip || s <= opts.chi_clip_at + 1e-12;
    };

    switch (measure.kind) {
        case MeasureKind::DiracAtLag: {
            const double s = t + sign * measure.lag;
            if (chi(s)) push_point(out, grid, s, kernel.eval(t, s), opts);
            break;
        }
        case MeasureKind::FiniteAtoms: {
            for (const auto& [r, w] : measure.atoms) {
                const double s = t + sign * (-r);  // offsets stored in [-lag, 0]
                if (chi(s)) push_point(out, grid, s, w * kernel.eval(t, s), opts);
            }
            break;
        }
        case MeasureKind::LebesgueOnWindow: {
            double w_lo = (dir == Direction::Delayed) ? t - measure.lag : t;
            double w_hi = (dir == Direction::Delayed) ? t : t + measure.lag;
            const double scale = std::max(1.0, std::abs(grid.t_end() - grid.t_start()));
            if (w_lo < grid.t_start() - 1e-9 * scale) {
                if (!opts.clip_before_start) {
                    throw DomainError("delay window extends before the grid start; missing initial path");
                }
                w_lo = grid.t_start();
            }
            if (opts.has_chi_clip) w_hi = std::min(w_hi, opts.chi_clip_at);
            if (w_hi > grid.t_end() + 1e-9 * scale) {
                throw DomainError("delay window extends past the grid end; missing terminal path");
            }
            if (w_hi <= w_lo + 1e-15) break;
            // trapezoidal weights over grid nodes in [w_lo, w_hi]; window ends
            // are taken at the nearest nodes (lags are snapped to the grid)
            const int j_lo = grid.nearest_index(w_lo);
            const int j_hi = grid.nearest_index(w_hi);
            if (j_hi <= j_lo) break;
            out.reserve(static_cast<std::size_t>(j_hi - j_lo) + 1);
            for (int j = j_lo; j <= j_hi; ++j) {
                double w = 0.0;
                if (j > j_lo) w += 0.5 * (grid.node(j) - grid.node(j - 1));
                if (j < j_hi) w += 0.5 * (grid.node(j + 1) - grid.node(j));
                out.push_back({j, w * kernel.eval(t, grid.node(j))});
            }
            break;
        }
    }
    return out;
}

namespace {

void apply_stencil(const SampledProcess& proc, const std::vector<StencilEntry>& stencil,
                   std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(proc.n_paths())) {
        throw DomainError("aggregate output span has wrong length");
    }
    for (int p = 0; p < proc.n_paths(); ++p) {
        double acc = 0.0;
        for (const auto& e : stencil) acc += e.weight * proc.at(p, e.node);
        out[p] = acc;
    }
}

}  // namespace

void delayed_aggregate(const SampledProcess& proc, int t_index, const DelayMeasure& measure,
                       const DelayKernel& kernel, std::span<double> out,
                       const AggregateOptions& opts) {
    apply_stencil(proc, aggregate_stencil(proc.grid(), t_index, measure, kernel,
                                          Direction::Delayed, opts), out);
}

void advanced_aggregate(const SampledProcess& proc, int t_index, const DelayMeasure& measure,
                        const DelayKernel& kernel, std::span<double> out,
                        const AggregateOptions& opts) {
    apply_stencil(proc, aggregate_stencil(proc.grid(), t_index, measure, kernel,
                                          Direction::Advanced, opts), out);
}

std::vector<std::vector<double>> aggregate_all(const SampledProcess& proc, int first_index,
                                               int last_index, const DelayMeasure& measure,
                                               const DelayKernel& kernel, Direction dir,
                                               const AggregateOptions& opts, Execution exec) {
    std::vector<std::vector<double>> out(proc.grid().n_nodes());
    std::vector<std::vector<StencilEntry>> stencils(proc.grid().n_nodes());
    for (int i = first_index; i <= last_index; ++i) {
        stencils[i] = aggregate_stencil(proc.grid(), i, measure, kernel, dir, opts);
        out[i].assign(proc.n_paths(), 0.0);
    }
    const int n_paths = proc.n_paths();
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int p = 0; p < n_paths; ++p) {
        for (int i = first_index; i <= last_index; ++i) {
            double acc = 0.0;
            for (const auto& e : stencils[i]) acc += e.weight * proc.at(p, e.node);
            out[i][p] = acc;
        }
    }
    return out;
}

bool kernel_bound_holds(const DelayKernel& kernel, const TimeGrid& grid, double lag,
                        double slack) {
    for (int i = 0; i < grid.n_nodes(); ++i) {
        const double t = grid.node(i);
        for (int j = 0; j <= 16; ++j) {
            const double s = t - lag + (lag * j) / 16.0;
            if (s < grid.t_start() || s > grid.t_end()) continue;
            if (std::abs(kernel.eval(t, s)) > kernel.bound + slack) return false;
        }
    }
    return true;
}

}  // namespace bsdelay
