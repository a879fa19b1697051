#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "bsdelay/exec.hpp"
#include "bsdelay/process.hpp"
#include "bsdelay/time_grid.hpp"

namespace bsdelay {

enum class MeasureKind {
    DiracAtLag,        // unit atom at offset -delta (delayed) / +delta (advanced)
    LebesgueOnWindow,  // Lebesgue measure on the lag window, mass delta
    FiniteAtoms,       // atoms (offset r_j in [-delta, 0], weight w_j >= 0)
};

enum class Direction {
    Delayed,   // window [t - delta, t]
    Advanced,  // window [t, t + delta]
};

/// Measure alpha(ds) weighting past (or, reflected, future) process values.
struct DelayMeasure {
    MeasureKind kind = MeasureKind::DiracAtLag;
    double lag = 0.0;
    std::vector<std::pair<double, double>> atoms;  // (offset, weight), offsets in [-lag, 0]

    static DelayMeasure dirac(double lag);
    static DelayMeasure lebesgue(double lag);
    static DelayMeasure finite_atoms(double lag, std::vector<std::pair<double, double>> atoms);

    /// alpha([-delta, 0]); exact per kind (Dirac: 1, Lebesgue: lag, atoms: sum w).
    double total_mass() const;

    /// Exponentially weighted mass: Delayed = int_{-delta}^0 e^{-beta r} alpha(dr),
    /// Advanced = int_0^delta e^{beta s} alpha(ds). Closed form per kind.
    double exp_weighted_mass(double beta, Direction dir) const;
};

/// Bounded deterministic weight phi(t, s) on the lag window.
struct DelayKernel {
    std::function<double(double t, double s)> eval = [](double, double) { return 1.0; };
    double bound = 1.0;

    static DelayKernel one() { return DelayKernel{}; }
};

struct AggregateOptions {
    bool interpolate_offgrid = true;  // strict mode rejects off-grid atom offsets
    bool clip_before_start = false;   // truncate windows extending past the grid start
    double chi_clip_at = 0.0;         // if set (> t_start), drop window nodes beyond this time
    bool has_chi_clip = false;
};

/// One (node, weight) pair of an aggregation stencil.
struct StencilEntry {
    int node;
    double weight;
};

/// Discrete weights w_j such that the aggregation integral at node t_index is
/// sum_j w_j * proc(node_j). Dirac: single kernel-weighted atom (linearly
/// interpolated when t -/+ delta is off-grid). Lebesgue: trapezoidal weights on
/// window nodes. FiniteAtoms: one interpolated entry per atom.
std::vector<StencilEntry> aggregate_stencil(const TimeGrid& grid, int t_index,
                                            const DelayMeasure& measure,
                                            const DelayKernel& kernel, Direction dir,
                                            const AggregateOptions& opts = {});

/// Per-path delayed aggregate int_{t-delta}^t phi(t,s) proc(s) alpha(ds).
void delayed_aggregate(const SampledProcess& proc, int t_index, const DelayMeasure& measure,
                       const DelayKernel& kernel, std::span<double> out,
                       const AggregateOptions& opts = {});

/// Per-path advanced aggregate int_t^{t+delta} phi(t,s) proc(s) alpha(ds).
void advanced_aggregate(const SampledProcess& proc, int t_index, const DelayMeasure& measure,
                        const DelayKernel& kernel, std::span<double> out,
                        const AggregateOptions& opts = {});

/// Aggregates at every interior node of [window_start_index, window_end_index],
/// parallel over paths. Result indexed [node][path], nodes outside the range
/// left empty.
std::vector<std::vector<double>> aggregate_all(const SampledProcess& proc, int first_index,
                                               int last_index, const DelayMeasure& measure,
                                               const DelayKernel& kernel, Direction dir,
                                               const AggregateOptions& opts = {},
                                               Execution exec = Execution::Parallel);

/// Samples |phi| on the grid window and checks the declared bound.
bool kernel_bound_holds(const DelayKernel& kernel, const TimeGrid& grid, double lag,
                        double slack = 1e-12);

}  // namespace bsdelay
