#pragma once

#include <vector>

namespace bsdelay {

enum class GridSpacing {
    Uniform,
    Graded,  // node density increasing toward zero
};

/// Monotone time grid on [t_start, t_end]. Uniform grids are used by the
/// stochastic solvers; graded (geometric) grids by the singular integro-ODE.
class TimeGrid {
public:
    /// Trivial one-step grid on [0, 1]; placeholder for default-constructed
    /// containers, replaced before use.
    TimeGrid() : TimeGrid({0.0, 1.0}, GridSpacing::Uniform) {}

    static TimeGrid uniform(double t_start, double t_end, int n_steps);

    /// Nodes {0, eps, eps*g, ..., t_end} with geometric ratio g chosen so the
    /// last node lands on t_end exactly. Clusters nodes toward zero.
    static TimeGrid graded(double eps, double t_end, int n_cells);

    double t_start() const { return nodes_.front(); }
    double t_end() const { return nodes_.back(); }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    int n_steps() const { return n_nodes() - 1; }
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& nodes() const { return nodes_; }
    GridSpacing spacing() const { return spacing_; }

    double dt(int i) const { return nodes_[i + 1] - nodes_[i]; }
    /// Constant step of a uniform grid; throws DomainError on graded grids.
    double dt() const;

    /// Index of the node equal to t (relative tolerance 1e-9); throws if t is
    /// not a node.
    int index_of(double t) const;

    /// Nearest node index to t (no exactness requirement).
    int nearest_index(double t) const;

    /// Snap a lag to a whole number of uniform steps. Warns when delta is not
    /// a step multiple (the snapped value is used).
    int lag_steps(double delta) const;

private:
    explicit TimeGrid(std::vector<double> nodes, GridSpacing spacing);

    std::vector<double> nodes_;
    GridSpacing spacing_;
};

}  // namespace bsdelay
