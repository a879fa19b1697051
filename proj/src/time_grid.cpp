#include "bsdelay/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsdelay/errors.hpp"
#include "bsdelay/log.hpp"

namespace bsdelay {

TimeGrid::TimeGrid(std::vector<double> nodes, GridSpacing spacing)
    : nodes_(std::move(nodes)), spacing_(spacing) {
    if (nodes_.size() < 2) throw DomainError("TimeGrid needs at least two nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (nodes_[i] <= nodes_[i - 1]) throw DomainError("TimeGrid nodes must be strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double t_start, double t_end, int n_steps) {
    if (n_steps < 1) throw DomainError("uniform grid needs n_steps >= 1");
    if (!(t_end > t_start)) throw DomainError("uniform grid needs t_end > t_start");
    std::vector<double> nodes(static_cast<std::size_t>(n_steps) + 1);
    const double h = (t_end - t_start) / n_steps;
    for (int i = 0; i <= n_steps; ++i) nodes[i] = t_start + i * h;
    nodes.back() = t_end;  // kill accumulated rounding at the right endpoint
    return TimeGrid(std::move(nodes), GridSpacing::Uniform);
}

TimeGrid TimeGrid::graded(double eps, double t_end, int n_cells) {
    if (!(eps > 0.0) || !(eps < t_end)) throw DomainError("graded grid needs 0 < eps < t_end");
    if (n_cells < 2) throw DomainError("graded grid needs n_cells >= 2");
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n_cells) + 2);
    nodes.push_back(0.0);
    const double g = std::pow(t_end / eps, 1.0 / n_cells);
    double t = eps;
    for (int i = 0; i < n_cells; ++i) {
        nodes.push_back(t);
        t *= g;
    }
    nodes.push_back(t_end);
    // the loop lands on t_end up to rounding; drop the duplicate
    if (nodes[nodes.size() - 2] >= t_end * (1.0 - 1e-12)) {
        nodes.erase(nodes.end() - 2);
    }
    return TimeGrid(std::move(nodes), GridSpacing::Graded);
}

double TimeGrid::dt() const {
    if (spacing_ != GridSpacing::Uniform) throw DomainError("dt() requires a uniform grid");
    return (t_end() - t_start()) / n_steps();
}

int TimeGrid::index_of(double t) const {
    const int i = nearest_index(t);
    const double scale = std::max(1.0, std::abs(t_end() - t_start()));
    if (std::abs(nodes_[i] - t) > 1e-9 * scale) {
        throw DomainError("time " + std::to_string(t) + " is not a grid node");
    }
    return i;
}

int TimeGrid::nearest_index(double t) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    if (it == nodes_.end()) return n_nodes() - 1;
    if (it == nodes_.begin()) return 0;
    const auto hi = static_cast<int>(it - nodes_.begin());
    return (t - nodes_[hi - 1] <= nodes_[hi] - t) ? hi - 1 : hi;
}

int TimeGrid::lag_steps(double delta) const {
    if (delta < 0.0) throw DomainError("lag must be nonnegative");
    const double h = dt();
    const int k = static_cast<int>(std::llround(delta / h));
    if (std::abs(k * h - delta) > 1e-9 * std::max(1.0, delta)) {
        warn("lag " + std::to_string(delta) + " snapped to " + std::to_string(k * h) +
             " (" + std::to_string(k) + " steps)");
    }
    return k;
}

}  // namespace bsdelay
