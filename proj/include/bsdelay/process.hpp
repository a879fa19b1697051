#pragma once

#include <functional>
#include <vector>

#include "bsdelay/time_grid.hpp"

namespace bsdelay {

/// Ensemble of grid-sampled process paths. Storage is path-major:
/// values[(path * n_nodes + node) * dim + k].
class SampledProcess {
public:
    SampledProcess() : SampledProcess(TimeGrid(), 0) {}
    SampledProcess(TimeGrid grid, int n_paths, int dim = 1, bool adapted = true);

    const TimeGrid& grid() const { return grid_; }
    int n_paths() const { return n_paths_; }
    int n_nodes() const { return grid_.n_nodes(); }
    int dim() const { return dim_; }
    bool adapted() const { return adapted_; }
    void set_adapted(bool a) { adapted_ = a; }

    double& at(int path, int node, int k = 0) {
        return values_[(static_cast<std::size_t>(path) * grid_.n_nodes() + node) * dim_ + k];
    }
    double at(int path, int node, int k = 0) const {
        return values_[(static_cast<std::size_t>(path) * grid_.n_nodes() + node) * dim_ + k];
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    TimeGrid grid_;
    int n_paths_;
    int dim_;
    bool adapted_;
    std::vector<double> values_;
};

enum class BoundarySegment {
    Initial,   // nodes with t < boundary_time
    Terminal,  // nodes with t > boundary_time
};

/// Copy of proc with the deterministic path_fn written onto the boundary
/// segment of every path. boundary_time must be a grid node.
SampledProcess splice_boundary_path(const SampledProcess& proc,
                                    const std::function<double(double)>& path_fn,
                                    BoundarySegment segment, double boundary_time);

}  // namespace bsdelay
