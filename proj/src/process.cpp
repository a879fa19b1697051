#include "bsdelay/process.hpp"

#include <cmath>

#include "bsdelay/errors.hpp"

namespace bsdelay {

SampledProcess::SampledProcess(TimeGrid grid, int n_paths, int dim, bool adapted)
    : grid_(std::move(grid)), n_paths_(n_paths), dim_(dim), adapted_(adapted) {
    if (n_paths_ < 0) throw DomainError("SampledProcess needs n_paths >= 0");
    if (dim_ < 1) throw DomainError("SampledProcess needs dim >= 1");
    values_.assign(static_cast<std::size_t>(n_paths_) * grid_.n_nodes() * dim_, 0.0);
}

SampledProcess splice_boundary_path(const SampledProcess& proc,
                                    const std::function<double(double)>& path_fn,
                                    BoundarySegment segment, double boundary_time) {
    const TimeGrid& g = proc.grid();
    // the boundary must sit on the grid; an off-grid boundary would make the
    // segment overlap the interior solve window
    const int ib = g.index_of(boundary_time);
    SampledProcess out = proc;
    for (int i = 0; i < g.n_nodes(); ++i) {
        const bool in_segment = (segment == BoundarySegment::Initial) ? (i < ib) : (i > ib);
        if (!in_segment) continue;
        const double v = path_fn(g.node(i));
        if (!std::isfinite(v)) throw DomainError("boundary path is not finite at t=" + std::to_string(g.node(i)));
        for (int p = 0; p < proc.n_paths(); ++p) {
            for (int k = 0; k < proc.dim(); ++k) out.at(p, i, k) = v;
        }
    }
    return out;
}

}  // namespace bsdelay
