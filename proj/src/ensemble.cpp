#include "bsdelay/ensemble.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "bsdelay/errors.hpp"

namespace bsdelay {

namespace {
constexpr char kMagic[8] = {'B', 'S', 'D', 'L', 'Y', 'E', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

PathEnsemble::PathEnsemble(TimeGrid grid, int n_paths, int dim, std::uint64_t seed)
    : grid_(std::move(grid)), n_paths_(n_paths), dim_(dim), seed_(seed) {
    if (n_paths_ < 1) throw DomainError("PathEnsemble needs n_paths >= 1");
    if (dim_ < 1) throw DomainError("PathEnsemble needs dim >= 1");
    increments_.assign(static_cast<std::size_t>(n_paths_) * grid_.n_steps() * dim_, 0.0);
    cumulative_.assign(static_cast<std::size_t>(n_paths_) * grid_.n_nodes() * dim_, 0.0);
}

void PathEnsemble::rebuild_cumulative() {
    const int n_nodes = grid_.n_nodes();
    const int n_steps = grid_.n_steps();
    for (int p = 0; p < n_paths_; ++p) {
        for (int k = 0; k < dim_; ++k) {
            double acc = 0.0;
            cumulative_[(static_cast<std::size_t>(p) * n_nodes) * dim_ + k] = acc;
            for (int i = 0; i < n_steps; ++i) {
                acc += increments_[(static_cast<std::size_t>(p) * n_steps + i) * dim_ + k];
                cumulative_[(static_cast<std::size_t>(p) * n_nodes + i + 1) * dim_ + k] = acc;
            }
        }
    }
}

PathEnsemble generate_brownian(const TimeGrid& grid, int n_paths, int dim, std::uint64_t seed,
                               Execution exec, Pairing pairing) {
    PathEnsemble ens(grid, n_paths, dim, seed);
    const int n_steps = grid.n_steps();
    auto* inc = ens.increments().data();
    const bool anti = pairing == Pairing::Antithetic;
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int p = 0; p < n_paths; ++p) {
        // one stream per path (per pair when antithetic): parallel and serial
        // generation agree bit-for-bit
        const int stream = anti ? p / 2 : p;
        const double sign = (anti && p % 2 == 1) ? -1.0 : 1.0;
        std::seed_seq seq{static_cast<std::uint64_t>(0x9E3779B97F4A7C15ull), seed,
                          static_cast<std::uint64_t>(stream)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < n_steps; ++i) {
            if (grid.node(i) < -1e-15) continue;  // deterministic boundary segment
            const double sdt = sign * std::sqrt(grid.dt(i));
            for (int k = 0; k < dim; ++k) {
                inc[(static_cast<std::size_t>(p) * n_steps + i) * dim + k] = sdt * gauss(rng);
            }
        }
    }
    ens.rebuild_cumulative();
    return ens;
}

SampledProcess exponential_martingale(const std::vector<double>& lambda,
                                      const PathEnsemble& ensemble, Execution exec) {
    if (static_cast<int>(lambda.size()) != ensemble.dim()) {
        throw DomainError("lambda dimension does not match the ensemble");
    }
    double lam2 = 0.0;
    for (double l : lambda) lam2 += l * l;
    const TimeGrid& grid = ensemble.grid();
    SampledProcess m(grid, ensemble.n_paths(), 1, true);
    const int n_paths = ensemble.n_paths();
    const int n_nodes = grid.n_nodes();
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < n_nodes; ++i) {
            double dot = 0.0;
            for (int k = 0; k < ensemble.dim(); ++k) dot += lambda[k] * ensemble.w(p, i, k);
            const double t = std::max(grid.node(i), 0.0);
            m.at(p, i) = std::exp(-dot - 0.5 * lam2 * t);
        }
    }
    return m;
}

SampledProcess exponential_martingale(double lambda, const PathEnsemble& ensemble,
                                      Execution exec) {
    return exponential_martingale(std::vector<double>{lambda}, ensemble, exec);
}

std::vector<double> path_integral(const SampledProcess& integrand, const PathEnsemble& ensemble,
                                  QuadratureMode mode, Execution exec) {
    if (!integrand.adapted()) throw DomainError("path_integral requires an adapted integrand");
    if (integrand.n_paths() != ensemble.n_paths()) {
        throw DomainError("integrand/ensemble path counts differ");
    }
    const TimeGrid& grid = ensemble.grid();
    const int i0 = grid.index_of(std::max(grid.t_start(), 0.0));
    const int n_paths = ensemble.n_paths();
    std::vector<double> out(n_paths, 0.0);
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int p = 0; p < n_paths; ++p) {
        double acc = 0.0;
        for (int i = i0; i < grid.n_steps(); ++i) {
            const double f = integrand.at(p, i);
            acc += (mode == QuadratureMode::Ito) ? f * ensemble.dw(p, i) : f * grid.dt(i);
        }
        out[p] = acc;
    }
    return out;
}

void dump_ensemble(const PathEnsemble& ensemble, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot open " + tmp + " for writing");
        out.write(kMagic, sizeof(kMagic));
        auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
        auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
        put_u32(kVersion);
        put_u64(ensemble.seed());
        put_u32(static_cast<std::uint32_t>(ensemble.n_paths()));
        put_u32(static_cast<std::uint32_t>(ensemble.dim()));
        put_u32(static_cast<std::uint32_t>(ensemble.grid().n_nodes()));
        out.write(reinterpret_cast<const char*>(ensemble.grid().nodes().data()),
                  static_cast<std::streamsize>(ensemble.grid().n_nodes() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(ensemble.increments().data()),
                  static_cast<std::streamsize>(ensemble.increments().size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, path);
}

PathEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ConfigError("bad ensemble file magic");
    auto get_u32 = [&] { std::uint32_t v; in.read(reinterpret_cast<char*>(&v), 4); return v; };
    auto get_u64 = [&] { std::uint64_t v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
    if (get_u32() != kVersion) throw ConfigError("unsupported ensemble file version");
    const std::uint64_t seed = get_u64();
    const int n_paths = static_cast<int>(get_u32());
    const int dim = static_cast<int>(get_u32());
    const int n_nodes = static_cast<int>(get_u32());
    std::vector<double> nodes(n_nodes);
    in.read(reinterpret_cast<char*>(nodes.data()),
            static_cast<std::streamsize>(n_nodes * sizeof(double)));
    // reconstruct the grid as uniform when the spacing is constant
    TimeGrid grid = TimeGrid::uniform(nodes.front(), nodes.back(), n_nodes - 1);
    PathEnsemble ens(grid, n_paths, dim, seed);
    in.read(reinterpret_cast<char*>(ens.increments().data()),
            static_cast<std::streamsize>(ens.increments().size() * sizeof(double)));
    if (!in) throw ConfigError("truncated ensemble file");
    ens.rebuild_cumulative();
    return ens;
}

}  // namespace bsdelay
