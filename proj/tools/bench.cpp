// Serial vs OpenMP timings for the hot kernels: path generation, delayed
// aggregation, and a full delayed-BSDE Picard solve.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "bsdelay/bsde.hpp"
#include "bsdelay/delay.hpp"
#include "bsdelay/ensemble.hpp"

namespace {

using bsdelay::Execution;

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void row(const char* name, double serial, double parallel) {
    std::printf("%-24s %10.4fs %10.4fs %8.2fx\n", name, serial, parallel,
                parallel > 0.0 ? serial / parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
    int n_paths = 20000;
    int n_steps = 400;
    if (argc > 1) n_paths = std::atoi(argv[1]);
    if (argc > 2) n_steps = std::atoi(argv[2]);

    const double T = 1.0;
    const double delta = 0.1;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const bsdelay::TimeGrid grid =
        bsdelay::TimeGrid::uniform(-n_lag * dt, T, n_steps + n_lag);

    std::printf("paths=%d steps=%d\n", n_paths, n_steps);
    std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    const double t_gen_s = seconds([&] { bsdelay::generate_brownian(grid, n_paths, 1, 1, Execution::Serial); });
    const double t_gen_p = seconds([&] { bsdelay::generate_brownian(grid, n_paths, 1, 1, Execution::Parallel); });
    row("generate_brownian", t_gen_s, t_gen_p);

    const bsdelay::PathEnsemble ensemble = bsdelay::generate_brownian(grid, n_paths, 1, 1);
    bsdelay::SampledProcess proc(grid, n_paths, 1, true);
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < grid.n_nodes(); ++i) proc.at(p, i) = ensemble.w(p, i);
    }
    const bsdelay::DelayMeasure measure = bsdelay::DelayMeasure::lebesgue(n_lag * dt);
    const int i0 = grid.index_of(0.0);
    const int last = grid.n_nodes() - 1;
    const double t_agg_s = seconds([&] {
        bsdelay::aggregate_all(proc, i0, last, measure, bsdelay::DelayKernel::one(),
                               bsdelay::Direction::Delayed, {}, Execution::Serial);
    });
    const double t_agg_p = seconds([&] {
        bsdelay::aggregate_all(proc, i0, last, measure, bsdelay::DelayKernel::one(),
                               bsdelay::Direction::Delayed, {}, Execution::Parallel);
    });
    row("aggregate_all", t_agg_s, t_agg_p);

    bsdelay::DelayedBSDEProblem problem;
    problem.delta = n_lag * dt;
    problem.measure = bsdelay::DelayMeasure::dirac(n_lag * dt);
    problem.lipschitz_C = 0.3;
    problem.terminal.assign(n_paths, 0.0);
    for (int p = 0; p < n_paths; ++p) problem.terminal[p] = ensemble.w(p, grid.n_nodes() - 1);
    problem.generator = [](double, double y, double ydel, double z, double, double, double) {
        return 0.1 * y + 0.05 * ydel - 0.2 * z;
    };
    bsdelay::PicardOptions opts;
    bsdelay::PicardOptions opts_s = opts;
    opts_s.exec = Execution::Serial;
    const double t_bsde_s = seconds([&] { bsdelay::picard_solve(problem, ensemble, opts_s); });
    const double t_bsde_p = seconds([&] { bsdelay::picard_solve(problem, ensemble, opts); });
    row("picard_solve (bsde)", t_bsde_s, t_bsde_p);

    return 0;
}
