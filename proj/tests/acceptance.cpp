// Acceptance gate: one line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <numbers>
#include <string>
#include <vector>

#include "bsdelay/aode.hpp"
#include "bsdelay/apps.hpp"
#include "bsdelay/asde.hpp"
#include "bsdelay/bsde.hpp"
#include "bsdelay/config.hpp"
#include "bsdelay/control.hpp"

using namespace bsdelay;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int number, const char* title, double budget_s)
        : number_(number), title_(title), budget_s_(budget_s),
          start_(std::chrono::steady_clock::now()) {}

    void check(bool ok, const std::string& detail) {
        if (!ok) {
            failed_ = true;
            details_ += (details_.empty() ? "" : "; ") + detail;
        }
    }

    void finish() {
        const double elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start_)
                                   .count();
        if (elapsed > budget_s_) {
            failed_ = true;
            details_ += (details_.empty() ? "" : "; ") + std::string("over time budget");
        }
        std::printf("criterion %2d [%s]: %s (%.2fs)%s%s\n", number_, title_,
                    failed_ ? "FAIL" : "PASS", elapsed, details_.empty() ? "" : " -- ",
                    details_.c_str());
        std::fflush(stdout);
        if (failed_) ++g_failures;
    }

private:
    int number_;
    const char* title_;
    double budget_s_;
    std::chrono::steady_clock::time_point start_;
    bool failed_ = false;
    std::string details_;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

TimeGrid lagged_grid(double T, int n_steps, double delta) {
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(std::llround(delta / dt));
    return TimeGrid::uniform(-n_lag * dt, T, n_steps + n_lag);
}

void criterion_1() {
    Criterion c(1, "characteristic equation", 1.0);
    double worst = 0.0;
    bool monotone = true;
    for (int ia = 0; ia < 5; ++ia) {
        for (int ir = 0; ir < 5; ++ir) {
            for (int ik = 0; ik < 5; ++ik) {
                for (int id = 0; id < 5; ++id) {
                    const double alpha = 0.2 * ia / 4.0;
                    const double r = 0.1 * ir / 4.0;
                    const double kappa = 1.0 * ik / 4.0;
                    const double delta = 0.2 * id / 4.0;
                    const double h = characteristic_root({alpha, r, kappa, delta});
                    const double F = h + alpha * kappa * std::exp(h * delta);
                    worst = std::max(worst, std::abs(F - (alpha - r)));
                    // F(h) = h + alpha kappa e^{h delta} is strictly increasing
                    for (double step : {0.05, 0.2, 0.7}) {
                        const double lo = h - step, hi = h + step;
                        const double Flo = lo + alpha * kappa * std::exp(lo * delta);
                        const double Fhi = hi + alpha * kappa * std::exp(hi * delta);
                        if (!(Flo < F && F < Fhi)) monotone = false;
                    }
                }
            }
        }
    }
    c.check(worst <= 1e-10, "max |F(h*) - (alpha - r)| = " + num(worst));
    c.check(monotone, "F not strictly monotone on sampled pairs");
    c.finish();
}

void criterion_2() {
    Criterion c(2, "AODE ansatz vs Picard", 5.0);
    const double alpha = 0.1, r = 0.05, kappa = 0.5, delta = 0.1, K = 1.0, T = 1.0;
    const double dt = 1e-3;
    const int n_steps = 1000;
    const int n_lag = 100;
    const TimeGrid grid = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const CharacteristicSpec spec{alpha, r, kappa, delta};
    const double h = characteristic_root(spec);
    const ExponentialAnsatz ansatz = exponential_ansatz(spec, K, T);
    const AODEProblem problem =
        AODEProblem::constant_coefficients(alpha - r, -alpha * kappa, delta, K, T);
    const AODESolution sol = picard_solve_aode(problem, grid);

    double sup = 0.0;
    for (int i = 0; i <= grid.index_of(T - delta); ++i) {
        sup = std::max(sup, std::abs(ansatz(grid.node(i)) - sol.q[i]));
    }
    c.check(sup <= 1e-4, "sup |ansatz - picard| on [0, T-delta] = " + num(sup));

    std::vector<double> q(grid.n_nodes());
    for (int i = 0; i < grid.n_nodes(); ++i) q[i] = ansatz(grid.node(i));
    const AODEResidual res = aode_residual(q, problem, grid);
    const double floor = 0.9 * std::abs(alpha * kappa) * K * std::exp(h * (T - delta));
    c.check(res.max_layer >= floor,
            "terminal-layer residual " + num(res.max_layer) + " < " + num(floor));
    c.finish();
}

void criterion_3() {
    Criterion c(3, "delayed BSDE contraction and martingale recovery", 120.0);
    {
        // linear generator with K < 0.5
        const double C = 0.25, delta = 0.1, T = 1.0;
        const TimeGrid grid = lagged_grid(T, 100, delta);
        const PathEnsemble ens = generate_brownian(grid, 2000, 1, 11);
        DelayedBSDEProblem problem;
        problem.delta = delta;
        problem.measure = DelayMeasure::dirac(delta);
        problem.lipschitz_C = C;
        problem.generator = [C](double, double y, double ydel, double z, double zdel, double,
                                double) { return C * (0.6 * y - 0.4 * ydel + 0.5 * z - 0.3 * zdel); };
        problem.terminal.resize(2000);
        for (int p = 0; p < 2000; ++p) problem.terminal[p] = ens.w(p, grid.n_nodes() - 1);
        PicardOptions opts;
        opts.tol = 1e-11;
        auto [sol, rep] = picard_solve(problem, ens, opts);
        c.check(rep.theoretical_K < 0.5, "theoretical K = " + num(rep.theoretical_K));
        c.check(static_cast<int>(rep.diffs.size()) >= 4,
                "only " + std::to_string(rep.diffs.size()) + " sweeps");
        for (std::size_t k = 1; k < rep.diffs.size(); ++k) {
            if (rep.diffs[k - 1] <= 1e-13) continue;
            const double ratio = rep.diffs[k] / rep.diffs[k - 1];
            c.check(ratio <= rep.theoretical_K + 0.1, "diff ratio " + num(ratio));
        }
    }
    {
        // f = 0, xi = W(T): y = W, z = 1
        const int n_paths = 10000;
        const double dt = 5e-3, T = 1.0;
        const int n_steps = 200;
        const TimeGrid grid = TimeGrid::uniform(0.0, T, n_steps);
        const PathEnsemble ens = generate_brownian(grid, n_paths, 1, 12);
        DelayedBSDEProblem problem;
        problem.generator = [](double, double, double, double, double, double, double) {
            return 0.0;
        };
        problem.terminal.resize(n_paths);
        for (int p = 0; p < n_paths; ++p) problem.terminal[p] = ens.w(p, n_steps);
        auto [sol, rep] = picard_solve(problem, ens);
        double rms_y = 0.0, rms_z = 0.0;
        long cnt = 0;
        for (int i = 0; i < n_steps; ++i) {
            for (int p = 0; p < n_paths; ++p) {
                const double dy = sol.y.at(p, i) - ens.w(p, i);
                const double dz = sol.z.at(p, i) - 1.0;
                rms_y += dy * dy;
                rms_z += dz * dz;
                ++cnt;
            }
        }
        rms_y = std::sqrt(rms_y / cnt);
        rms_z = std::sqrt(rms_z / cnt);
        const double bound = 5.0 * std::max(1.0 / std::sqrt(double(n_paths)), std::sqrt(dt));
        c.check(rms_y <= bound, "RMS(y - W) = " + num(rms_y) + " > " + num(bound));
        c.check(rms_z <= bound, "RMS(z - 1) = " + num(rms_z) + " > " + num(bound));
    }
    c.finish();
}

void criterion_4() {
    Criterion c(4, "ASDE reduction, GBM strong order", 120.0);
    const double mu = 0.06, sigma = 0.3, x0 = 1.0, T = 1.0;
    const int n_paths = 10000;
    const std::vector<double> dts = {4e-3, 1e-3, 2.5e-4};
    std::vector<double> errors;
    for (double dt : dts) {
        const int n_steps = static_cast<int>(std::llround(T / dt));
        const TimeGrid grid = TimeGrid::uniform(0.0, T, n_steps);
        const PathEnsemble ens = generate_brownian(grid, n_paths, 1, 21);
        ASDEProblem problem;
        problem.x0 = x0;
        problem.horizon_T = T;
        problem.drift = [mu](int, int, double, double x, double) { return mu * x; };
        problem.diffusion = [sigma](int, int, double, double x, double) { return sigma * x; };
        problem.lipschitz_C = sigma;
        auto [sol, rep] = picard_solve_asde(problem, ens);
        double mse = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            // exact GBM driven by the same increments
            const double exact =
                x0 * std::exp((mu - 0.5 * sigma * sigma) * T + sigma * ens.w(p, n_steps));
            const double d = sol.x.at(p, n_steps) - exact;
            mse += d * d;
        }
        errors.push_back(std::sqrt(mse / n_paths));
    }
    // least-squares slope of log error vs log dt
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < dts.size(); ++k) {
        const double x = std::log(dts[k]), y = std::log(errors[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const int n = static_cast<int>(dts.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    c.check(slope >= 0.45, "empirical strong order " + num(slope));
    c.finish();
}

void criterion_5() {
    Criterion c(5, "adjoint decomposition p = qM", 120.0);
    const double alpha = 0.1, r = 0.05, kappa = 0.5, delta = 0.1, K = 1.0, T = 1.0;
    const double lambda = (0.09 - 0.05) / 0.1;
    const int n_paths = 10000;
    const double dt = 5e-3;
    const int n_steps = 200, n_lag = 20;
    const TimeGrid grid = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const PathEnsemble ens = generate_brownian(grid, n_paths, 1, 31);

    ASDEProblem problem;
    problem.x0 = K;
    problem.horizon_T = T;
    problem.delta = delta;
    problem.measure = DelayMeasure::dirac(delta);
    problem.drift = [alpha, r, kappa](int, int, double, double x, double adv) {
        return (alpha - r) * x - alpha * kappa * adv;
    };
    problem.diffusion = [lambda](int, int, double, double x, double) { return -lambda * x; };
    problem.lipschitz_C = std::max({std::abs(alpha - r), alpha * kappa, lambda});
    auto [sol, rep] = picard_solve_asde(problem, ens);

    const ExponentialAnsatz q = exponential_ansatz({alpha, r, kappa, delta}, K, T);
    const SampledProcess M = exponential_martingale(lambda, ens);
    double mse = 0.0;
    long cnt = 0;
    for (int i = 0; i <= grid.index_of(T); ++i) {
        const double qi = q(grid.node(i));
        for (int p = 0; p < n_paths; ++p) {
            const double d = sol.x.at(p, i) - qi * M.at(p, i);
            mse += d * d;
            ++cnt;
        }
    }
    const double rms = std::sqrt(mse / cnt);
    const double bound = 5.0 * (1.0 / std::sqrt(double(n_paths)) + dt);
    c.check(rms <= bound, "RMS(picard - qM) = " + num(rms) + " > " + num(bound));
    c.finish();
}

void criterion_6() {
    Criterion c(6, "discrete Fubini duality", 10.0);
    const double delta = 0.1, T = 1.0;
    const int n_steps = 200, n_paths = 1000;
    const TimeGrid grid = lagged_grid(T, n_steps, delta);
    const PathEnsemble ens = generate_brownian(grid, n_paths, 1, 41);
    SampledProcess h(grid, n_paths, 1, true), u(grid, n_paths, 1, true),
        v(grid, n_paths, 1, true);
    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < grid.n_nodes(); ++i) {
            const double t = grid.node(i);
            h.at(p, i) = std::cos(3 * t) + 0.5 * ens.w(p, i);
            u.at(p, i) = std::sin(2 * t);
            v.at(p, i) = u.at(p, i) + 0.1 * std::cos(5 * t) + 0.05 * ens.w(p, i);
        }
    }
    for (const auto& [name, m] : {std::pair<const char*, DelayMeasure>{
                                      "dirac", DelayMeasure::dirac(delta)},
                                  {"lebesgue", DelayMeasure::lebesgue(delta)}}) {
        const double defect = fubini_duality_check(h, u, v, m, DelayKernel::one(), ens);
        c.check(defect <= 1e-12, std::string(name) + " defect " + num(defect));
    }
    c.finish();
}

Numerics stationarity_numerics() {
    Numerics num;
    num.n_steps = 200;
    num.n_paths = 2000;
    num.verify = false;
    return num;
}

// gradient-check results cached for criterion 11 (the specs live inside the
// application solvers; re-solving there would dwarf the 5 s budget)
double g_grad_err[3] = {0.0, 0.0, 0.0};

void criterion_7() {
    const Numerics num = stationarity_numerics();
    {
        Criterion c(7, "stationarity, recursive utility", 60.0);
        const App1Result res = app1_solve(App1Params{}, num);
        double worst = 0.0;
        for (double v : res.stationarity) worst = std::max(worst, std::abs(v));
        c.check(worst <= 1e-8, "max residual " + ::num(worst));
        g_grad_err[0] = res.gradients.max_rel_error;
        c.finish();
    }
    {
        Criterion c(7, "stationarity, pension fund", 60.0);
        const App2Result res = app2_solve(App2Params{}, num);
        double worst = 0.0;
        for (double v : res.stationarity) {
            if (std::isfinite(v)) worst = std::max(worst, std::abs(v));
        }
        c.check(worst <= 1e-8, "max residual " + ::num(worst));
        g_grad_err[1] = res.gradients.max_rel_error;
        c.finish();
    }
    {
        Criterion c(7, "stationarity, linear quadratic", 60.0);
        const App3Result res = app3_solve(App3Params{}, num);
        double worst = 0.0;
        for (double v : res.stationarity) {
            if (std::isfinite(v)) worst = std::max(worst, std::abs(v));
        }
        c.check(worst <= 1e-8, "max residual " + ::num(worst));
        g_grad_err[2] = res.gradients.max_rel_error;
        c.finish();
    }
}

Numerics optimality_numerics() {
    Numerics num;
    num.n_paths = 10000;
    num.n_steps = 100;
    num.verify = true;
    num.n_perturbations = 50;
    num.magnitudes = {0.02, 0.1, 0.5};
    return num;
}

void criterion_8() {
    const Numerics num = optimality_numerics();
    {
        Criterion c(8, "optimality sweep, recursive utility", 600.0);
        const App1Result res = app1_solve(App1Params{}, num);
        c.check(res.report.violations == 0,
                std::to_string(res.report.violations) + " violations");
        c.finish();
    }
    {
        Criterion c(8, "optimality sweep, pension fund", 600.0);
        const App2Result res = app2_solve(App2Params{}, num);
        c.check(res.report.violations == 0,
                std::to_string(res.report.violations) + " violations");
        c.finish();
    }
    {
        Criterion c(8, "optimality sweep, linear quadratic", 600.0);
        const App3Result res = app3_solve(App3Params{}, num);
        c.check(res.report.violations == 0,
                std::to_string(res.report.violations) + " violations");
        c.finish();
    }
}

void criterion_9() {
    Criterion c(9, "well-posedness range bounds", 1.0);
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> Ld(0.05, 1.5), dd(0.01, 0.5);
    for (int k = 0; k < 20; ++k) {
        const double L = Ld(rng), d = dd(rng);
        const ValidationReport rep = validate_well_posedness(L, d);
        // independent arithmetic, factored differently
        const long double L2 = static_cast<long double>(L) * L;
        const long double e = std::numbers::e_v<long double>;
        const long double b1 = 6.0L * L2 * d + 12.0L * L2 * d * d * d * e;
        const long double b2 = 4.0L * L2 * d + 4.0L * L2 * d * d * d * e + d;
        c.check(std::abs(rep.bound1 - static_cast<double>(b1)) <=
                    1e-14 * std::max(1.0, std::abs(rep.bound1)),
                "bound1 mismatch at L=" + num(L) + " d=" + num(d));
        c.check(std::abs(rep.bound2 - static_cast<double>(b2)) <=
                    1e-14 * std::max(1.0, std::abs(rep.bound2)),
                "bound2 mismatch at L=" + num(L) + " d=" + num(d));
    }
    c.finish();
}

void criterion_10() {
    Criterion c(10, "singular integro-ODE", 5.0);
    const double beta = 0.1, T = 1.0;
    IntegroODEProblem problem;
    problem.beta = beta;
    problem.horizon_T = T;
    problem.grid = TimeGrid::graded(0.01 * T, T, 3000);
    const IntegroODESolution sol = integro_ode_solve(problem);
    const TimeGrid& g = problem.grid;
    // second difference of p against -beta p / t on the graded interior
    double worst = 0.0;
    for (int i = 2; i < g.n_nodes() - 1; ++i) {
        const double dm = g.dt(i - 1), dp = g.dt(i);
        const double second = 2.0 * (dm * sol.p[i + 1] - (dm + dp) * sol.p[i] + dp * sol.p[i - 1]) /
                              (dm * dp * (dm + dp));
        const double target = -beta * sol.p[i] / g.node(i);
        worst = std::max(worst, std::abs(second - target));
    }
    c.check(worst <= 1e-3, "max |p'' + beta p / t| = " + num(worst));
    c.check(std::abs(sol.pdot.back()) <= 1e-10, "pdot(T) = " + num(sol.pdot.back()));
    c.finish();
}

void criterion_11() {
    // checks the 100-point central-difference comparisons run inside the
    // application solvers during criterion 7
    Criterion c(11, "Hamiltonian gradient consistency", 5.0);
    c.check(g_grad_err[0] <= 1e-5, "recursive utility rel err " + num(g_grad_err[0]));
    c.check(g_grad_err[1] <= 1e-5, "pension rel err " + num(g_grad_err[1]));
    c.check(g_grad_err[2] <= 1e-5, "linear quadratic rel err " + num(g_grad_err[2]));
    c.finish();
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = (argc > 1 && std::string(argv[1]) == "--skip-slow");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    if (quick) {
        std::printf("criterion  8 [optimality sweeps]: SKIPPED (--skip-slow)\n");
    } else {
        criterion_8();
    }
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures > 0) {
        std::printf("%d criterion check(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
