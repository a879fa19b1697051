#include "doctest.h"

#include <cmath>

#include "bsdelay/aode.hpp"
#include "bsdelay/asde.hpp"
#include "bsdelay/errors.hpp"

using namespace bsdelay;

TEST_CASE("advanced contraction constant matches the frozen value") {
    // 4 C^2 [1 + M^2 d e^{beta d}] / (beta - 1) at C = 0.3, M = 1, d = 0.1, beta = 10
    const AsdeContraction info =
        asde_contraction_constant(0.3, 1.0, 0.1, DelayMeasure::dirac(0.1), 10.0);
    CHECK(info.K_prime == doctest::Approx(0.05087312731383618).epsilon(1e-14));
    CHECK(std::isfinite(info.proof_bound));
    CHECK_THROWS_AS(asde_contraction_constant(0.3, 1.0, 0.1, DelayMeasure::dirac(0.1), 0.5),
                    DomainError);
}

TEST_CASE("no advanced term reduces to Euler-Maruyama in one sweep") {
    // geometric Brownian motion dx = mu x dt + sigma x dW
    const double mu = 0.08, sigma = 0.2, x0 = 1.0, T = 1.0;
    const TimeGrid g = TimeGrid::uniform(0.0, T, 100);
    const int n = 20000;
    const PathEnsemble e = generate_brownian(g, n, 1, 1);
    ASDEProblem problem;
    problem.x0 = x0;
    problem.horizon_T = T;
    problem.drift = [mu](int, int, double, double x, double) { return mu * x; };
    problem.diffusion = [sigma](int, int, double, double x, double) { return sigma * x; };
    problem.lipschitz_C = std::max(mu, sigma);
    auto [sol, rep] = picard_solve_asde(problem, e);
    CHECK(rep.n_iterations <= 2);
    double mean = 0.0;
    const int last = g.index_of(T);
    for (int p = 0; p < n; ++p) mean += sol.x.at(p, last);
    mean /= n;
    CHECK(mean == doctest::Approx(x0 * std::exp(mu * T)).epsilon(0.02));
}

TEST_CASE("advanced drift with deterministic dynamics matches the AODE") {
    // zero diffusion: dx = (a x + b E[x(t+delta)]) dt is the advanced ODE
    const double a = 0.05, b = -0.05, delta = 0.1, T = 1.0, x0 = 1.0;
    const int n_steps = 200;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const TimeGrid g = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const PathEnsemble e = generate_brownian(g, 50, 1, 2);
    ASDEProblem problem;
    problem.x0 = x0;
    problem.horizon_T = T;
    problem.delta = delta;
    problem.measure = DelayMeasure::dirac(delta);
    problem.drift = [a, b](int, int, double, double x, double adv) { return a * x + b * adv; };
    problem.diffusion = [](int, int, double, double, double) { return 0.0; };
    problem.lipschitz_C = 0.05;
    ASDEOptions opts;
    opts.basis = RegressionBasis::mean_only();
    auto [sol, rep] = picard_solve_asde(problem, e, opts);
    const AODEProblem aprob = AODEProblem::constant_coefficients(a, b, delta, x0, T);
    const AODESolution ref = picard_solve_aode(aprob, g);
    for (int i = 0; i <= g.index_of(T); i += 20) {
        CHECK(sol.x.at(0, i) == doctest::Approx(ref.q[i]).epsilon(2e-3));
    }
}

TEST_CASE("martingale-ratio conditioning is exact for q(t) M(t)") {
    const double lambda = 0.4, delta = 0.1, T = 1.0;
    const double alpha = 0.1, r = 0.05, kappa = 0.5, K = 1.0;
    const int n_steps = 100;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const TimeGrid g = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const int n = 2000;
    const PathEnsemble e = generate_brownian(g, n, 1, 3);
    const SampledProcess M = exponential_martingale(lambda, e);

    ASDEProblem problem;
    problem.x0 = K;
    problem.horizon_T = T;
    problem.delta = delta;
    problem.measure = DelayMeasure::dirac(delta);
    problem.drift = [alpha, r, kappa](int, int, double, double x, double adv) {
        return (alpha - r) * x - alpha * kappa * adv;
    };
    problem.diffusion = [lambda](int, int, double, double x, double) { return -lambda * x; };
    problem.lipschitz_C = lambda;

    ASDEOptions opts;
    opts.conditioning = ConditioningMode::MartingaleRatio;
    opts.reference_martingale = &M;
    auto [sol, rep] = picard_solve_asde(problem, e, opts);

    // reference: q from the characteristic root; x should track q(t) M(t)
    const CharacteristicSpec cspec{alpha, r, kappa, delta};
    const ExponentialAnsatz q = exponential_ansatz(cspec, K, T);
    double rms = 0.0;
    int cnt = 0;
    const int last = g.index_of(T);
    for (int i = 0; i <= last; i += 10) {
        for (int p = 0; p < n; ++p) {
            const double d = sol.x.at(p, i) - q(g.node(i)) * M.at(p, i);
            rms += d * d;
            ++cnt;
        }
    }
    rms = std::sqrt(rms / cnt);
    CHECK(rms < 5.0 * (1.0 / std::sqrt(double(n)) + dt));
}

TEST_CASE("martingale decomposition probes the coefficient structure") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.1, 110);
    const PathEnsemble e = generate_brownian(g, 20, 1, 4);
    std::vector<double> q(g.n_nodes(), 1.0);

    ASDEProblem linear;
    linear.x0 = 1.0;
    linear.horizon_T = 1.0;
    linear.delta = 0.1;
    linear.measure = DelayMeasure::dirac(0.1);
    linear.drift = [](int, int, double, double x, double adv) { return 0.05 * x - 0.02 * adv; };
    linear.diffusion = [](int, int, double, double x, double) { return -0.4 * x; };
    const SampledProcess p = martingale_decomposition_solve(linear, q, e);
    const SampledProcess M = exponential_martingale(0.4, e);
    for (int i = 0; i < g.n_nodes(); i += 30) {
        CHECK(p.at(3, i) == doctest::Approx(M.at(3, i)).epsilon(1e-12));
    }

    ASDEProblem nonlinear = linear;
    nonlinear.diffusion = [](int, int, double, double x, double) { return -0.4 * x * x; };
    CHECK_THROWS_AS(martingale_decomposition_solve(nonlinear, q, e), DomainError);
}

TEST_CASE("serial and parallel asde solves agree bitwise") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.1, 55);
    const PathEnsemble e = generate_brownian(g, 200, 1, 5);
    ASDEProblem problem;
    problem.x0 = 1.0;
    problem.horizon_T = 1.0;
    problem.delta = 0.1;
    problem.measure = DelayMeasure::dirac(0.1);
    problem.drift = [](int, int, double, double x, double adv) { return 0.05 * x - 0.02 * adv; };
    problem.diffusion = [](int, int, double, double x, double) { return -0.3 * x; };
    ASDEOptions so;
    so.exec = Execution::Serial;
    ASDEOptions po;
    po.exec = Execution::Parallel;
    auto [ss, rs] = picard_solve_asde(problem, e, so);
    auto [sp, rp] = picard_solve_asde(problem, e, po);
    CHECK(ss.x.values() == sp.x.values());
}
