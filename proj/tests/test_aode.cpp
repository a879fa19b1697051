#include "doctest.h"

#include <cmath>

#include "bsdelay/aode.hpp"
#include "bsdelay/errors.hpp"

using namespace bsdelay;

TEST_CASE("advanced exponent satisfies its defining equation") {
    const double a = -0.1, b = -0.05, delta = 0.1;
    const double h = advanced_exponent(a, b, delta);
    CHECK(h == doctest::Approx(-0.14925924574459989).epsilon(1e-12));
    CHECK(h - b * std::exp(h * delta) - a == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("characteristic root frozen values") {
    CHECK(characteristic_root({0.2, 0.05, 0.5, 0.2}) ==
          doctest::Approx(0.049014881709174254).epsilon(1e-12));
    // the balanced point where the root vanishes identically
    CHECK(characteristic_root({0.1, 0.05, 0.5, 0.1}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(characteristic_root({0.15, 0.02, 0.8, 0.15}) ==
          doctest::Approx(0.0098230546868879994).epsilon(1e-12));
}

TEST_CASE("root is decreasing in kappa and increasing in alpha - r") {
    const double h0 = characteristic_root({0.1, 0.05, 0.5, 0.1});
    CHECK(characteristic_root({0.1, 0.05, 0.6, 0.1}) < h0);
    CHECK(characteristic_root({0.1, 0.04, 0.5, 0.1}) > h0);
}

TEST_CASE("picard solve tracks the ansatz away from the terminal layer") {
    const double a = 0.05, b = -0.05, delta = 0.1, T = 1.0, K = 2.0;
    const int n_steps = 1000;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const TimeGrid g = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const AODEProblem problem = AODEProblem::constant_coefficients(a, b, delta, K, T);
    const AODESolution sol = picard_solve_aode(problem, g);
    const double h = advanced_exponent(a, b, delta);
    const ExponentialAnsatz ansatz{h, K, T};
    for (int i = 0; i <= g.index_of(T - delta); i += 100) {
        CHECK(sol.q[i] == doctest::Approx(ansatz(g.node(i))).epsilon(1e-3));
    }
}

TEST_CASE("residual splits into a small bulk and an order-one terminal layer") {
    const double a = 0.05, b = -0.05, delta = 0.1, T = 1.0, K = 1.0;
    const int n_steps = 1000;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const TimeGrid g = TimeGrid::uniform(0.0, T + n_lag * dt, n_steps + n_lag);
    const AODEProblem problem = AODEProblem::constant_coefficients(a, b, delta, K, T);
    const double h = advanced_exponent(a, b, delta);
    const ExponentialAnsatz ansatz{h, K, T};
    std::vector<double> q(g.n_nodes());
    for (int i = 0; i < g.n_nodes(); ++i) q[i] = ansatz(g.node(i));
    const AODEResidual res = aode_residual(q, problem, g);
    CHECK(res.max_bulk < 1e-10);  // the ansatz solves the bulk equation exactly
    // beyond T - delta the advanced value is the spliced terminal path, not the
    // ansatz; the defect is |b| K e^{h (T - delta)} at the layer edge
    CHECK(res.max_layer > 0.9 * std::abs(b) * K * std::exp(h * (T - delta)));
}

TEST_CASE("zero advanced coefficient gives the plain exponential") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 100);
    const AODEProblem problem = AODEProblem::constant_coefficients(0.3, 0.0, 0.0, 1.0, 1.0);
    const AODESolution sol = picard_solve_aode(problem, g);
    CHECK(sol.report.n_iterations <= 2);
    for (int i = 0; i <= 100; i += 25) {
        // integrating-factor stepping is exact for constant coefficients
        CHECK(sol.q[i] == doctest::Approx(std::exp(0.3 * g.node(i))).epsilon(1e-12));
    }
}

TEST_CASE("coupled pair reports the ansatz ratio constant") {
    const double b1 = 0.1, b2 = 0.05, g1 = 0.2, g2 = 0.1, K = 1.0, delta = 0.1, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(0.0, T + delta, 110);
    const CoupledAODEResult res = coupled_aode_solve(b1, b2, g1, g2, K, delta, T, grid);
    CHECK(res.h == doctest::Approx(-0.14925924574459989).epsilon(1e-12));
    CHECK(res.gamma == doctest::Approx(0.29851849148919979).epsilon(1e-12));
    CHECK(res.max_gamma_deviation_bulk < 1e-12);
    // inside the terminal layer the advanced leg is the splice, not the ansatz
    const int layer = grid.index_of(T) - 2;
    CHECK(res.gamma_nodewise[layer] != doctest::Approx(res.gamma).epsilon(1e-6));
}

TEST_CASE("integro-ODE with zero beta stays constant") {
    IntegroODEProblem problem;
    problem.beta = 0.0;
    problem.horizon_T = 1.0;
    problem.grid = TimeGrid::graded(1e-6, 1.0, 200);
    const IntegroODESolution sol = integro_ode_solve(problem);
    for (double v : sol.p) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 1; i < sol.pdot.size(); ++i) CHECK(sol.pdot[i] == 0.0);
}

TEST_CASE("integro-ODE first-order expansion in beta") {
    // p(t) = 1 + beta (t log(T/t) + t) + O(beta^2)
    const double beta = 1e-4, T = 1.0;
    IntegroODEProblem problem;
    problem.beta = beta;
    problem.horizon_T = T;
    problem.grid = TimeGrid::graded(1e-8, T, 800);
    const IntegroODESolution sol = integro_ode_solve(problem);
    for (double t : {0.1, 0.5, 0.9, 1.0}) {
        const double approx = 1.0 + beta * (t * std::log(T / t) + t);
        CHECK(sol.eval(problem.grid, t) == doctest::Approx(approx).epsilon(1e-7));
    }
}

TEST_CASE("integro-ODE solution is increasing with flat terminal slope") {
    IntegroODEProblem problem;
    problem.beta = 0.1;
    problem.horizon_T = 1.0;
    problem.grid = TimeGrid::graded(1e-6, 1.0, 400);
    const IntegroODESolution sol = integro_ode_solve(problem);
    CHECK(sol.p.front() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < sol.p.size(); ++i) CHECK(sol.p[i] >= sol.p[i - 1]);
    CHECK(sol.pdot.back() == 0.0);
    // pdot decreases toward T (the tail integral shrinks)
    CHECK(sol.pdot[1] > sol.pdot[sol.pdot.size() / 2]);
}
