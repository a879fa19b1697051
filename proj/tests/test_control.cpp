#include "doctest.h"

#include <cmath>
#include <memory>

#include "bsdelay/control.hpp"

using namespace bsdelay;

namespace {

HamiltonianSpec quadratic_spec() {
    HamiltonianSpec spec;
    spec.l = [](const ThetaArgs& a) { return -0.5 * a.v * a.v; };
    spec.f = [](double, double y, double ydel, double z, double zdel, double v, double) {
        return -(0.1 * y + 0.05 * ydel + 0.2 * z + 0.1 * zdel + v);
    };
    spec.H_y = [](const ThetaArgs& a) { return 0.1 * a.p; };
    spec.H_ydel = [](const ThetaArgs& a) { return 0.05 * a.p; };
    spec.H_z = [](const ThetaArgs& a) { return 0.2 * a.p; };
    spec.H_zdel = [](const ThetaArgs& a) { return 0.1 * a.p; };
    spec.H_v = [](const ThetaArgs& a) { return -a.v + a.p; };
    return spec;
}

}  // namespace

TEST_CASE("gradient check accepts correct partials and flags wrong ones") {
    const GradientCheck ok = check_hamiltonian_gradients(quadratic_spec(), 50, 1);
    CHECK(ok.max_rel_error < 1e-6);

    HamiltonianSpec bad = quadratic_spec();
    bad.H_v = [](const ThetaArgs& a) { return -a.v - a.p; };  // wrong sign on p
    const GradientCheck flagged = check_hamiltonian_gradients(bad, 50, 1);
    CHECK(flagged.max_rel_error > 0.1);
}

TEST_CASE("fubini defect vanishes when the controls coincide") {
    const TimeGrid g = TimeGrid::uniform(-0.1, 1.0, 55);
    const PathEnsemble e = generate_brownian(g, 50, 1, 1);
    SampledProcess h(g, 50, 1, true), u(g, 50, 1, true);
    for (int p = 0; p < 50; ++p) {
        for (int i = 0; i < g.n_nodes(); ++i) {
            h.at(p, i) = std::sin(g.node(i)) + e.w(p, i);
            u.at(p, i) = std::cos(g.node(i));
        }
    }
    CHECK(fubini_duality_check(h, u, u, DelayMeasure::dirac(0.1), DelayKernel::one(), e) == 0.0);
}

TEST_CASE("fubini duality holds for all measure kinds") {
    const TimeGrid g = TimeGrid::uniform(-0.2, 1.0, 60);
    const PathEnsemble e = generate_brownian(g, 100, 1, 2);
    SampledProcess h(g, 100, 1, true), u(g, 100, 1, true), v(g, 100, 1, true);
    for (int p = 0; p < 100; ++p) {
        for (int i = 0; i < g.n_nodes(); ++i) {
            const double t = g.node(i);
            h.at(p, i) = std::cos(2 * t) + 0.3 * e.w(p, i);
            u.at(p, i) = std::sin(t);
            v.at(p, i) = u.at(p, i) + 0.2 * t + 0.1 * e.w(p, i);
        }
    }
    for (const DelayMeasure& m :
         {DelayMeasure::dirac(0.2), DelayMeasure::lebesgue(0.2),
          DelayMeasure::finite_atoms(0.2, {{-0.1, 0.4}, {-0.2, 0.6}})}) {
        CHECK(fubini_duality_check(h, u, v, m, DelayKernel::one(), e) < 1e-12);
    }
}

TEST_CASE("objective functional integrates a deterministic control exactly") {
    const double T = 1.0;
    const TimeGrid g = TimeGrid::uniform(0.0, T, 200);
    const PathEnsemble e = generate_brownian(g, 100, 1, 3);

    ControlProblem problem;
    problem.horizon_T = T;
    problem.sense = Sense::Minimize;
    problem.bsde.generator = [](double, double, double, double, double, double, double) {
        return 0.0;
    };
    problem.bsde.terminal.assign(100, 0.0);
    problem.running_cost = [](const ThetaArgs& a) { return a.v * a.v; };
    problem.gamma = [](double y) { return y; };
    problem.gamma_y = [](double) { return 1.0; };

    SampledProcess u(g, 100, 1, true);
    for (int p = 0; p < 100; ++p) {
        for (int i = 0; i < g.n_nodes(); ++i) u.at(p, i) = g.node(i);
    }
    const ObjectiveEstimate est = objective_functional(problem, u, e);
    // int_0^1 t^2 dt = 1/3 (left Riemann error O(dt)), terminal share 0
    CHECK(est.J == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    CHECK(est.y0_mean == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("adjoint construction reproduces the linear coefficients") {
    // generator f = (alpha - r) y - lambda z - alpha kappa y_del + v gives the
    // adjoint drift (alpha - r) p - alpha kappa E[p(t+delta)] and diffusion -lambda p
    const double alpha = 0.1, r = 0.05, kappa = 0.5, lambda = 0.4, delta = 0.1, T = 1.0;
    const int n_steps = 50;
    const double dt = T / n_steps;
    const int n_lag = static_cast<int>(delta / dt + 0.5);
    const TimeGrid g = TimeGrid::uniform(-n_lag * dt, T, n_steps + n_lag);
    const PathEnsemble e = generate_brownian(g, 40, 1, 4);

    ControlProblem problem;
    problem.horizon_T = T;
    problem.bsde.delta = delta;
    problem.bsde.measure = DelayMeasure::dirac(delta);
    problem.bsde.terminal.assign(40, 1.0);
    problem.bsde.generator = [=](double, double y, double ydel, double z, double, double v,
                                 double) {
        return (alpha - r) * y - lambda * z - alpha * kappa * ydel + v;
    };
    problem.hamiltonian.f = problem.bsde.generator;
    problem.hamiltonian.l = [](const ThetaArgs&) { return 0.0; };
    problem.hamiltonian.H_y = [=](const ThetaArgs& a) { return (r - alpha) * a.p; };
    problem.hamiltonian.H_ydel = [=](const ThetaArgs& a) { return alpha * kappa * a.p; };
    problem.hamiltonian.H_z = [=](const ThetaArgs& a) { return lambda * a.p; };
    problem.gamma_adjoint_y = [](double) { return -1.0; };

    auto control = std::make_shared<SampledProcess>(g, 40, 1, true);
    PicardOptions popts;
    auto [state, rep] = picard_solve(problem.bsde, e, popts);
    auto solution = std::make_shared<BSDESolution>(state);
    const ASDEProblem adjoint = build_adjoint(problem, control, solution);

    CHECK(adjoint.x0 == doctest::Approx(1.0));
    CHECK(adjoint.horizon_T == doctest::Approx(T));
    CHECK(adjoint.delta == doctest::Approx(delta));
    // the payload carries H_ydel, so adv arrives pre-weighted by alpha kappa
    REQUIRE(adjoint.drift_payload);
    for (double x : {0.5, 1.0, 2.0}) {
        CHECK(adjoint.drift_payload(5, 0, x) == doctest::Approx(alpha * kappa * x).epsilon(1e-13));
    }
    // drift = -H_y - adv = (alpha - r) p - adv; diffusion = -H_z = -lambda p
    for (double p : {0.5, 1.0, 2.0}) {
        for (double adv : {0.0, 0.7}) {
            CHECK(adjoint.drift(0, 0, 0.0, p, adv) ==
                  doctest::Approx((alpha - r) * p - adv).epsilon(1e-13));
            CHECK(adjoint.diffusion(0, 0, 0.0, p, adv) ==
                  doctest::Approx(-lambda * p).epsilon(1e-13));
        }
    }
}

TEST_CASE("stationarity residual vanishes for the closed-form control") {
    // H_v = -v + p is zeroed by v = p
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 20);
    const PathEnsemble e = generate_brownian(g, 30, 1, 5);
    ControlProblem problem;
    problem.horizon_T = 1.0;
    problem.bsde.generator = [](double, double y, double, double, double, double v, double) {
        return -(0.1 * y + v);
    };
    problem.bsde.terminal.assign(30, 0.0);
    problem.hamiltonian.f = problem.bsde.generator;
    problem.hamiltonian.l = [](const ThetaArgs& a) { return -0.5 * a.v * a.v; };
    problem.hamiltonian.H_v = [](const ThetaArgs& a) { return -a.v + a.p; };
    problem.gamma_adjoint_y = [](double) { return -1.0; };

    SampledProcess p(g, 30, 1, true), u(g, 30, 1, true);
    for (int pa = 0; pa < 30; ++pa) {
        for (int i = 0; i < g.n_nodes(); ++i) {
            p.at(pa, i) = std::exp(0.1 * g.node(i)) * (1.0 + 0.1 * e.w(pa, i));
            u.at(pa, i) = p.at(pa, i);
        }
    }
    auto [state, rep] = picard_solve(problem.bsde, e);
    const auto res = maximum_condition_residual(problem, u, state, p, e);
    for (double v : res) CHECK(v <= 1e-14);
}
