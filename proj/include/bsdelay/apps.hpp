#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bsdelay/aode.hpp"
#include "bsdelay/control.hpp"

namespace bsdelay {

/// Terminal condition of the state equation.
struct XiSpec {
    enum class Kind { Constant, Brownian };  // Brownian: xi = W(T)
    Kind kind = Kind::Constant;
    double value = 1.0;
};
std::vector<double> make_terminal(const XiSpec& xi, const PathEnsemble& ensemble);

/// Shared numerical settings of the application pipelines.
struct Numerics {
    int n_steps = 200;  // uniform steps on [0, T]
    int n_paths = 2000;
    std::uint64_t seed = 1;
    int basis_degree = 3;
    double tol = 1e-8;
    int max_iter = 40;
    Execution exec = Execution::Parallel;
    double integro_eps = 1e-6;  // inner cutoff of the singular integro-ODE
    int integro_cells = 2000;
    bool verify = true;  // run the perturbation sweep
    int n_perturbations = 50;
    std::vector<double> magnitudes = {0.02, 0.1, 0.5};
    std::uint64_t perturb_seed = 7;
};

/// Recursive utility with a moving average of the state; control is the
/// consumption rate, objective J = -E int U(c) dt + y(0) (minimized).
struct App1Params {
    double beta = 0.1;
    double alpha = 1.0;
    double R = 0.5;  // utility exponent, 0 < R < 1
    double T = 1.0;
    XiSpec xi{};
};

struct App1Result {
    IntegroODESolution adjoint;  // on the graded grid
    TimeGrid adjoint_grid;
    std::vector<double> p;  // adjoint on the uniform state grid
    std::vector<double> c;  // optimal consumption on the state grid
    std::vector<double> stationarity;
    GradientCheck gradients;
    OptimalityReport report;
};
App1Result app1_solve(const App1Params& params, const Numerics& numerics);

/// Pension fund with delayed surplus; control is consumption, objective
/// J = E int L e^{-rho t} c^{1-R}/(1-R) dt - K y(0) (maximized).
struct App2Params {
    double r = 0.05;
    double mu = 0.09;
    double sigma = 0.1;
    double alpha = 0.1;
    double kappa = 0.5;
    double delta = 0.1;
    double L = 1.0;
    double K = 1.0;
    double rho = 0.02;
    double R = 0.5;
    double T = 1.0;
    XiSpec xi{};
};

struct RangeCheck {
    double L = 0.0;  // max(|alpha - r|, alpha kappa, lambda)
    double bound1 = 0.0;  // 6 L^2 delta (1 + 2 delta^2 e)
    double bound2 = 0.0;  // 4 L^2 delta (1 + delta^2 e) + delta
    bool bound1_ok = false;
    bool bound2_ok = false;
};
RangeCheck app2_range_check(double alpha, double r, double kappa, double lambda, double delta);

struct App2Result {
    double h = 0.0;
    double lambda = 0.0;  // risk premium (mu - r) / sigma
    std::vector<double> q;  // ansatz values on the extended grid [0, T+delta]
    AODESolution q_picard;
    BSDESolution state;
    std::vector<double> c_mean;      // E[c(t)] per node
    std::vector<double> theta_mean;  // E[z/(sigma y)] where |y| > threshold, NaN elsewhere
    std::vector<double> stationarity;
    RangeCheck range;
    GradientCheck gradients;
    OptimalityReport report;
};
App2Result app2_solve(const App2Params& params, const Numerics& numerics);

/// Linear delayed backward system with quadratic control cost, objective
/// J = 1/2 E int R(t) v^2 dt + K y(0) (minimized).
struct App3Params {
    double beta1 = 0.1;
    double beta2 = 0.05;
    double gamma1 = 0.2;
    double gamma2 = 0.1;
    double alpha = 1.0;
    double K = 1.0;
    double delta = 0.1;
    double T = 1.0;
    std::function<double(double)> R = [](double) { return 1.0; };
    XiSpec xi{XiSpec::Kind::Brownian, 0.0};
};

struct App3Result {
    CoupledAODEResult coupled;  // q, h, gamma, nodewise profile
    BSDESolution state;
    std::vector<double> u_mean;  // E[u(t)] per node
    std::vector<double> stationarity;
    GradientCheck gradients;
    OptimalityReport report;
};
App3Result app3_solve(const App3Params& params, const Numerics& numerics);

}  // namespace bsdelay
