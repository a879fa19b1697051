#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "bsdelay/ensemble.hpp"

using namespace bsdelay;

TEST_CASE("same seed reproduces the ensemble exactly") {
    const TimeGrid g = TimeGrid::uniform(-0.1, 1.0, 22);
    const PathEnsemble a = generate_brownian(g, 50, 1, 42);
    const PathEnsemble b = generate_brownian(g, 50, 1, 42);
    CHECK(a.increments() == b.increments());
    const PathEnsemble c = generate_brownian(g, 50, 1, 43);
    CHECK(a.increments() != c.increments());
}

TEST_CASE("serial and parallel generation are bit-identical") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 20);
    const PathEnsemble s = generate_brownian(g, 33, 2, 7, Execution::Serial);
    const PathEnsemble p = generate_brownian(g, 33, 2, 7, Execution::Parallel);
    CHECK(s.increments() == p.increments());
    CHECK(s.cumulative() == p.cumulative());
}

TEST_CASE("paths vanish before time zero") {
    const TimeGrid g = TimeGrid::uniform(-0.3, 1.0, 26);
    const PathEnsemble e = generate_brownian(g, 20, 1, 3);
    const int i0 = g.index_of(0.0);
    for (int p = 0; p < 20; ++p) {
        for (int i = 0; i <= i0; ++i) CHECK(e.w(p, i) == 0.0);
    }
}

TEST_CASE("increment moments match the grid step") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 10);
    const int n = 20000;
    const PathEnsemble e = generate_brownian(g, n, 1, 11);
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < n; ++p) {
        const double dw = e.dw(p, 4);
        mean += dw;
        var += dw * dw;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(10.0 * n));  // sd of the mean = sqrt(dt/n)
    CHECK(var == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("exponential martingale has mean one") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 50);
    const int n = 40000;
    const PathEnsemble e = generate_brownian(g, n, 1, 5);
    const SampledProcess m = exponential_martingale(0.4, e);
    for (int i : {0, 25, 50}) {
        double mean = 0.0;
        for (int p = 0; p < n; ++p) mean += m.at(p, i);
        mean /= n;
        CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("ito integral of 1 recovers the terminal path value") {
    const TimeGrid g = TimeGrid::uniform(-0.1, 1.0, 22);
    const PathEnsemble e = generate_brownian(g, 10, 1, 9);
    SampledProcess ones(g, 10, 1, true);
    for (int p = 0; p < 10; ++p) {
        for (int i = 0; i < g.n_nodes(); ++i) ones.at(p, i) = 1.0;
    }
    const auto integral = path_integral(ones, e, QuadratureMode::Ito);
    for (int p = 0; p < 10; ++p) {
        CHECK(integral[p] == doctest::Approx(e.w(p, g.n_nodes() - 1)).epsilon(1e-13));
    }
}

TEST_CASE("lebesgue integral of t over [0, 1] is one half") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 1000);
    const PathEnsemble e = generate_brownian(g, 2, 1, 1);
    SampledProcess tt(g, 2, 1, true);
    for (int p = 0; p < 2; ++p) {
        for (int i = 0; i < g.n_nodes(); ++i) tt.at(p, i) = g.node(i);
    }
    const auto integral = path_integral(tt, e, QuadratureMode::Lebesgue);
    CHECK(integral[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("ensemble dump and load round-trips") {
    const TimeGrid g = TimeGrid::uniform(-0.1, 1.0, 11);
    const PathEnsemble e = generate_brownian(g, 13, 2, 77);
    const std::string path =
        (std::filesystem::temp_directory_path() / "bsdelay_ens_test.bin").string();
    dump_ensemble(e, path);
    const PathEnsemble loaded = load_ensemble(path);
    std::remove(path.c_str());
    CHECK(loaded.seed() == e.seed());
    CHECK(loaded.n_paths() == e.n_paths());
    CHECK(loaded.dim() == e.dim());
    CHECK(loaded.grid().nodes() == g.nodes());
    CHECK(loaded.increments() == e.increments());
    CHECK(loaded.cumulative() == e.cumulative());
}

TEST_CASE("antithetic pairing mirrors paths and zeroes every sample mean") {
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 40);
    const PathEnsemble e =
        generate_brownian(g, 100, 1, 9, Execution::Parallel, Pairing::Antithetic);
    for (int j = 0; j < 50; ++j) {
        for (int i = 0; i < g.n_nodes(); ++i) {
            CHECK(e.w(2 * j + 1, i) == -e.w(2 * j, i));
        }
    }
    for (int i = 0; i < g.n_nodes(); ++i) {
        double mean = 0.0;
        for (int p = 0; p < 100; ++p) mean += e.w(p, i);
        CHECK(mean == 0.0);  // exact cancellation, not approximate
    }
    // even paths coincide with the independent generator's pair streams
    const PathEnsemble plain = generate_brownian(g, 50, 1, 9);
    for (int j = 0; j < 50; ++j) {
        CHECK(e.w(2 * j, g.n_nodes() - 1) == plain.w(j, g.n_nodes() - 1));
    }
}
