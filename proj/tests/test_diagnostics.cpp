#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmdlab/diagnostics.hpp"

using namespace pmd;

namespace {

SpaceTimeField from_function(const Grid& g, int slices, double t0, double t1,
                             const std::function<double(const Point&, double)>& f) {
    SpaceTimeField w;
    for (int j = 0; j < slices; ++j) {
        double t = t0 + (t1 - t0) * j / (slices - 1);
        w.add(t, ScalarField::sample(g, [&](const Point& x) { return f(x, t); }));
    }
    return w;
}

SpaceTimeField random_field(const Grid& g, int slices, unsigned seed, bool dyadic = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    std::uniform_int_distribution<int> D(0, 1023);
    SpaceTimeField w;
    for (int j = 0; j < slices; ++j) {
        ScalarField f(g);
        for (auto& v : f.values()) v = dyadic ? D(rng) / 1024.0 : U(rng);
        w.add(-1.0 + double(j) / (slices - 1), std::move(f));
    }
    return w;
}

}  // namespace

TEST_CASE("pressure and nu transforms") {
    Grid g = Grid::box(1, 50, 1.0);
    ScalarField zero(g);
    for (double m : {1.5, 2.0, 3.0}) {
        auto pv = pressure_transform(zero, m), nv = nu_transform(zero, m);
        for (double v : pv.values()) CHECK(v == 0.0);
        for (double v : nv.values()) CHECK(v == 0.0);
    }
    auto u = ScalarField::sample(g, [](const Point& x) { return 1.5 + x[0]; });
    auto v = pressure_transform(u, 2.0);
    auto nu = nu_transform(u, 2.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(v[i] == doctest::Approx(2 * u[i]));
        CHECK(nu[i] == doctest::Approx(std::sqrt(u[i])));
    }

    SUBCASE("round trips on [1e-6, 1e3]") {
        Grid h = Grid::box(1, 1000, 1.0);
        auto w = ScalarField::sample(h, [](const Point& x) { return std::pow(10.0, -6 + 4.5 * (x[0] + 1)); });
        CHECK(w.min() >= 1e-6);
        CHECK(w.max() <= 1e3);
        for (double m : {1.3, 2.0, 4.0}) {
            auto back = nu_inverse(nu_transform(w, m), m);
            auto back2 = pressure_inverse(pressure_transform(w, m), m);
            double err = 0, err2 = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                err = std::max(err, std::abs(back[i] - w[i]));
                err2 = std::max(err2, std::abs(back2[i] - w[i]));
            }
            CHECK(err <= 1e-12);
            CHECK(err2 <= 1e-12);
        }
    }
    SUBCASE("negative input rejected") {
        ScalarField bad(g, 1.0);
        bad[3] = -1e-3;
        CHECK_THROWS_AS(pressure_transform(bad, 2.0), Error);
        CHECK_THROWS_AS(nu_transform(bad, 2.0), Error);
    }
}

TEST_CASE("space-time field invariants") {
    Grid g = Grid::box(2, 8, 1.0);
    SpaceTimeField w;
    w.add(0.0, ScalarField(g, 1.0));
    CHECK_THROWS_AS(w.add(0.0, ScalarField(g, 2.0)), Error);
    CHECK_THROWS_AS(w.add(1.0, ScalarField(Grid::box(2, 10, 1.0))), Error);
    w.add(1.0, ScalarField(g, 3.0));
    CHECK(w.sample({0.1, 0.2, 0}, 0.5) == doctest::Approx(2.0));
    CHECK_THROWS_AS(w.sample({0, 0, 0}, 1.5), Error);
}

TEST_CASE("rescale_cylinder") {
    Grid g = Grid::box(2, 40, 1.0);
    auto f = [](const Point& x, double t) { return std::sin(2 * x[0]) + x[1] * x[1] * (1 + t); };
    SUBCASE("r = 1, w = 1 is the identity on grid points") {
        auto w = from_function(g, 11, 0.0, 1.0, f);
        auto v = rescale_cylinder(w, 1.0, 1.0, 2.0);
        REQUIRE(v.size() == 11);
        for (std::size_t j = 0; j < v.size(); ++j) {
            CHECK(v.time(j) == doctest::Approx(w.time(j) - 1.0));
            for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(v.slice(j)[c] == w.slice(j)[c]);
        }
    }
    SUBCASE("constant stays constant") {
        auto w = from_function(g, 5, 0.0, 2.0, [](const Point&, double) { return 0.7; });
        auto v = rescale_cylinder(w, 0.3, 2.0, 1.5, {{0.2, -0.1, 0}, 1.5, 16, 7});
        for (std::size_t j = 0; j < v.size(); ++j)
            for (double x : v.slice(j).values()) CHECK(x == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("oscillation is preserved up to interpolation") {
        Grid fine = Grid::box(2, 200, 1.0);
        auto w = from_function(fine, 41, 0.0, 1.0, f);
        const double r = 0.5, wo = 2.0, m = 2.0;
        const double depth = r * r * std::pow(wo, -(m - 1) / m);
        auto v = rescale_cylinder(w, r, wo, m, {{0.1, 0.2, 0}, 1.0, 100, 41});
        double direct = oscillation(w, ParabolicCylinder({0.1, 0.2, 0}, 1.0, r, depth / (r * r) * (1 + 1e-12)));
        double rescaled = oscillation(v, ParabolicCylinder({0, 0, 0}, 0.0, 1.0, 1.0 + 1e-12));
        CHECK(std::abs(direct - rescaled) <= 1e-3 * direct);
    }
    SUBCASE("cylinder exceeding the data rejected") {
        auto w = from_function(g, 5, 0.0, 1.0, f);
        CHECK_THROWS_AS(rescale_cylinder(w, 0.5, 1.0, 2.0, {{0.6, 0, 0}, {}, 0, 0}), Error);
        CHECK_THROWS_AS(rescale_cylinder(w, 1.2, 1.0, 2.0), Error);
        // depth r^2 w^{-alpha} = 0.25 * 0.01^{-1/2} = 2.5 > 1
        CHECK_THROWS_AS(rescale_cylinder(w, 0.5, 0.01, 2.0), Error);
    }
}

TEST_CASE("oscillation") {
    Grid g = Grid::box(2, 64, 1.0);
    const double h = g.spacing();
    auto c = from_function(g, 4, 0, 1, [](const Point&, double) { return 2.5; });
    CHECK(oscillation(c, ParabolicCylinder({0, 0, 0}, 1.0, 0.5, 1.0)) == 0.0);
    auto lin = from_function(g, 4, 0, 1, [](const Point& x, double) { return x[0]; });
    // centered on a cell center with r = (j + 1/2) h, the extreme centers sit h/2 inside the sphere
    const Point x0 = g.center(g.ravel({35, 30, 0}));
    for (double r : {6.5 * h, 16.5 * h, 25.5 * h}) {
        double o = oscillation(lin, ParabolicCylinder(x0, 1.0, r, 1.0));
        CHECK(o <= 2 * r);
        CHECK(o >= 2 * r - h);
    }
    auto rnd = random_field(g, 6, 3);
    double outer = oscillation(rnd, ParabolicCylinder({0, 0, 0}, 0.0, 0.9, 1.0));
    double inner = oscillation(rnd, ParabolicCylinder({0.1, 0.1, 0}, -0.2, 0.4, 2.0));
    CHECK(inner <= outer);
    CHECK_THROWS_AS(oscillation(rnd, ParabolicCylinder({0, 0, 0}, 5.0, 0.5, 1.0)), Error);

    SUBCASE("exact invariance under constant shifts") {
        for (unsigned seed = 0; seed < 5; ++seed) {
            auto d = random_field(g, 5, seed, true);
            ParabolicCylinder Q({0.05, -0.1, 0}, 0.0, 0.7, 1.0);
            for (double shift : {3.25, -0.5, 1024.0}) CHECK(oscillation(d.shifted(shift), Q) == oscillation(d, Q));
        }
    }
}

TEST_CASE("holder_seminorm") {
    SUBCASE("u = x at delta = 1") {
        Grid g = Grid::box(1, 100, 1.0);
        auto w = from_function(g, 3, -1, 0, [](const Point& x, double) { return x[0]; });
        auto rep = holder_seminorm(w, 1.0);
        CHECK(std::abs(rep.value - 1.0) <= g.spacing());
    }
    SUBCASE("two probe points give the single-pair lower bound") {
        const double eps = 0.01, a = 0.3;
        Grid g = Grid::box(2, 100, 0.5);  // centers at odd multiples of h/2, probes shifted by h/2
        SpaceTimeField w;
        ScalarField f(g);
        Point hi{0.005, 4 * eps + 0.005, 0}, lo{0.005, -4 * eps + 0.005, 0};
        f[g.ravel({50, 54, 0})] = a;
        w.add(0.0, f);
        CHECK(g.center(g.ravel({50, 54, 0}))[1] == doctest::Approx(hi[1]));
        CHECK(g.center(g.ravel({50, 46, 0}))[1] == doctest::Approx(lo[1]));
        auto rep = holder_seminorm(w, 0.5);
        CHECK(rep.value >= a / std::pow(8 * eps, 0.5));
    }
    SUBCASE("refinement never decreases; shift and scale laws") {
        Grid g = Grid::box(2, 32, 1.0);
        auto w = random_field(g, 9, 4);
        double prev = 0;
        for (int stride : {8, 4, 2, 1}) {
            HolderOptions o;
            o.stride = stride;
            o.max_points = 1 << 30;
            double v = holder_seminorm(w, 0.7, o).value;
            CHECK(v >= prev);
            prev = v;
        }
        auto base = holder_seminorm(w, 0.5);
        CHECK(base.points <= 4000 + 2);
        CHECK(holder_seminorm(w.scaled(3.0), 0.5).value == doctest::Approx(3 * base.value).epsilon(1e-14));
        auto d = random_field(g, 9, 4, true);
        CHECK(holder_seminorm(d.shifted(5.5), 0.5).value == holder_seminorm(d, 0.5).value);
        CHECK(base.csv().rfind("delta,value,p_point,q_point\n", 0) == 0);
    }
    SUBCASE("deterministic across job counts") {
        Grid g = Grid::box(2, 24, 1.0);
        auto w = random_field(g, 7, 8);
        auto a = holder_seminorm(w, 0.4);
        set_jobs(4);
        auto b = holder_seminorm(w, 0.4);
        set_jobs(1);
        CHECK(a.csv() == b.csv());
    }
    CHECK_THROWS_AS(holder_seminorm(SpaceTimeField{}, 1.5), Error);
}

TEST_CASE("level_measures") {
    Grid g = Grid::box(2, 40, 1.0);
    const std::vector<double> ks{0.2, 0.4, 0.6, 0.8}, qs{0.25, 0.5, 0.75, 1.0};
    SUBCASE("constant fields") {
        auto w = from_function(g, 9, -0.8, 0.0, [](const Point&, double) { return 0.5; });
        auto ls = level_measures(w, ks, qs);
        CHECK(ls.window == doctest::Approx(0.8));
        for (std::size_t j = 0; j < qs.size(); ++j) {
            for (std::size_t i : {2u, 3u}) CHECK(ls.A[i][j] == 0.0);
            for (std::size_t i : {0u, 1u})
                CHECK(ls.A[i][j] == doctest::Approx(ls.ball_measure * std::pow(0.8, 1 / qs[j])).epsilon(1e-12));
        }
        // the discrete ball approaches pi
        CHECK(ls.ball_measure == doctest::Approx(std::numbers::pi).epsilon(2e-2));
    }
    SUBCASE("monotone in k and q on random fields") {
        for (unsigned seed = 0; seed < 20; ++seed) {
            auto w = random_field(g, 6, 100 + seed);
            auto ls = level_measures(w, ks, qs, 0.8);
            CHECK(ls.monotone());
        }
    }
    SUBCASE("super- and sub-level masses never exceed the ball") {
        auto w = random_field(g, 2, 5, true);
        auto ls = level_measures(w, {0.5}, {1.0});
        CHECK(ls.A[0][0] + ls.B[0][0] <= ls.ball_measure * (1 + 1e-12));
    }
    SUBCASE("errors and csv") {
        auto w = random_field(g, 3, 1);
        CHECK_THROWS_AS(level_measures(w, ks, {0.0}), Error);
        CHECK_THROWS_AS(level_measures(w, ks, {1.5}), Error);
        auto ls = level_measures(w, ks, qs);
        auto path = (std::filesystem::temp_directory_path() / "pmd_levels.csv").string();
        ls.write_csv(path);
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "k,q,A,B");
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 16);
        std::filesystem::remove(path);
    }
}
