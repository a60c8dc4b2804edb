#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmdlab/grid.hpp"

using namespace pmd;

namespace {

ScalarField random_field(const Grid& g, unsigned seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    ScalarField u(g);
    for (auto& v : u.values()) v = U(rng);
    return u;
}

VectorField random_faces(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0, 1);
    VectorField V(g, Staggering::Face);
    for (int a = 0; a < g.axes(); ++a)
        for (auto& v : V.component(a)) v = N(rng);
    return V;
}

}  // namespace

TEST_CASE("grid geometry") {
    Grid g = Grid::box(2, 8, 1.0);
    CHECK(g.spacing() == doctest::Approx(0.25));
    CHECK(g.cell_count() == 64);
    CHECK(g.face_count(0) == 72);
    for (std::size_t i = 0; i < g.cell_count(); ++i) CHECK(g.ravel(g.unravel(i)) == i);
    CHECK(g.center(0)[0] == doctest::Approx(-0.875));
    CHECK(g.center(9)[1] == doctest::Approx(-0.625));
    CHECK_THROWS_AS(Grid::box(2, 3, 1.0), Error);
    CHECK_THROWS_AS(Grid::box(4, 8, 1.0), Error);

    Grid r = Grid::radial(3, 10, 2.0);
    CHECK(r.center(0)[0] == doctest::Approx(0.1));
    double vol = 0;
    for (std::size_t i = 0; i < r.cell_count(); ++i) vol += r.cell_volume(i);
    CHECK(vol == doctest::Approx(4.0 / 3 * std::numbers::pi * 8));
}

TEST_CASE("pairwise sum is exact on integers and order independent of jobs") {
    std::vector<double> xs(1000);
    for (int i = 0; i < 1000; ++i) xs[i] = i;
    CHECK(pairwise_sum(xs) == 499500.0);
}

TEST_CASE("laplacian of nonlinearity") {
    Grid g = Grid::box(2, 16, 1.0);
    SUBCASE("constant input gives zero") {
        ScalarField u(g, 3.0);
        auto out = laplacian_of_nonlinearity(u, 2.0, 0.1);
        for (double v : out.values()) CHECK(v == 0.0);
    }
    SUBCASE("1D u = x, m = 2 gives 2 in the interior") {
        Grid g1 = Grid::box(1, 20, 1.0);
        auto u = ScalarField::sample(g1, [](const Point& x) { return x[0] + 2.0; });
        auto out = laplacian_of_nonlinearity(u, 2.0, 0.0);
        for (int i = 1; i < 19; ++i) CHECK(out[i] == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("sums to zero on random data") {
        for (unsigned seed = 0; seed < 5; ++seed) {
            auto u = random_field(g, seed);
            auto out = laplacian_of_nonlinearity(u, 1.7, 0.0);
            double s = 0, mx = 0;
            for (double v : out.values()) {
                s += v;
                mx = std::max(mx, std::abs(v));
            }
            CHECK(std::abs(s) <= 1e-12 * g.cell_count() * mx);
        }
    }
    SUBCASE("M-matrix monotonicity: raising a cell never lowers a neighbour") {
        auto u = random_field(g, 7);
        auto base = laplacian_of_nonlinearity(u, 2.5, 0.01);
        for (std::size_t c : {17u, 100u, 200u}) {
            auto v = u;
            v[c] += 0.3;
            auto out = laplacian_of_nonlinearity(v, 2.5, 0.01);
            for (std::size_t i = 0; i < u.size(); ++i)
                if (i != c) CHECK(out[i] >= base[i]);
        }
    }
    SUBCASE("rejects non-finite input naming the cell") {
        ScalarField u(g, 1.0);
        u[37] = std::nan("");
        try {
            laplacian_of_nonlinearity(u, 2.0, 0.0);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("cell 37") != std::string::npos);
        }
    }
}

TEST_CASE("radial laplacian conserves d-dimensional mass") {
    Grid g = Grid::radial(3, 40, 2.0);
    auto u = random_field(g, 3);
    auto out = laplacian_of_nonlinearity(u, 2.0, 0.0);
    double s = 0, mx = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += out[i] * g.cell_volume(i);
        mx = std::max(mx, std::abs(out[i] * g.cell_volume(i)));
    }
    CHECK(std::abs(s) <= 1e-12 * 40 * mx);
}

TEST_CASE("upwind drift divergence") {
    Grid g = Grid::box(1, 10, 1.0);
    const double h = g.spacing();
    auto u = ScalarField::sample(g, [](const Point& x) { return x[0] < 0 ? 1.0 : 0.0; });
    SUBCASE("zero drift or zero density") {
        VectorField V(g, Staggering::Face);
        auto a = divergence_of_drift_flux(u, V);
        for (double v : a.values()) CHECK(v == 0.0);
        for (auto& v : V.component(0)) v = 1.0;
        auto b = divergence_of_drift_flux(ScalarField(g), V);
        for (double v : b.values()) CHECK(v == 0.0);
    }
    SUBCASE("V = -1 carries the left half rightwards across the midpoint") {
        VectorField V(g, Staggering::Face);
        for (auto& v : V.component(0)) v = -1.0;
        auto out = divergence_of_drift_flux(u, V);
        // midpoint flux uses the left (upwind) cell value 1
        CHECK(out[5] == doctest::Approx(1.0 / h));
        CHECK(out[0] == doctest::Approx(-1.0 / h));
        for (int i : {1, 2, 3, 4, 6, 7, 8, 9}) CHECK(out[i] == 0.0);
    }
    SUBCASE("V = +1 pushes the left half against the wall") {
        VectorField V(g, Staggering::Face);
        for (auto& v : V.component(0)) v = 1.0;
        auto out = divergence_of_drift_flux(u, V);
        // the right cell is upwind at the midpoint and carries nothing
        CHECK(out[4] == doctest::Approx(-1.0 / h));
        CHECK(out[0] == doctest::Approx(1.0 / h));
        CHECK(out[5] == 0.0);
    }
    SUBCASE("conservative on random data in 3D") {
        Grid g3 = Grid::box(3, 8, 1.0);
        auto w = random_field(g3, 11);
        auto out = divergence_of_drift_flux(w, random_faces(g3, 12));
        double s = 0, mx = 0;
        for (double v : out.values()) {
            s += v;
            mx = std::max(mx, std::abs(v));
        }
        CHECK(std::abs(s) <= 1e-12 * g3.cell_count() * mx);
    }
    SUBCASE("grid mismatch rejected") {
        VectorField V(Grid::box(1, 12, 1.0), Staggering::Face);
        CHECK_THROWS_AS(divergence_of_drift_flux(u, V), Error);
    }
}

TEST_CASE("lp norms") {
    Grid g = Grid::box(2, 16, 0.5);  // unit square
    auto V = VectorField::sample_cells(g, [](const Point&) { return Vec{1, 0, 0}; });
    CHECK(lp_norm(V, 2) == doctest::Approx(1.0));
    auto W = V;
    W *= 2;
    CHECK(lp_norm(W, 3.5) == doctest::Approx(2 * lp_norm(V, 3.5)));

    SUBCASE("log-weighted") {
        auto E = VectorField::sample_cells(g, [](const Point&) { return Vec{std::numbers::e, 0, 0}; });
        CHECK(lp_logq_norm(E, 2, 1) == doctest::Approx(std::numbers::e));
        auto E2 = VectorField::sample_cells(g, [](const Point&) { return Vec{0, std::exp(2.0), 0}; });
        CHECK(lp_logq_norm(E2, 2, 1) == doctest::Approx(std::exp(2.0) * std::sqrt(2.0)));
        CHECK(lp_logq_norm(VectorField(g, Staggering::Cell), 2, 1) == 0.0);
        CHECK(lp_logq_norm(E2, 2, 1) >= lp_norm(E2, 2));
    }
    SUBCASE("nondecreasing in p on a set of measure <= 1") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> U(0, 3);
        VectorField R(g, Staggering::Cell);
        for (auto& v : R.component(0)) v = U(rng);
        double prev = 0;
        for (double p : {1.0, 1.5, 2.0, 3.0, 6.0}) {
            double n = lp_norm(R, p);
            CHECK(n >= prev);
            prev = n;
        }
    }
}

TEST_CASE("snapshot csv round trip is bit exact") {
    Grid g = Grid::box(2, 6, 1.3);
    auto u = random_field(g, 21, 0.0, 1e-3);
    u[4] = 1.0 / 3.0;
    auto path = (std::filesystem::temp_directory_path() / "pmd_snapshot_test.csv").string();
    write_snapshot_csv(path, u);
    auto v = read_snapshot_csv(path, g);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == v[i]);
    CHECK_THROWS_AS(read_snapshot_csv(path, Grid::box(2, 8, 1.3)), Error);
    std::remove(path.c_str());
}
