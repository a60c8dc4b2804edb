#include <cmath>

#include "doctest.h"
#include "pmdlab/barriers.hpp"

using namespace pmd;

namespace {

double central(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

// Second derivative d^2 f / dx_a dx_b by plain central differences.
double mixed(double s, int dim, Point x, int a, int b, double h) {
    auto at = [&](double da, double db) {
        Point y = x;
        y[a] += da;
        y[b] += db;
        return critical_f(s, dim, y);
    };
    if (a == b) return (at(h, 0) - 2 * critical_f(s, dim, x) + at(-h, 0)) / (h * h);
    return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
}

}  // namespace

TEST_CASE("bump profiles") {
    CHECK(bump_sub(0) == doctest::Approx(1.0));
    CHECK(bump_sub(1) == 0.0);
    CHECK(bump_sub(1.5) == 0.0);
    CHECK(bump_sub(0.5) == doctest::Approx(std::exp(1 - 1 / 0.75)));
    for (double R : {0.1, 0.4, 0.7, 0.9}) {
        CHECK(bump_sub_d1(R) == doctest::Approx(central(bump_sub, R, 1e-5)).epsilon(1e-7));
        CHECK(bump_sub_d2(R) == doctest::Approx(central(bump_sub_d1, R, 1e-5)).epsilon(1e-7));
    }
    CHECK(bump_super(0.3) == doctest::Approx(0.09));
    CHECK(bump_super(1.0) == doctest::Approx(1.0));
    CHECK(bump_super(2.0) == 1.0);
    for (double R : {0.55, 0.7, 0.85, 0.95}) {
        CHECK(bump_super_d1(R) == doctest::Approx(central(bump_super, R, 1e-5)).epsilon(1e-7));
        CHECK(bump_super_d2(R) == doctest::Approx(central(bump_super_d1, R, 1e-5)).epsilon(1e-7));
        CHECK(bump_super(R) >= R * R);
        CHECK(bump_super(R) <= 1.0);
    }
}

TEST_CASE("barrier constants") {
    // Lap bump_sub at the origin is d * phi''(0) = -2d, which the sup must dominate.
    CHECK(bump_sub_laplacian_cap(2) >= 4.0);
    CHECK(bump_sub_laplacian_cap(3) >= 6.0);
    // On R < 1/2 the super profile is R^2: (m-1)R^2 (2d) + 4R^2 = (2d(m-1) + 4) R^2 <= C* R^2.
    for (int d : {2, 3})
        for (double m : {1.5, 2.0, 3.0}) CHECK(barrier101_constant(m, d) >= 2 * d * (m - 1) + 4);
}

TEST_CASE("time profiles") {
    auto p = BarrierParams::make(0.3, 0.02, 0.1, 2.0, 2);
    CHECK(p.M == doctest::Approx(std::pow(0.3, -1.5)));
    CHECK(z_profile(p, 0) == doctest::Approx(1.0));
    CHECK(z_profile(p, p.T) == doctest::Approx(0.08).epsilon(1e-12));
    for (double t : {0.1, 0.5, 0.9}) {
        double tt = t * p.T, z = z_profile(p, tt);
        double dz = central([&](double u) { return z_profile(p, u); }, tt, 1e-6);
        CHECK(dz == doctest::Approx(-std::pow(z, p.s - 1) / p.M).epsilon(1e-6));
    }
    CHECK(k_profile(p, p.T) == doctest::Approx(2 / p.C0));
    CHECK(k_profile(p, 0) == doctest::Approx(1 / (p.C0 - p.Cstar * p.M / (p.r * p.r * p.s))));
    double prev = 0;
    for (int i = 0; i <= 20; ++i) {
        double k = k_profile(p, p.T * i / 20);
        CHECK(k > prev);
        prev = k;
    }
    CHECK_THROWS_AS(z_profile(p, -1e-6), Error);
    CHECK_THROWS_AS(k_profile(p, p.T * 1.001), Error);

    auto p3 = BarrierParams::make(0.5, 0.01, 0.1, 2.0, 3);
    CHECK(p3.M == doctest::Approx(std::pow(0.5, -4.0 / 3)));
    CHECK(z_profile(p3, p3.T) == doctest::Approx(0.04).epsilon(1e-12));

    SUBCASE("s = 1 gives linear z") {
        auto q = BarrierParams::make(1.0, 0.1, 0.1, 2.0, 2);
        CHECK(q.T == doctest::Approx(0.6));
        CHECK(z_profile(q, 0.3) == doctest::Approx(0.7));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(BarrierParams::make(0, 0.02, 0.1, 2, 2), Error);
    CHECK_THROWS_AS(BarrierParams::make(1.2, 0.02, 0.1, 2, 2), Error);
    CHECK_THROWS_AS(BarrierParams::make(0.3, 0.25, 0.1, 2, 2), Error);
    CHECK_THROWS_AS(BarrierParams::make(0.3, 0.02, 0.1, 1, 2), Error);
    CHECK_THROWS_AS(BarrierParams::make(0.3, 0.02, 0.2, 2, 2), Error);
    CHECK_THROWS_AS(BarrierParams::make(0.3, 0.02, 1.0 / 9, 2, 3), Error);
    CHECK_NOTHROW(BarrierParams::make(0.3, 0.02, 0.125, 2, 2));
    CHECK_THROWS_AS(BarrierParams::make(0.3, 0.02, 0.1, 2, 4), Error);
    auto p = BarrierParams::make(0.3, 0.02, 0.1, 2, 2);
    CHECK(p.cs == doctest::Approx(p.cs_cap / 2));
    CHECK(p.cs_cap == doctest::Approx(0.3 * 0.01 / (p.Csub * p.M)));
}

TEST_CASE("barrier values") {
    auto p = BarrierParams::make(0.3, 0.02, 0.1, 2.0, 2);
    CHECK(subsolution_eval(p, {0, 1, 0}, 0) == doctest::Approx(p.cs));
    CHECK(subsolution_eval(p, {0, 0.08, 0}, p.T) == doctest::Approx(p.cs * std::pow(0.08, 0.3)));
    CHECK(subsolution_eval(p, {0.2, 1, 0}, 0) == 0.0);
    CHECK(supersolution_eval(p, {0, -0.08, 0}, p.T) <= 1e-20);
    CHECK(supersolution_eval(p, {0, 1, 0}, 0) == doctest::Approx(k_profile(p, 0)));
    for (double t : {0.0, 0.4, 1.0}) {
        double z = z_profile(p, t);
        CHECK(subsolution_eval(p, {0, -z, 0}, t) == 0.0);
        CHECK(supersolution_eval(p, {0, -z, 0}, t) == 0.0);
    }
}

TEST_CASE("critical point certificates") {
    for (int d : {2, 3})
        for (double s : {0.1, 0.3, 0.5}) {
            auto c = critical_point_certificate(s, d, 2000);
            CAPTURE(d);
            CAPTURE(s);
            CHECK(c.passed());
            CHECK(c.max_hessian_rel_error <= 1e-8);
            // independent second differences at a coarser step
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    CHECK(mixed(s, d, c.point, a, b, 1e-4) == doctest::Approx(c.printed[a][b]).epsilon(1e-5).scale(1));
        }
    auto c2 = critical_point_certificate(0.5, 2, 2000);
    CHECK(c2.printed[0][0] == 1.0);
    CHECK(c2.printed[1][1] == 3.0);
    auto c3 = critical_point_certificate(0.5, 3, 2000);
    CHECK(c3.printed[0][0] == 1.5);
    CHECK(c3.printed[2][2] == 3.0);
    CHECK(c3.printed[0][2] == 0.25);
    CHECK(c3.text().find("\"verdict\": \"PASS\"") != std::string::npos);
}

TEST_CASE("transport function symmetries") {
    for (double s : {0.1, 0.5})
        for (Point x : {Point{0.2, 0.1, 0.7}, Point{-0.4, 0.3, 1.2}, Point{0.05, -0.2, 0.9}}) {
            CHECK(critical_f(s, 2, x) == doctest::Approx(critical_f(s, 2, {-x[0], x[1], 0})).epsilon(1e-14));
            CHECK(critical_f(s, 3, x) == doctest::Approx(critical_f(s, 3, {x[1], x[0], x[2]})).epsilon(1e-14));
        }
}

TEST_CASE("residual sign checks pass") {
    for (int d : {2, 3})
        for (double s : {0.1, 0.3, 0.5})
            for (double eps : {0.02, 0.01}) {
                auto p = BarrierParams::make(s, eps, 0.1, 2.0, d);
                for (auto kind : {BarrierKind::Sub, BarrierKind::Super}) {
                    auto rep = residual_sign_check(p, kind, 20000);
                    CAPTURE(rep.text());
                    CHECK(rep.passed());
                    CHECK(rep.samples == 20000);
                }
            }
}

TEST_CASE("residual sign check counter-tests") {
    SUBCASE("k scaled above the ODE solution breaks k'") {
        auto p = BarrierParams::make(0.3, 0.02, 0.1, 2.0, 2);
        p.k_scale = 1.001;
        auto rep = residual_sign_check(p, BarrierKind::Super, 5000);
        CHECK_FALSE(rep.passed());
        const auto& k = rep.component("k_prime");
        CHECK_FALSE(k.passed);
        CHECK(k.max_violation > 1e-4);
        CHECK(rep.text().find("\"verdict\": \"FAIL\"") != std::string::npos);
    }
    SUBCASE("without drift the sub height holds but transport fails") {
        auto p = BarrierParams::make(0.3, 0.02, 0.1, 2.0, 2);
        auto rep = residual_sign_check(p, BarrierKind::Sub, 5000, 1, false);
        CHECK(rep.component("height").passed);
        CHECK_FALSE(rep.component("transport").passed);
        CHECK_FALSE(rep.passed());
    }
    SUBCASE("oversized c_s breaks the height condition") {
        auto p = BarrierParams::make(0.3, 0.02, 0.1, 2.0, 2);
        p.cs = 50 * p.cs_cap;
        auto rep = residual_sign_check(p, BarrierKind::Sub, 5000);
        CHECK_FALSE(rep.component("height").passed);
    }
}

TEST_CASE("sign checks are deterministic") {
    auto p = BarrierParams::make(0.5, 0.02, 0.1, 2.0, 3);
    auto a = residual_sign_check(p, BarrierKind::Super, 3000, 7);
    set_jobs(3);
    auto b = residual_sign_check(p, BarrierKind::Super, 3000, 7);
    set_jobs(1);
    CHECK(a.text() == b.text());
}
