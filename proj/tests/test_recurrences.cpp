#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pmdlab/grid.hpp"
#include "pmdlab/recurrences.hpp"

using namespace pmd;

TEST_CASE("exponent sequence") {
    for (int k = 0; k < 20; ++k) CHECK(iteration_exponent(k, 0) == std::ldexp(1.0, k));
    for (int a : {1, 2, 5}) {
        double n = 1;
        for (int k = 0; k < 30; ++k) {
            CHECK(iteration_exponent(k, a) == n);
            n = 2 * n + a;
        }
    }
    CHECK_THROWS_AS(iteration_exponent(3, -1), Error);
}

TEST_CASE("appendix A") {
    SUBCASE("c_k closed form for C1 = 0, a = 0") {
        AppendixAConfig cfg;
        cfg.C1 = 0;
        cfg.K = 60;
        auto r = run_appendix_a(cfg);
        CHECK(r.c[3] == 26);
        for (int k = 0; k <= 50; ++k) CHECK(r.c[k] == 4 * std::ldexp(1.0, k) - (k + 3));
        CHECK(r.c[60] / r.n[60] == doctest::Approx(4.0));
    }
    SUBCASE("default constants and boundedness over 1000 steps") {
        auto r = run_appendix_a({});
        CHECK(r.C2 == doctest::Approx(6.0));  // max(1, 1) (1 + 2) (1 + 1)
        CHECK(r.n.size() == 1001);
        CHECK(r.bounded());
        CHECK(r.plateau_from > 0);
        CHECK(r.plateau_from < 100);
        for (double B : r.normalized) CHECK(B <= r.recorded_bound);
        CHECK(r.text().find("C2=6") != std::string::npos);
    }
    SUBCASE("bounded for other a") {
        for (double a : {-0.5, 1.0, 3.0}) {
            AppendixAConfig cfg;
            cfg.a = a;
            auto r = run_appendix_a(cfg);
            CAPTURE(a);
            CHECK(r.bounded());
        }
    }
    SUBCASE("monotone in M") {
        AppendixAConfig lo, hi;
        lo.M = 1.5;
        hi.M = 1.5;
        lo.C2 = hi.C2 = 6.0;
        hi.M = 3.0;
        auto a = run_appendix_a(lo), b = run_appendix_a(hi);
        for (std::size_t k = 0; k < a.log_M.size(); ++k) CHECK(a.log_M[k] <= b.log_M[k]);
    }
    SUBCASE("csv") {
        AppendixAConfig cfg;
        cfg.K = 5;
        auto path = (std::filesystem::temp_directory_path() / "pmd_appa.csv").string();
        run_appendix_a(cfg).write_csv(path);
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        CHECK(line == "k,n_k,log_M_k,B_k,c_k");
        std::filesystem::remove(path);
    }
    CHECK_THROWS_AS(run_appendix_a({0.0}), Error);
}

TEST_CASE("appendix B threshold identity") {
    CHECK(critical_exponent(2) == 3.0);
    CHECK(critical_exponent(3) == 3.8);
    for (int d : {2, 3, 4, 5}) {
        double ps = critical_exponent(d);
        CHECK(appendix_b_exponent(d, ps) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(appendix_b_exponent(d, ps + 0.01) > 1);
        CHECK(appendix_b_exponent(d, ps - 0.01) < 1);
    }
    // 2/(d+2) + (2/d) q1/(1-q1) at d = 2, p = 3.5
    CHECK(appendix_b_exponent(2, 3.5) == doctest::Approx(1.25));
}

TEST_CASE("appendix B orbits") {
    SUBCASE("zero data") {
        auto r = run_appendix_b({2, 3.5, 1, 0.0});
        CHECK(r.verdict == Verdict::Converges);
        CHECK(std::isinf(r.final_log_a()));
    }
    SUBCASE("converges above the threshold") {
        auto r = run_appendix_b({2, 3.5, 1, 1e-6});
        CHECK(r.verdict == Verdict::Converges);
        CHECK(r.final_log_a() <= -700);
        CHECK(run_appendix_b({2, 3.2, 1, 1e-8}).verdict == Verdict::Converges);
        CHECK(run_appendix_b({3, 4.5, 1, 1e-6}).verdict == Verdict::Converges);
    }
    SUBCASE("C1 = 2 orbit from a0 = 1e-6 leaves (0, 1)") {
        // the geometric factor 2^n outruns the superlinear decay at this a0
        auto r = run_appendix_b({2, 3.5, 2, 1e-6});
        CHECK(r.verdict == Verdict::Diverges);
        CHECK(r.steps == 9);
        CHECK(run_appendix_b({2, 3.5, 2, 1e-80}).verdict == Verdict::Converges);
    }
    SUBCASE("below the threshold the orbit does not converge") {
        for (double a0 : {1e-2, 1e-4, 1e-8})
            CHECK(run_appendix_b({2, 2.9, 1, a0}).verdict != Verdict::Converges);
    }
    SUBCASE("monotone in the initial data") {
        for (double p : {2.8, 3.3, 4.0}) {
            auto hi = run_appendix_b({2, p, 1, 1e-3, 60});
            auto lo = run_appendix_b({2, p, 1, 5e-4, 60});
            std::size_t n = std::min(hi.log_a.size(), lo.log_a.size());
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(lo.log_a[i] <= hi.log_a[i]);
                CHECK(lo.log_b[i] <= hi.log_b[i]);
            }
        }
    }
    CHECK_THROWS_AS(run_appendix_b({1, 3.5, 1, 1e-6}), Error);
    CHECK_THROWS_AS(run_appendix_b({2, 2.0, 1, 1e-6}), Error);
    CHECK_THROWS_AS(run_appendix_b({2, 3.5, 1, 1.0}), Error);
}

TEST_CASE("threshold scan") {
    std::vector<double> ps;
    for (int i = 0; i <= 40; ++i) ps.push_back(2.5 + 0.05 * i);
    const std::vector<double> a0s{1e-2, 1e-4, 1e-8, 1e-16, 1e-32, 1e-64};
    for (int d : {2, 3}) {
        auto s = threshold_scan(d, 1.0, a0s, ps);
        CAPTURE(d);
        CHECK(s.frontier_ok());
        // nonincreasing toward p*
        double prev = INFINITY;
        for (double f : s.frontier)
            if (!std::isnan(f)) {
                CHECK(f <= prev);
                CHECK(f > critical_exponent(d));
                prev = f;
            }
        CHECK(prev <= critical_exponent(d) + 0.05 + 1e-12);
    }
    auto s2 = threshold_scan(2, 1.0, a0s, ps);
    for (std::size_t ia = 1; ia < 4; ++ia)
        for (std::size_t ip = 0; ip < ps.size() && ps[ip] <= 2.95 + 1e-12; ++ip)
            CHECK(s2.at(ia, ip).verdict != Verdict::Converges);
    std::size_t i32 = 14;  // p = 3.2
    REQUIRE(ps[i32] == doctest::Approx(3.2));
    CHECK(s2.at(2, i32).verdict == Verdict::Converges);

    auto path = (std::filesystem::temp_directory_path() / "pmd_scan.csv").string();
    s2.write_csv(path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "d,p,a0,verdict,final_log_a");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == int(ps.size() * a0s.size()));
    std::filesystem::remove(path);
}
