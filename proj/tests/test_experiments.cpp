#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pmdlab/experiments.hpp"
#include "pmdlab/grid.hpp"

using namespace pmd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("pmd_exp_" + name);
    fs::remove_all(p);
    return p;
}

// cheap E5 variant for plumbing checks
std::vector<std::string> small_e5(const fs::path& out, int seed) {
    return {"grid.n=32",          "sweep.eps=0.02,0.01", "cert.s=0.3", "cert.eps=0.02", "cert.samples=2000",
            "cert.samples_per_radius=500", "seed=" + std::to_string(seed), "out_dir=" + out.string()};
}

}  // namespace

TEST_CASE("registry") {
    const auto& l = experiment_list();
    CHECK(l.size() == 8);
    std::set<std::string> ids;
    for (const auto& e : l) ids.insert(e.id);
    CHECK(ids == std::set<std::string>{"E1_barenblatt", "E2_stationary", "E3_unbounded", "E4_no_modulus", "E5_divfree2d",
                                       "E6_divfree3d", "E7_recurrences", "E8_comparison_contraction"});
    CHECK(list_experiments().find("E8_comparison_contraction") != std::string::npos);
    CHECK_THROWS_AS(default_config("E9_missing"), Error);
    for (const auto& e : l) {
        auto c = default_config(e.id);
        CHECK(c.get("experiment") == e.id);
        CHECK(c.get("version") == version());
    }
}

TEST_CASE("config text") {
    auto c = RunConfig::parse("# comment\n m = 2 \n\ngrid.n=200, 400\nobservers=\n");
    CHECK(c.number("m") == 2);
    CHECK(c.numbers("grid.n") == std::vector<double>{200, 400});
    CHECK(c.get("observers").empty());
    CHECK(RunConfig::parse(c.text()).entries() == c.entries());
    CHECK_THROWS_AS(RunConfig::parse("m 2\n"), Error);
    CHECK_THROWS_AS(c.number("missing"), Error);
    c.apply("m=abc");
    CHECK_THROWS_AS(c.number("m"), Error);
    c.apply("m=2.5");
    CHECK_THROWS_AS(c.integer("m"), Error);
    CHECK_THROWS_AS(c.apply("novalue"), Error);
}

TEST_CASE("unknown keys and failing stages") {
    auto out = scratch("bad");
    CHECK_THROWS_WITH_AS(run_experiment("E1_barenblatt", {"grid.nn=100", "out_dir=" + out.string()}),
                         doctest::Contains("unknown key 'grid.nn'"), Error);
    // a grid below the minimum size aborts inside the solve stage
    CHECK_THROWS_WITH_AS(run_experiment("E1_barenblatt", {"grid.n=2,400", "out_dir=" + out.string()}),
                         doctest::Contains("stage 'solve n=2'"), Error);
    CHECK_THROWS_WITH_AS(run_experiment("E5_divfree2d", {"delta=0.3", "out_dir=" + out.string()}),
                         doctest::Contains("delta must exceed 2 s"), Error);
    fs::remove_all(out);
}

TEST_CASE("E1 run and byte-identical replay") {
    auto a = scratch("e1a"), b = scratch("e1b");
    auto r1 = run_experiment("E1_barenblatt", {"out_dir=" + a.string()});
    CHECK(r1.passed());
    CHECK(r1.criteria.size() == 3);
    CHECK(fs::exists(a / "config.txt"));
    CHECK(fs::exists(a / "report.txt"));

    std::ostringstream warn;
    auto r2 = replay((a / "config.txt").string(), {"out_dir=" + b.string()}, warn);
    CHECK(r2.passed());
    CHECK(warn.str().empty());
    for (const char* f : {"e1_series_n200.csv", "e1_series_n400.csv", "e1_errors.csv"})
        CHECK(slurp(a / f) == slurp(b / f));

    // a config from another version still runs, with a warning
    auto cfg = RunConfig::load((a / "config.txt").string());
    cfg.set("version", "0.0.0-other");
    cfg.set("grid.n", "100,200");
    cfg.save((a / "old.txt").string());
    auto r3 = replay((a / "old.txt").string(), {"out_dir=" + b.string()}, warn);
    CHECK(warn.str().find("0.0.0-other") != std::string::npos);
    CHECK(RunConfig::load((b / "config.txt").string()).get("version") == version());
    CHECK(r3.criteria.size() == 3);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("seed changes certification sampling only") {
    auto a = scratch("seed1"), b = scratch("seed2");
    auto r1 = run_experiment("E5_divfree2d", small_e5(a, 1));
    auto r2 = run_experiment("E5_divfree2d", small_e5(b, 7));
    CHECK(r1.criteria.size() == r2.criteria.size());
    for (const char* f : {"e5_probes.csv", "e5_series_eps0.02.csv", "e5_series_eps0.01.csv"})
        CHECK(slurp(a / f) == slurp(b / f));
    // r_s comes from sampling the ball, so it moves with the seed
    CHECK(slurp(a / "e5_critical.csv") != slurp(b / "e5_critical.csv"));
    CHECK(r1.criterion("barrier certification (2D)").passed);
    CHECK(r2.criterion("barrier certification (2D)").passed);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("fast experiments pass with defaults") {
    for (const char* id : {"E3_unbounded", "E7_recurrences"}) {
        auto out = scratch(id);
        auto r = run_experiment(id, {"out_dir=" + out.string()});
        CAPTURE(r.text());
        CHECK(r.passed());
        for (const auto& a : r.artifacts) CHECK(fs::exists(a));
        fs::remove_all(out);
    }
}
