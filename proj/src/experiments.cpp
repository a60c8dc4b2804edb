#include "pmdlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "pmdlab/barriers.hpp"
#include "pmdlab/diagnostics.hpp"
#include "pmdlab/recurrences.hpp"
#include "pmdlab/solver.hpp"

#ifndef PMDLAB_VERSION
#define PMDLAB_VERSION "dev"
#endif

namespace pmd {

std::string version() { return PMDLAB_VERSION; }

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw Error("config: empty key");
    if (value.find('\n') != std::string::npos) throw Error("config: value of '" + key + "' spans lines");
    kv_[key] = value;
}

void RunConfig::apply(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error("override '" + assignment + "': expected key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw Error("config: missing key '" + key + "'");
    return it->second;
}

double RunConfig::number(const std::string& key) const {
    try {
        return parse_double(get(key));
    } catch (const Error& e) {
        throw Error("config key '" + key + "': " + e.what());
    }
}

int RunConfig::integer(const std::string& key) const {
    double x = number(key);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw Error("config key '" + key + "': expected an integer");
    return int(x);
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(get(key), ',')) {
        try {
            out.push_back(parse_double(item));
        } catch (const Error& e) {
            throw Error("config key '" + key + "': " + e.what());
        }
    }
    if (out.empty()) throw Error("config key '" + key + "': empty list");
    return out;
}

std::string RunConfig::text() const {
    std::string s;
    for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
    return s;
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "# pmdlab run config\n" << text();
}

// ---------------------------------------------------------------- report

bool Report::passed() const {
    return !criteria.empty() &&
           std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; });
}

const Criterion& Report::criterion(const std::string& name) const {
    for (const auto& c : criteria)
        if (c.name == name) return c;
    throw Error("report " + id + ": no criterion '" + name + "'");
}

std::string Report::text() const {
    std::ostringstream os;
    os << id << ": " << (passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& c : criteria) os << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
    for (const auto& n : notes) os << "  note: " << n << '\n';
    for (const auto& a : artifacts) os << "  wrote " << a << '\n';
    return os.str();
}

// ---------------------------------------------------------------- plumbing

namespace {

std::string num(double x) { return format_double(x); }

class Csv {
public:
    Csv(const std::string& path, const std::string& header) : os_(path) {
        if (!os_) throw Error("cannot write " + path);
        os_ << header << '\n';
    }
    template <class... T>
    void row(const T&... cols) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cols), first = false), ...);
        os_ << '\n';
    }

private:
    static std::string cell(double x) { return num(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(const std::string& x) { return x; }
    static std::string cell(const char* x) { return x; }
    std::ofstream os_;
};

struct Context {
    std::string id;
    std::filesystem::path out;
    Report* report;

    std::string path(const std::string& name) {
        auto p = (out / name).string();
        report->artifacts.push_back(p);
        return p;
    }
    void check(const std::string& name, bool ok, const std::string& detail) {
        report->criteria.push_back({name, ok, detail});
    }
    void note(const std::string& s) { report->notes.push_back(s); }

    template <class F>
    auto stage(const std::string& name, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            throw Error(id + ": stage '" + name + "' failed: " + e.what());
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Reproducible uniform [0, 1) from the raw engine (distribution objects differ
// between standard libraries).
double uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

StepControl step_control(const RunConfig& c) {
    StepControl ctl;
    ctl.cfl_diffusion = c.number("cfl.diffusion");
    ctl.cfl_advection = c.number("cfl.advection");
    ctl.validate();
    return ctl;
}

Point point_from(const std::vector<std::string>& parts, int dim) {
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = parse_double(parts[a]);
    return p;
}

// "x;y" probe points and "cyl:x;y;t;r;c" cylinders, comma separated.
Observers parse_observers(const std::string& spec, int dim) {
    Observers obs;
    if (trim(spec).empty()) return obs;
    for (const auto& item : split(spec, ',')) {
        bool cyl = item.rfind("cyl:", 0) == 0;
        auto parts = split(cyl ? item.substr(4) : item, ';');
        std::size_t want = dim + (cyl ? 3 : 0);
        if (parts.size() != want)
            throw Error("observers: '" + item + "' needs " + std::to_string(want) + " ';'-separated numbers");
        Point x = point_from(parts, dim);
        if (cyl) {
            if (obs.cylinder) throw Error("observers: at most one cylinder");
            obs.cylinder = ParabolicCylinder(x, parse_double(parts[dim]), parse_double(parts[dim + 1]),
                                             parse_double(parts[dim + 2]));
        } else {
            obs.probes.push_back(x);
        }
    }
    return obs;
}

ScalarField normalized(ScalarField u, double mass) {
    double I = u.integral();
    if (!(I > 0)) throw Error("initial data has no mass on the grid");
    for (auto& v : u.values()) v *= mass / I;
    return u;
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// ---------------------------------------------------------------- E1

void run_e1(const RunConfig& c, Context& ctx) {
    const int d = c.integer("dimension");
    const double m = c.number("m"), mass = c.number("mass"), L = c.number("grid.extent");
    const double t0 = c.number("t_start"), t1 = c.number("t_end");
    auto ns = c.numbers("grid.n");
    if (ns.size() < 2) throw Error("E1: grid.n needs at least two resolutions");
    const StepControl ctl = step_control(c);

    if (d == 1 && m == 2) {
        // closed forms for m = 2, d = 1: C = (sqrt3/8)^{2/3} M^{2/3}, k = 1/12
        double C = std::pow(std::sqrt(3.0) / 8, 2.0 / 3) * std::pow(mass, 2.0 / 3);
        double err = std::abs(barenblatt_constant(m, d, mass) / C - 1);
        double prof = std::abs(barenblatt_oracle(m, d, mass, {0.5, 0, 0}, 1) - (C - 0.25 / 12));
        ctx.check("oracle constants C = (sqrt3/8)^(2/3), k = 1/12", err <= 1e-12 && prof <= 1e-12,
                  "C=" + num(C) + " rel.err=" + num(err));
    }

    std::vector<double> errs;
    Csv table(ctx.path("e1_errors.csv"), "n,h,l1_error,order");
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const int n = int(ns[k]);
        double e = ctx.stage("solve n=" + std::to_string(n), [&] {
            Grid g = Grid::box(d, n, L);
            auto u0 = ScalarField::sample(g, [&](const Point& x) { return barenblatt_oracle(m, d, mass, x, t0); });
            Observers obs = parse_observers(c.get("observers"), d);
            obs.stride = c.integer("record_stride");
            auto res = run_until(SolverState::make(u0, m, 0, DriftSpec{}, t0), t1, ctl, obs);
            res.series.write_csv(ctx.path("e1_series_n" + std::to_string(n) + ".csv"));
            std::vector<double> w(g.cell_count());
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = std::abs(res.state.u[i] - barenblatt_oracle(m, d, mass, g.center(i), t1)) * g.cell_volume(i);
            return pairwise_sum(w);
        });
        double order = k == 0 ? NAN : std::log(errs.back() / e) / std::log(ns[k] / ns[k - 1]);
        errs.push_back(e);
        table.row(n, 2 * L / n, e, order);
    }
    const std::size_t K = errs.size();
    double order = std::log(errs[K - 2] / errs[K - 1]) / std::log(ns[K - 1] / ns[K - 2]);
    ctx.check("observed L1 order >= 0.8", order >= 0.8, "order=" + num(order));
    ctx.check("L1 error <= 2% at the finest grid", errs.back() <= 0.02 * mass,
              "error=" + num(errs.back()) + " at n=" + num(ns.back()));
}

// ---------------------------------------------------------------- E2

void run_e2(const RunConfig& c, Context& ctx) {
    const int d = c.integer("dimension"), n = c.integer("grid.n"), every = c.integer("record_every");
    const double m = c.number("m"), mass = c.number("mass"), L = c.number("grid.extent"), t_end = c.number("t_end");
    const double cq = c.number("drift.c");
    if (every < 1) throw Error("E2: record_every must be positive");
    const StepControl ctl = step_control(c);
    QuadraticPotential phi(cq);

    auto target = ctx.stage("stationary profile", [&] { return stationary_profile(phi, m, mass, Grid::box(d, n, L)); });
    if (d == 1 && m == 2) {
        double closed = std::pow(3 * mass * std::sqrt(cq) / (4 * std::sqrt(2.0)), 2.0 / 3);
        double err = std::abs(target.C - closed);
        ctx.check("C(M) matches (3 M sqrt(c)/(4 sqrt2))^(2/3) to 1e-6", err <= 1e-6,
                  "C=" + num(target.C) + " closed=" + num(closed));
    }

    const Grid& g = target.rho.grid();
    auto u0 = normalized(ScalarField::sample(g,
                                             [&](const Point& x) {
                                                 for (int a = 0; a < d; ++a)
                                                     if (std::abs(x[a] - 0.5) >= 0.5) return 0.0;
                                                 return 1.0;
                                             }),
                         mass);
    DriftSpec V{CustomDrift{[&](const Point& x) { return phi.gradient(x, d); }}};
    std::vector<double> ts, dist;
    SolverState st = ctx.stage("setup", [&] { return SolverState::make(u0, m, 0, V); });
    Csv series(ctx.path("e2_distance.csv"), "step,t,sup_distance,mass");
    auto record = [&](long k) {
        ts.push_back(st.t);
        dist.push_back(sup_distance(st.u, target.rho));
        series.row(k, st.t, dist.back(), st.mass());
    };
    ctx.stage("solve", [&] {
        long k = 0;
        record(0);
        while (st.t < t_end) {
            double dt = stable_dt(st, ctl);
            bool last = st.t + dt >= t_end;
            advance(st, last ? t_end - st.t : dt, ctl);
            if (last) st.t = t_end;
            ++k;
            if (k % every == 0 || last) record(k);
        }
    });
    {
        Csv prof(ctx.path("e2_profile.csv"), "cell,u,rho");
        for (std::size_t i = 0; i < g.cell_count(); ++i) prof.row(i, st.u[i], target.rho[i]);
    }
    ctx.check("sup distance to rho_M <= 1e-2 at the end", dist.back() <= 1e-2, "distance=" + num(dist.back()));
    bool mono = true;
    for (std::size_t k = dist.size() / 2 + 1; k < dist.size(); ++k) mono = mono && dist[k] <= dist[k - 1] + 1e-12;
    ctx.check("sup distance monotone over the last half", mono, std::to_string(dist.size()) + " records");
}

// ---------------------------------------------------------------- E3

void run_e3(const RunConfig& c, Context& ctx) {
    const int d = c.integer("dimension");
    const double m = c.number("m"), mass = c.number("mass"), q = c.number("norm.q");
    auto ks = c.numbers("sweep.loglog");
    std::vector<double> peaks, norms;
    Csv sweep(ctx.path("e3_sweep.csv"), "loglog_A,A,C,peak,drift_norm");
    Csv prof(ctx.path("e3_profiles.csv"), "loglog_A,r,rho");
    for (double k : ks) {
        const double A = std::exp(std::exp(k));
        ctx.stage("stationary profile loglog A=" + num(k), [&] {
            LogLogPotential phi(A, d);
            double C = stationary_constant(phi, m, d, mass);
            peaks.push_back(std::pow(C, 1 / (m - 1)));
            norms.push_back(radial_lp_logq_norm(phi, d, d, q));
            sweep.row(k, A, C, peaks.back(), norms.back());
            const double alpha = (m - 1) / m;
            for (double e = std::floor(-std::log10(A)) - 1; e <= 1; e += 0.25) {
                double r = std::pow(10.0, e), b = C - alpha * phi.value(r);
                prof.row(k, r, b > 0 ? std::pow(b, 1 / (m - 1)) : 0.0);
            }
        });
    }
    bool inc = true;
    for (std::size_t i = 1; i < peaks.size(); ++i) inc = inc && peaks[i] > peaks[i - 1];
    ctx.check("stationary peak strictly increasing in A", inc, "peaks=" + num(peaks.front()) + ".." + num(peaks.back()));
    double ratio = peaks.back() / peaks.front();
    ctx.check("last/first peak ratio >= 1.5", ratio >= 1.5, "ratio=" + num(ratio));
    auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
    double var = (*hi - *lo) / *lo;
    ctx.check("drift L^d log^q norm varies by <= 10%", var <= 0.10, "variation=" + num(var));
}

// ---------------------------------------------------------------- E4

void run_e4(const RunConfig& c, Context& ctx) {
    const int d = c.integer("dimension"), n = c.integer("grid.n");
    const double m = c.number("m"), R = c.number("profile.radius"), delta = c.number("delta");
    const double L = c.number("grid.extent"), T = c.number("t_end");
    if (!(R > 0 && R <= 1)) throw Error("E4: profile.radius must lie in (0, 1]");
    if (!(L > R)) throw Error("E4: grid.extent must exceed profile.radius");
    auto As = c.numbers("sweep.A");
    const StepControl ctl = step_control(c);
    // rho = (C - (m-1)/m |x|^2)_+^{1/(m-1)} supported in |x| <= R; rho(Ax) is stationary for Phi_A.
    const double C = (m - 1) / m * R * R;
    const double mass1 = stationary_mass(QuadraticRescaledPotential(1, d), m, d, C);

    std::vector<double> quot, sups, norms;
    Csv table(ctx.path("e4_sweep.csv"), "A,mass,steps,u_center,u_edge,quotient,sup_u,rel_distance,drift_norm");
    for (double A : As) {
        ctx.stage("solve A=" + num(A), [&] {
            QuadraticRescaledPotential phi(A, d);
            const double massA = mass1 * std::pow(A, -d);
            Grid g = Grid::box(d, n, L / A);
            auto target = stationary_profile(phi, m, massA, g);
            const double w = 0.5 * R / A;
            Point x0{0.25 * R / A, 0, 0};
            auto u0 = normalized(ScalarField::sample(g,
                                                     [&](const Point& x) {
                                                         double r2 = 0;
                                                         for (int a = 0; a < d; ++a) r2 += (x[a] - x0[a]) * (x[a] - x0[a]);
                                                         double b = 1 - r2 / (w * w);
                                                         return b > 0 ? b * b : 0.0;
                                                     }),
                                 massA);
            auto st = SolverState::make(u0, m, 0, DriftSpec{QuadraticRescaledDrift{A}});
            double sup = st.u.max();
            long steps = 0;
            const double t_end = T / (A * A);
            while (st.t < t_end) {
                double dt = stable_dt(st, ctl);
                bool last = st.t + dt >= t_end;
                advance(st, last ? t_end - st.t : dt, ctl);
                if (last) st.t = t_end;
                ++steps;
                sup = std::max(sup, st.u.max());
            }
            Point edge{R / A, 0, 0};
            double uc = probe(st.u, {0, 0, 0}), ue = probe(st.u, edge);
            quot.push_back(std::abs(uc - ue) / std::pow(R / A, delta));
            sups.push_back(sup);
            norms.push_back(radial_lp_logq_norm(phi, d, d, 0));
            double rel = sup_distance(st.u, target.rho) / target.rho.max();
            table.row(A, massA, steps, uc, ue, quot.back(), sup, rel, norms.back());
        });
    }
    bool grows = quot.size() >= 2;
    double worst = INFINITY;
    for (std::size_t i = 1; i < quot.size(); ++i) {
        worst = std::min(worst, quot[i] / quot[i - 1]);
        grows = grows && quot[i] >= 1.2 * quot[i - 1];
    }
    ctx.check("delta-Hoelder quotient grows by >= 1.2 between sweep values", grows, "min ratio=" + num(worst));
    auto [slo, shi] = std::minmax_element(sups.begin(), sups.end());
    ctx.check("sup u uniformly bounded across the sweep", *shi <= 1.01 * *slo,
              "sup in [" + num(*slo) + ", " + num(*shi) + "]");
    auto [nlo, nhi] = std::minmax_element(norms.begin(), norms.end());
    ctx.check("||grad Phi_A||_{L^d} independent of A", (*nhi - *nlo) <= 1e-6 * *nlo, "norm=" + num(*nlo));
}

// ---------------------------------------------------------------- E5 / E6

std::string kind_name(BarrierKind k) { return k == BarrierKind::Sub ? "sub" : "super"; }

// c_s = 1/C0 (proportional to eps^s) keeps c_s z^s <= k(t), so the two barriers
// stay ordered; capped by half the subsolution bound.
BarrierParams window_params(double s, double eps, double r, double m, int dim) {
    auto p = BarrierParams::make(s, eps, r, m, dim);
    return BarrierParams::make(s, eps, r, m, dim, std::min(0.5 * p.cs_cap, 1 / p.C0));
}

void run_divfree(const RunConfig& c, Context& ctx, int dim) {
    const double s = c.number("s"), r = c.number("r"), delta = c.number("delta"), m = c.number("m");
    const double Z = c.number("window.Z");
    const int n = c.integer("grid.n");
    const auto seed = std::uint64_t(c.integer("seed"));
    if (!(delta > 2 * s)) throw Error("delta must exceed 2 s");
    if (!(Z >= 1)) throw Error("window.Z must be at least 1");
    auto epss = c.numbers("sweep.eps");
    const StepControl ctl = step_control(c);
    const std::string tag = dim == 2 ? "e5" : "e6";

    // certification
    bool cert_ok = true;
    std::size_t checks = 0;
    {
        Csv crit(ctx.path(tag + "_critical.csv"), "s,dim,value,gradient_norm,max_hessian_rel_error,r_s,passed");
        Csv sign(ctx.path(tag + "_certification.csv"), "s,eps,dim,kind,samples,skipped,max_violation,passed");
        const int samples = c.integer("cert.samples"), per_radius = c.integer("cert.samples_per_radius");
        for (double sc : c.numbers("cert.s")) {
            auto cc = ctx.stage("critical point s=" + num(sc),
                                [&] { return critical_point_certificate(sc, dim, per_radius, seed); });
            crit.row(sc, dim, cc.value, norm(cc.gradient), cc.max_hessian_rel_error, cc.r_s,
                     std::string(cc.passed() ? "PASS" : "FAIL"));
            cert_ok = cert_ok && cc.passed();
            for (double ec : c.numbers("cert.eps"))
                for (auto kind : {BarrierKind::Sub, BarrierKind::Super}) {
                    auto rep = ctx.stage("sign check s=" + num(sc) + " eps=" + num(ec), [&] {
                        return residual_sign_check(window_params(sc, ec, r, m, dim), kind, samples, seed);
                    });
                    sign.row(sc, ec, dim, kind_name(kind), rep.samples, rep.skipped, rep.residual().max_violation,
                             std::string(rep.passed() ? "PASS" : "FAIL"));
                    cert_ok = cert_ok && rep.passed();
                    ++checks;
                }
        }
    }
    ctx.check("barrier certification (" + std::to_string(dim) + "D)", cert_ok,
              std::to_string(checks) + " sign checks at " + c.get("cert.samples") + " samples");

    // self-similar window z(t) from 4 eps Z down to 4 eps, started from the subsolution
    std::vector<double> quot, lows, sups, drift, order;
    Csv probes(ctx.path(tag + "_probes.csv"),
               "eps,t_start,T,steps,v_upper,v_lower,sup_v,quotient,subsolution_upper,mass_drift");
    for (double eps : epss) {
        ctx.stage("solve eps=" + num(eps), [&] {
            auto p = window_params(s, eps, r, m, dim);
            const double z1 = 4 * eps * Z;
            if (!(z1 < 1)) throw Error("window start 4 eps Z must be below 1");
            const double t1 = p.M * (1 - std::pow(z1, 2 - s)) / (2 - s);
            Grid g = Grid::box(dim, n, 1.25 * z1);
            auto vsub = ScalarField::sample(g, [&](const Point& x) { return subsolution_eval(p, x, t1); });
            double gap = 0;
            for (std::size_t i = 0; i < g.cell_count(); ++i)
                gap = std::max(gap, vsub[i] - supersolution_eval(p, g.center(i), t1));
            order.push_back(gap);
            auto u0 = pressure_inverse(vsub, m);
            VectorField V = (dim == 2 ? DriftSpec{DivFree2D{s, eps}} : DriftSpec{DivFree3D{s, eps}}).sample_faces(g);
            V *= -1.0;
            Point up{0, 0, 0}, lo{0, 0, 0};
            up[dim - 1] = 4 * eps;
            lo[dim - 1] = -4 * eps;
            auto res = run_until(SolverState::make(u0, m, 0, V, t1), p.T, ctl,
                                 Observers{{up, lo}, {}, c.integer("record_stride")});
            res.series.write_csv(ctx.path(tag + "_series_eps" + num(eps) + ".csv"));
            auto v = pressure_transform(res.state.u, m);
            double vu = probe(v, up), vl = probe(v, lo);
            quot.push_back(std::abs(vu - vl) / std::pow(8 * eps, delta));
            lows.push_back(vl);
            sups.push_back(v.max());
            drift.push_back(std::abs(res.state.mass() / res.state.initial_mass - 1));
            probes.row(eps, t1, p.T, res.steps, vu, vl, v.max(), quot.back(), subsolution_eval(p, up, p.T),
                       drift.back());
        });
    }
    double gap = *std::max_element(order.begin(), order.end());
    ctx.check("initial pressure lies below the supersolution", gap <= 0, "max(v_sub - v_super)=" + num(gap));
    // sweep order: decreasing eps
    bool trend = quot.size() >= 2;
    std::string ratios;
    for (std::size_t i = 1; i < quot.size(); ++i) {
        trend = trend && epss[i] < epss[i - 1] && quot[i] > quot[i - 1];
        ratios += (i > 1 ? " " : "") + num(quot[i] / quot[i - 1]);
    }
    ctx.check("probe quotient increases as eps decreases", trend, "ratios " + ratios);
    bool low = true;
    double worst = 0;
    for (std::size_t i = 0; i < lows.size(); ++i) {
        low = low && lows[i] <= 1e-6 * sups[i];
        worst = std::max(worst, lows[i] / sups[i]);
    }
    ctx.check("lower probe <= 1e-6 sup v", low, "max v_lower/sup v=" + num(worst));
    double dmax = *std::max_element(drift.begin(), drift.end());
    ctx.check("mass conserved to 1e-9", dmax <= 1e-9, "max relative drift=" + num(dmax));
    ctx.note("v_upper is compared with the subsolution value in " + tag +
             "_probes.csv; upwind numerical diffusion lowers it (not asserted)");
}

// ---------------------------------------------------------------- E7

void run_e7(const RunConfig& c, Context& ctx) {
    auto t0 = std::chrono::steady_clock::now();
    bool ident = critical_exponent(2) == 3.0 && critical_exponent(3) == 3.8;
    for (int d : {2, 3, 4}) ident = ident && std::abs(appendix_b_exponent(d, critical_exponent(d)) - 1) <= 1e-14;
    ctx.check("threshold identity p* = d + 4/(d+2)", ident,
              "p*(2)=" + num(critical_exponent(2)) + " p*(3)=" + num(critical_exponent(3)));

    AppendixBConfig b;
    b.d = c.integer("appb.d");
    b.p = c.number("appb.p");
    b.C1 = c.number("appb.C1");
    b.a0 = c.number("appb.a0");
    b.N = c.integer("appb.N");
    auto rb = ctx.stage("appendix B", [&] { return run_appendix_b(b); });
    {
        Csv orbit(ctx.path("e7_appendix_b.csv"), "n,log_a,log_b");
        for (std::size_t i = 0; i < rb.log_a.size(); ++i) orbit.row(i, rb.log_a[i], rb.log_b[i]);
    }
    ctx.check("appendix B orbit converges at (d, p, a0) = (" + std::to_string(b.d) + ", " + num(b.p) + ", " + num(b.a0) + ")",
              rb.verdict == Verdict::Converges, to_string(rb.verdict) + " after " + std::to_string(rb.steps) + " steps");

    AppendixAConfig a;
    a.C0 = c.number("appa.C0");
    a.C1 = c.number("appa.C1");
    a.a = c.number("appa.a");
    a.M = c.number("appa.M");
    a.K = c.integer("appa.K");
    auto ra = ctx.stage("appendix A", [&] { return run_appendix_a(a); });
    ra.write_csv(ctx.path("e7_appendix_a.csv"));
    ctx.check("appendix A normalized iterates plateau below the recorded bound", ra.bounded(),
              "sup=" + num(ra.sup_normalized) + " bound=" + num(ra.recorded_bound) + " plateau from k=" +
                  std::to_string(ra.plateau_from));
    AppendixAConfig a0;
    a0.C1 = 0;
    a0.a = 0;
    a0.K = 3;
    auto r0 = ctx.stage("appendix A, C1 = 0", [&] { return run_appendix_a(a0); });
    ctx.check("c_3 = 26 for C1 = 0, a = 0", r0.c[3] == 26, "c_3=" + num(r0.c[3]));

    std::vector<double> ps;
    const double p0 = c.number("scan.p_min"), p1 = c.number("scan.p_max"), dp = c.number("scan.p_step");
    if (!(dp > 0 && p1 >= p0)) throw Error("E7: bad scan range");
    for (int i = 0; p0 + i * dp <= p1 + 1e-9; ++i) ps.push_back(p0 + i * dp);
    bool front = true;
    std::string fr;
    for (int d : {2, 3}) {
        auto scan = ctx.stage("threshold scan d=" + std::to_string(d),
                              [&] { return threshold_scan(d, b.C1, c.numbers("scan.a0"), ps, b.N); });
        scan.write_csv(ctx.path("e7_scan_d" + std::to_string(d) + ".csv"));
        front = front && scan.frontier_ok();
        double best = NAN;
        for (double f : scan.frontier)
            if (!std::isnan(f)) best = std::isnan(best) ? f : std::min(best, f);
        fr += (d == 2 ? "" : " ") + std::string("d=") + std::to_string(d) + ":" + num(best);
    }
    ctx.check("convergence frontier monotone in a0 and above p* - 0.05", front, "least converging p " + fr);
    double secs = seconds_since(t0);
    ctx.check("runtime <= 10 s", secs <= 10, num(std::round(secs * 100) / 100) + " s");
}

// ---------------------------------------------------------------- E8

struct RandomCase {
    double m;
    DriftSpec drift;
    std::string label;
    ScalarField u0;
};

RandomCase random_case(std::uint64_t seed, const Grid& g) {
    std::mt19937_64 rng(seed);
    RandomCase rc;
    rc.m = 1.2 + 1.8 * uniform(rng);
    switch (rng() % 3) {
    case 0: {
        double s = 0.1 + 0.8 * uniform(rng), eps = 0.01 + 0.09 * uniform(rng);
        rc.drift = g.dim() == 2 ? DriftSpec{DivFree2D{s, eps}} : DriftSpec{DivFree3D{s, eps}};
        rc.label = "divfree(s=" + num(s) + ";eps=" + num(eps) + ")";
        break;
    }
    case 1: {
        double A = 1 + 3 * uniform(rng);
        rc.drift = DriftSpec{QuadraticRescaledDrift{A}};
        rc.label = "quadratic_rescaled(A=" + num(A) + ")";
        break;
    }
    default: {
        double a1 = 2 * uniform(rng), a2 = 2 * uniform(rng), k1 = 1 + 4 * uniform(rng), k2 = 1 + 4 * uniform(rng);
        double p1 = 6 * uniform(rng), p2 = 6 * uniform(rng);
        rc.drift = DriftSpec{CustomDrift{[=](const Point& x) {
            return Vec{a1 * std::sin(k1 * x[1] + p1), a2 * std::cos(k2 * x[0] + p2), 0};
        }}};
        rc.label = "trig(a1=" + num(a1) + ";a2=" + num(a2) + ")";
    }
    }
    struct Bump {
        Point c;
        double w, h;
    };
    std::vector<Bump> bumps(1 + rng() % 3);
    for (auto& b : bumps) {
        for (int a = 0; a < g.dim(); ++a) b.c[a] = -0.5 + uniform(rng);
        b.w = 0.15 + 0.25 * uniform(rng);
        b.h = 0.2 + 0.8 * uniform(rng);
    }
    rc.u0 = ScalarField::sample(g, [&](const Point& x) {
        double u = 0;
        for (const auto& b : bumps) {
            double r2 = 0;
            for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - b.c[a]) * (x[a] - b.c[a]);
            double q = 1 - r2 / (b.w * b.w);
            if (q > 0) u += b.h * q * q;
        }
        return u;
    });
    return rc;
}

void run_e8(const RunConfig& c, Context& ctx) {
    const int d = c.integer("dimension");
    StepControl ctl;
    {
        const int n = c.integer("conservation.grid.n"), steps = c.integer("conservation.steps");
        Csv table(ctx.path("e8_conservation.csv"), "seed,m,drift,steps,relative_mass_drift,min_u");
        double worst = 0, slowest = 0, mn = INFINITY;
        auto seeds = c.numbers("conservation.seeds");
        for (double sd : seeds) {
            ctx.stage("conservation seed " + num(sd), [&] {
                auto t0 = std::chrono::steady_clock::now();
                Grid g = Grid::box(d, n, 1.0);
                auto rc = random_case(std::uint64_t(sd), g);
                auto st = SolverState::make(rc.u0, rc.m, 0, rc.drift);
                double drift = 0, lo = INFINITY;
                for (int k = 0; k < steps; ++k) {
                    advance(st, stable_dt(st, ctl), ctl);
                    lo = std::min(lo, st.u.min());
                    drift = std::max(drift, std::abs(st.mass() - st.initial_mass) / st.initial_mass);
                }
                table.row(sd, rc.m, rc.label, steps, drift, lo);
                worst = std::max(worst, drift);
                mn = std::min(mn, lo);
                slowest = std::max(slowest, seconds_since(t0));
            });
        }
        ctx.check("relative mass drift <= 1e-9 over " + std::to_string(seeds.size()) + " random configs", worst <= 1e-9,
                  "max drift=" + num(worst));
        ctx.check("no negative cell", mn >= 0, "min u=" + num(mn));
        ctx.check("runtime <= 60 s per config", slowest <= 60, num(std::round(slowest * 100) / 100) + " s max");
    }
    {
        const int n = c.integer("comparison.grid.n"), steps = c.integer("comparison.steps");
        const double m = c.number("comparison.m");
        Grid g = Grid::box(d, n, 1.0);
        DriftSpec V{CustomDrift{[](const Point& x) { return Vec{std::sin(3 * x[1]), std::cos(2 * x[0]), 0}; }}};
        std::mt19937_64 rng(std::uint64_t(c.integer("comparison.data_seed")));
        ScalarField lo(g), hi(g), cross(g);
        for (std::size_t i = 0; i < g.cell_count(); ++i) {
            Point x = g.center(i);
            double r2 = 0, q2 = (x[0] - 0.2) * (x[0] - 0.2);
            for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
            for (int a = 1; a < d; ++a) q2 += x[a] * x[a];
            double b = std::max(0.0, 0.6 - r2);
            lo[i] = b * uniform(rng);
            hi[i] = lo[i] + 0.3 * b * uniform(rng);
            cross[i] = std::max(0.0, 0.5 - q2);
        }
        StepControl cc{0.45, 0.45, 1e-3};
        auto a = SolverState::make(lo, m, 0, V), b = SolverState::make(hi, m, 0, V), x = SolverState::make(cross, m, 0, V);
        std::vector<ScalarField> hb{b.u}, hx{x.u};
        std::vector<double> order{0.0};
        ctx.stage("comparison", [&] {
            for (int k = 0; k < steps; ++k) {
                // a common dt keeps the three runs on the same time levels
                double dt = std::min({stable_dt(a, cc), stable_dt(b, cc), stable_dt(x, cc)});
                advance(a, dt, cc);
                advance(b, dt, cc);
                advance(x, dt, cc);
                double mx = b.u.max(), w = 0;
                for (std::size_t i = 0; i < g.cell_count(); ++i) w = std::max(w, (a.u[i] - b.u[i]) / mx);
                order.push_back(w);
                hb.push_back(b.u);
                hx.push_back(x.u);
            }
        });
        auto cs = l1_contraction_probe(hx, hb);
        Csv table(ctx.path("e8_contraction.csv"), "step,l1_positive_part,order_violation");
        for (std::size_t k = 0; k < cs.values.size(); ++k) table.row(k, cs.values[k], order[k]);
        double worst = *std::max_element(order.begin(), order.end());
        ctx.check("ordered data stay ordered within 1e-8 max u", worst <= 1e-8, "max (u1-u2)/max u=" + num(worst));
        ctx.check("int (u1 - u2)_+ non-increasing within 1e-8", cs.nonincreasing,
                  "from " + num(cs.values.front()) + " to " + num(cs.values.back()));
    }
}

// ---------------------------------------------------------------- registry

struct Entry {
    ExperimentInfo info;
    std::vector<std::pair<std::string, std::string>> defaults;
    std::function<void(const RunConfig&, Context&)> run;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> r = [] {
        const std::string cert_s = "0.1,0.3,0.5", cert_eps = "0.02,0.01";
        auto divfree = [&](int dim) {
            return std::vector<std::pair<std::string, std::string>>{
                {"s", "0.2"},
                {"r", "0.1"},
                {"delta", "0.5"},
                {"m", "2"},
                {"sweep.eps", "0.02,0.01,0.005"},
                {"window.Z", "4"},
                {"grid.n", dim == 2 ? "256" : "64"},
                {"cfl.diffusion", "0.45"},
                {"cfl.advection", "0.45"},
                {"record_stride", "50"},
                {"cert.s", cert_s},
                {"cert.eps", cert_eps},
                {"cert.samples", "100000"},
                {"cert.samples_per_radius", "10000"},
            };
        };
        return std::vector<Entry>{
            {{"E1_barenblatt", "Barenblatt convergence, V = 0"},
             {{"dimension", "1"},
              {"m", "2"},
              {"mass", "1"},
              {"grid.n", "200,400"},
              {"grid.extent", "3"},
              {"t_start", "0.1"},
              {"t_end", "1"},
              {"cfl.diffusion", "0.45"},
              {"cfl.advection", "0.45"},
              {"observers", "0,0.5"},
              {"record_stride", "200"}},
             run_e1},
            {{"E2_stationary", "attraction to the stationary profile, V = grad c|x|^2"},
             {{"dimension", "1"},
              {"m", "2"},
              {"mass", "1"},
              {"drift.c", "1"},
              {"grid.n", "800"},
              {"grid.extent", "1.5"},
              {"t_end", "4"},
              {"cfl.diffusion", "0.9"},
              {"cfl.advection", "0.1"},
              {"record_every", "5000"}},
             run_e2},
            {{"E3_unbounded", "stationary peaks under log-log potentials"},
             {{"dimension", "2"}, {"m", "1.7"}, {"mass", "1"}, {"sweep.loglog", "2,3,4"}, {"norm.q", "0.9"}},
             run_e3},
            {{"E4_no_modulus", "Hoelder quotient under rescaled quadratic potentials"},
             {{"dimension", "2"},
              {"m", "2"},
              {"profile.radius", "0.5"},
              {"delta", "0.5"},
              {"sweep.A", "4,8,16,32"},
              {"grid.n", "64"},
              {"grid.extent", "1"},
              {"t_end", "4"},
              {"cfl.diffusion", "0.45"},
              {"cfl.advection", "0.45"}},
             run_e4},
            {{"E5_divfree2d", "barriers and Hoelder trend, 2D cone drift"},
             divfree(2),
             [](const RunConfig& c, Context& ctx) { run_divfree(c, ctx, 2); }},
            {{"E6_divfree3d", "barriers and Hoelder trend, 3D cone drift"},
             divfree(3),
             [](const RunConfig& c, Context& ctx) { run_divfree(c, ctx, 3); }},
            {{"E7_recurrences", "iteration recurrences and the integrability threshold"},
             {{"appa.C0", "1"},
              {"appa.C1", "1"},
              {"appa.a", "0"},
              {"appa.M", "2"},
              {"appa.K", "1000"},
              {"appb.d", "2"},
              {"appb.p", "3.5"},
              {"appb.C1", "1"},
              {"appb.a0", "1e-6"},
              {"appb.N", "5000"},
              {"scan.p_min", "2.5"},
              {"scan.p_max", "4.5"},
              {"scan.p_step", "0.05"},
              {"scan.a0", "1e-2,1e-4,1e-8,1e-16,1e-32,1e-64"}},
             run_e7},
            {{"E8_comparison_contraction", "conservation, comparison and L1 contraction"},
             {{"dimension", "2"},
              {"conservation.grid.n", "128"},
              {"conservation.steps", "1000"},
              {"conservation.seeds", "0,1,2,3,4,5,6,7,8,9"},
              {"comparison.m", "1.5"},
              {"comparison.grid.n", "32"},
              {"comparison.steps", "1000"},
              {"comparison.data_seed", "4"}},
             run_e8},
        };
    }();
    return r;
}

const Entry& find_entry(const std::string& id) {
    for (const auto& e : registry())
        if (e.info.id == id) return e;
    throw Error("unknown experiment '" + id + "' (see `list`)");
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_list() {
    static const std::vector<ExperimentInfo> v = [] {
        std::vector<ExperimentInfo> out;
        for (const auto& e : registry()) out.push_back(e.info);
        return out;
    }();
    return v;
}

std::string list_experiments() {
    std::ostringstream os;
    for (const auto& e : experiment_list()) {
        os << e.id;
        for (std::size_t i = e.id.size(); i < 28; ++i) os << ' ';
        os << e.title << '\n';
    }
    return os.str();
}

RunConfig default_config(const std::string& id) {
    const auto& e = find_entry(id);
    RunConfig c;
    c.set("experiment", id);
    c.set("version", version());
    c.set("seed", "1");
    c.set("out_dir", "out/" + id);
    for (const auto& [k, v] : e.defaults) c.set(k, v);
    return c;
}

Report run_config(const RunConfig& cfg) {
    const std::string id = cfg.get("experiment");
    const auto& entry = find_entry(id);
    RunConfig c = default_config(id);
    for (const auto& [k, v] : cfg.entries()) {
        if (!c.has(k)) throw Error("config: unknown key '" + k + "' for " + id);
        c.set(k, v);
    }
    c.set("version", version());

    Report rep;
    rep.id = id;
    Context ctx{id, c.get("out_dir"), &rep};
    std::error_code ec;
    std::filesystem::create_directories(ctx.out, ec);
    if (ec) throw Error(id + ": cannot create " + ctx.out.string() + ": " + ec.message());
    c.save((ctx.out / "config.txt").string());

    auto t0 = std::chrono::steady_clock::now();
    entry.run(c, ctx);
    rep.seconds = seconds_since(t0);
    std::ofstream out(ctx.out / "report.txt");
    out << rep.text();
    return rep;
}

Report run_experiment(const std::string& id, const std::vector<std::string>& overrides) {
    RunConfig c;
    c.set("experiment", id);
    for (const auto& o : overrides) c.apply(o);
    return run_config(c);
}

Report replay(const std::string& config_path, const std::vector<std::string>& overrides, std::ostream& warn) {
    RunConfig c = RunConfig::load(config_path);
    if (!c.has("experiment")) throw Error(config_path + ": no 'experiment' key");
    if (c.has("version") && c.get("version") != version())
        warn << "warning: " << config_path << " was written by pmdlab " << c.get("version") << ", running "
             << version() << "; outputs may differ\n";
    for (const auto& o : overrides) c.apply(o);
    return run_config(c);
}

}  // namespace pmd
