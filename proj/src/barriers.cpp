#include "pmdlab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "json.hpp"
#include "pmdlab/drift.hpp"

namespace pmd {

// ---------------------------------------------------------------- profiles

double bump_sub(double R) {
    R = std::abs(R);
    if (R >= 1) return 0;
    return std::exp(1 - 1 / (1 - R * R));
}

double bump_sub_d1(double R) {
    double a = std::abs(R);
    if (a >= 1) return 0;
    double q = 1 - R * R;
    return -2 * R / (q * q) * bump_sub(R);
}

double bump_sub_d2(double R) {
    if (std::abs(R) >= 1) return 0;
    double q = 1 - R * R;
    double g = -2 * R / (q * q);
    double dg = -2 / (q * q) - 8 * R * R / (q * q * q);
    return bump_sub(R) * (g * g + dg);
}

namespace {

// Smooth step 0 -> 1 on [0, 1], all derivatives vanish at both ends.
double logistic_step(double t, double* d1 = nullptr, double* d2 = nullptr) {
    if (t <= 0 || t >= 1) {
        if (d1) *d1 = 0;
        if (d2) *d2 = 0;
        return t <= 0 ? 0.0 : 1.0;
    }
    double w = 1 / t - 1 / (1 - t);
    double b = w > 0 ? std::exp(-w) / (1 + std::exp(-w)) : 1 / (1 + std::exp(w));
    double w1 = -1 / (t * t) - 1 / ((1 - t) * (1 - t));
    double w2 = 2 / (t * t * t) - 2 / ((1 - t) * (1 - t) * (1 - t));
    double b1 = -b * (1 - b) * w1;
    if (d1) *d1 = b1;
    if (d2) *d2 = -b1 * (1 - 2 * b) * w1 - b * (1 - b) * w2;
    return b;
}

}  // namespace

double bump_super(double R) {
    R = std::abs(R);
    if (R >= 1) return 1;
    double b = logistic_step(2 * R - 1);
    return (1 - b) * R * R + b;
}

double bump_super_d1(double R) {
    double sg = R < 0 ? -1 : 1;
    R = std::abs(R);
    if (R >= 1) return 0;
    double b1;
    double b = logistic_step(2 * R - 1, &b1);
    return sg * (2 * R * (1 - b) + 2 * b1 * (1 - R * R));
}

double bump_super_d2(double R) {
    R = std::abs(R);
    if (R >= 1) return 0;
    double b1, b2;
    double b = logistic_step(2 * R - 1, &b1, &b2);
    return 2 * (1 - b) - 8 * R * b1 + 4 * b2 * (1 - R * R);
}

double bump_sub_laplacian_cap(int dim, int samples) {
    double cap = 0;
    for (int i = 0; i < samples; ++i) {
        double R = (i + 0.5) / samples;
        double lap = bump_sub_d2(R) + (dim - 1) * bump_sub_d1(R) / R;
        cap = std::max(cap, std::abs(lap));
    }
    return cap;
}

double barrier101_constant(double m, int dim, int samples) {
    double c = 0;
    for (int i = 0; i < samples; ++i) {
        double R = (i + 0.5) / samples;
        double f = bump_super(R), f1 = bump_super_d1(R), f2 = bump_super_d2(R);
        c = std::max(c, ((m - 1) * f * (f2 + (dim - 1) * f1 / R) + f1 * f1) / f);
    }
    return c * (1 + 1e-6);
}

// ---------------------------------------------------------------- parameters

BarrierParams BarrierParams::make(double s, double eps, double r, double m, int dim, std::optional<double> cs) {
    BarrierParams p;
    p.s = s;
    p.eps = eps;
    p.r = r;
    p.m = m;
    p.dim = dim;
    if (dim != 2 && dim != 3) throw Error("barrier: dimension must be 2 or 3");
    if (!(s > 0 && s <= 1)) throw Error("barrier: s must lie in (0, 1]");
    if (!(eps > 0 && eps < 0.25)) throw Error("barrier: eps must lie in (0, 1/4)");
    if (!(m > 1)) throw Error("barrier: m must exceed 1");
    p.M = std::pow(s, dim == 2 ? -1.5 : -4.0 / 3.0);
    p.T = p.M * (1 - std::pow(4 * eps, 2 - s)) / (2 - s);
    p.Cstar = barrier101_constant(m, dim);
    p.Csub = bump_sub_laplacian_cap(dim);
    p.C0 = 2 * p.Cstar * p.M / (r * r) / s * std::pow(4 * eps, -s);
    p.cs_cap = s * r * r / (p.Csub * (m - 1) * p.M);
    p.cs = cs ? *cs : 0.5 * p.cs_cap;
    p.validate();
    return p;
}

void BarrierParams::validate() const {
    const double rmax = dim == 2 ? 0.125 : 1.0 / 9;
    if (!(r > 0 && (dim == 2 ? r <= rmax : r < rmax)))
        throw Error("barrier: r must lie in (0, 1/8] in 2D and (0, 1/9) in 3D");
    if (!(T > 0)) throw Error("barrier: T must be positive");
    if (!(cs > 0)) throw Error("barrier: c_s must be positive");
    if (!(k_scale > 0)) throw Error("barrier: k scale must be positive");
    double den0 = C0 - Cstar * M / (r * r) / s;
    if (!(den0 > 0)) throw Error("barrier: k(0) denominator is not positive");
}

namespace {

double z_raw(const BarrierParams& p, double t) { return std::pow(1 - (2 - p.s) * t / p.M, 1 / (2 - p.s)); }

double k_raw(const BarrierParams& p, double t) {
    double den = p.C0 - p.Cstar * p.M / (p.r * p.r) / p.s * std::pow(z_raw(p, t), -p.s);
    if (!(den > 0)) throw Error("barrier: k denominator is not positive");
    return p.k_scale / den;
}

void check_time(const BarrierParams& p, double t) {
    if (!(t >= -1e-12 * p.T && t <= p.T * (1 + 1e-12))) throw Error("barrier: t outside [0, T]");
}

int top(const BarrierParams& p) { return p.dim - 1; }

double sub_arg(const BarrierParams& p, const Point& x, double z) {
    double s2 = 0;
    for (int a = 0; a < p.dim; ++a) {
        double d = a == top(p) ? x[a] - z : x[a];
        s2 += d * d;
    }
    return std::sqrt(s2) / (p.r * z);
}

double super_arg(const BarrierParams& p, const Point& x, double z) {
    double s2 = 0;
    for (int a = 0; a < p.dim; ++a) {
        double d = a == top(p) ? x[a] + z : x[a];
        s2 += d * d;
    }
    return std::sqrt(s2) / (p.r * z);
}

double sub_raw(const BarrierParams& p, const Point& x, double t) {
    double z = z_raw(p, t);
    return p.cs * std::pow(z, p.s) * bump_sub(sub_arg(p, x, z));
}

double super_raw(const BarrierParams& p, const Point& x, double t) {
    double z = z_raw(p, t);
    return k_raw(p, t) * bump_super(super_arg(p, x, z));
}

}  // namespace

double z_profile(const BarrierParams& p, double t) {
    check_time(p, t);
    return z_raw(p, std::clamp(t, 0.0, p.T));
}

double k_profile(const BarrierParams& p, double t) {
    check_time(p, t);
    return k_raw(p, std::clamp(t, 0.0, p.T));
}

double subsolution_eval(const BarrierParams& p, const Point& x, double t) {
    check_time(p, t);
    return sub_raw(p, x, std::clamp(t, 0.0, p.T));
}

double supersolution_eval(const BarrierParams& p, const Point& x, double t) {
    check_time(p, t);
    return super_raw(p, x, std::clamp(t, 0.0, p.T));
}

Vec barrier_drift(const BarrierParams& p, const Point& x) {
    return p.dim == 2 ? divfree2d_field(p.s, p.eps, x) : divfree3d_field(p.s, p.eps, x);
}

// ---------------------------------------------------------------- sampling

QuasiRandom::QuasiRandom(int dims, std::uint64_t seed) : dims_(dims) {
    if (dims < 1 || dims > 4) throw Error("quasi-random: 1 to 4 dimensions");
    // generalized golden ratio: the root of x^{d+1} = x + 1
    double g = 2;
    for (int i = 0; i < 50; ++i) g = std::pow(1 + g, 1.0 / (dims + 1));
    std::uint64_t h = seed + 0x9E3779B97F4A7C15ull;
    for (int a = 0; a < dims; ++a) {
        alpha_[a] = std::fmod(std::pow(1 / g, a + 1), 1.0);
        h ^= h >> 30;
        h *= 0xBF58476D1CE4E5B9ull;
        h ^= h >> 27;
        h *= 0x94D049BB133111EBull;
        h ^= h >> 31;
        state_[a] = double(h >> 11) * 0x1.0p-53;
    }
}

std::array<double, 4> QuasiRandom::next() {
    for (int a = 0; a < dims_; ++a) {
        state_[a] += alpha_[a];
        if (state_[a] >= 1) state_[a] -= 1;
    }
    return state_;
}

namespace {

// Point uniformly distributed in the d-ball from three coordinates in [0,1).
Point ball_point(int dim, double u1, double u2, double u3) {
    Point x{0, 0, 0};
    if (dim == 2) {
        double rho = std::sqrt(u1), th = 2 * std::numbers::pi * u2;
        x[0] = rho * std::cos(th);
        x[1] = rho * std::sin(th);
    } else {
        double rho = std::cbrt(u1), c = 2 * u2 - 1, sn = std::sqrt(std::max(0.0, 1 - c * c));
        double ph = 2 * std::numbers::pi * u3;
        x[0] = rho * sn * std::cos(ph);
        x[1] = rho * sn * std::sin(ph);
        x[2] = rho * c;
    }
    return x;
}

// Derivatives with bounds on their floating-point round-off (nt, ng per
// component, nl) from the stencil weights and the largest sampled value.
struct Derivs {
    double v, t;
    Vec grad;
    double lap;
    double nt, ng, nl;
};

constexpr double kUlp = std::numeric_limits<double>::epsilon();
// Absolute rounding error of a value near or below the normal range.
constexpr double kTiny = 4 * std::numeric_limits<double>::denorm_min();

double rounding(double fmax) { return kUlp * fmax + kTiny; }

// Fourth-order central differences in time (step dt) and space (step dx).
template <class F>
Derivs differentiate(F&& f, int dim, const Point& x, double t, double dx, double dt) {
    Derivs d{};
    d.v = f(x, t);
    double t2 = f(x, t + 2 * dt), t1 = f(x, t + dt), tm1 = f(x, t - dt), tm2 = f(x, t - 2 * dt);
    d.t = (-t2 + 8 * t1 - 8 * tm1 + tm2) / (12 * dt);
    d.nt = 1.5 * rounding(std::max({std::abs(t2), std::abs(t1), std::abs(tm1), std::abs(tm2)})) / dt;
    double fmax = std::abs(d.v);
    d.lap = 0;
    for (int a = 0; a < dim; ++a) {
        Point p1 = x, m1 = x, p2 = x, m2 = x;
        p1[a] += dx;
        m1[a] -= dx;
        p2[a] += 2 * dx;
        m2[a] -= 2 * dx;
        double fp1 = f(p1, t), fm1 = f(m1, t), fp2 = f(p2, t), fm2 = f(m2, t);
        d.grad[a] = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * dx);
        d.lap += (-fp2 + 16 * fp1 - 30 * d.v + 16 * fm1 - fm2) / (12 * dx * dx);
        fmax = std::max({fmax, std::abs(fp1), std::abs(fm1), std::abs(fp2), std::abs(fm2)});
    }
    d.ng = 1.5 * rounding(fmax) / dx;
    d.nl = dim * 5.4 * rounding(fmax) / (dx * dx);
    return d;
}

double fd1(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

double fd2(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

// Normalized violation of sign * sum(terms) >= 0: the part of the wrong-signed
// sum beyond ten times the round-off bound `noise`, over the largest term.
double violation(std::initializer_list<double> terms, double sign, double noise) {
    double sum = 0, big = 0;
    for (double v : terms) {
        sum += v;
        big = std::max(big, std::abs(v));
    }
    const double slack = 10 * noise;
    big = std::max(big, slack);
    if (big == 0) return 0;
    return std::max(0.0, -sign * sum - slack) / big;
}

}  // namespace

bool SignCheckReport::passed() const {
    for (const auto& c : components)
        if (!c.passed) return false;
    return true;
}

const ComponentCheck& SignCheckReport::component(const std::string& name) const {
    for (const auto& c : components)
        if (c.name == name) return c;
    throw Error("sign check: no component '" + name + "'");
}

namespace {

nlohmann::json params_json(const BarrierParams& p) {
    return {{"s", p.s},   {"eps", p.eps},     {"r", p.r},       {"m", p.m},     {"dim", p.dim},
            {"M", p.M},   {"T", p.T},         {"C_star", p.Cstar}, {"C_sub", p.Csub}, {"C0", p.C0},
            {"c_s", p.cs}, {"c_s_cap", p.cs_cap}, {"k_scale", p.k_scale}};
}

nlohmann::json point_json(const Point& x, int dim) {
    nlohmann::json j = nlohmann::json::array();
    for (int a = 0; a < dim; ++a) j.push_back(x[a]);
    return j;
}

}  // namespace

std::string SignCheckReport::text() const {
    nlohmann::json j;
    j["kind"] = kind == BarrierKind::Sub ? "sub" : "super";
    j["params"] = params_json(params);
    j["with_drift"] = with_drift;
    j["samples"] = samples;
    j["skipped"] = skipped;
    j["tolerance"] = tolerance;
    j["max_violation"] = residual().max_violation;
    j["witness_point"] = point_json(residual().witness, params.dim);
    j["witness_t"] = residual().witness_t;
    for (const auto& c : components)
        j["components"][c.name] = {{"max_violation", c.max_violation},
                                   {"witness_point", point_json(c.witness, params.dim)},
                                   {"witness_t", c.witness_t},
                                   {"verdict", c.passed ? "PASS" : "FAIL"}};
    j["verdict"] = passed() ? "PASS" : "FAIL";
    return j.dump(2);
}

SignCheckReport residual_sign_check(const BarrierParams& p, BarrierKind kind, std::size_t samples,
                                    std::uint64_t seed, bool with_drift) {
    p.validate();
    SignCheckReport rep;
    rep.kind = kind;
    rep.params = p;
    rep.with_drift = with_drift;
    rep.samples = samples;
    const bool sub = kind == BarrierKind::Sub;
    const double sign = sub ? -1.0 : 1.0;  // sub: residual <= 0
    const int d = p.dim, ax = d - 1;
    std::vector<std::string> names = sub ? std::vector<std::string>{"height", "transport", "residual"}
                                         : std::vector<std::string>{"k_prime", "barrier101", "transport", "residual"};
    for (const auto& n : names) rep.components.push_back({n});

    auto barrier = [&](const Point& x, double t) { return sub ? sub_raw(p, x, t) : super_raw(p, x, t); };
    auto shape = [&](const Point& x, double t) {
        double z = z_raw(p, t);
        return sub ? bump_sub(sub_arg(p, x, z)) : bump_super(super_arg(p, x, z));
    };

    // Sample region: the support ball (sub) or the ball where Phi < 1 (super), slightly enlarged.
    const double enlarge = sub ? 1.05 : 1.2;
    std::mutex mu;
    auto worker = [&](std::size_t begin, std::size_t end) {
        QuasiRandom qr(4, seed);
        for (std::size_t k = 0; k < begin; ++k) qr.next();
        std::vector<ComponentCheck> local(rep.components);
        std::size_t skipped = 0;
        for (std::size_t k = begin; k < end; ++k) {
            auto u = qr.next();
            double t = p.T * u[0];
            double z = z_raw(p, t);
            Point x = ball_point(d, u[1], u[2], u[3]);
            for (int a = 0; a < d; ++a) x[a] *= enlarge * p.r * z;
            x[ax] += sub ? z : -z;
            if (with_drift && !(d == 2 ? divfree2d_pure(p.eps, x) : divfree3d_pure(p.eps, x))) {
                ++skipped;
                continue;
            }
            Vec V = with_drift ? barrier_drift(p, x) : Vec{0, 0, 0};
            // local scale in bump units: the profiles steepen like q^2 near R = 1
            const double R0 = sub ? sub_arg(p, x, z) : super_arg(p, x, z);
            double ls = 1;
            if (R0 < 1) {
                double q = sub ? 1 - R0 * R0 : std::min(1.0, 2 - 2 * R0);
                ls = std::clamp(0.5 * q * q, 1e-4, 1.0);
            }
            const double dx = 1e-4 * ls * p.r * z;
            const double dt = 1e-4 * ls * p.r * p.M * std::pow(z, 2 - p.s);
            // z and k vary on the time scale z / |z'| = M z^{2-s}
            const double dtz = 1e-4 * p.M * std::pow(z, 2 - p.s);
            Derivs B = differentiate(barrier, d, x, t, dx, dt);
            Derivs P = differentiate(shape, d, x, t, dx, dt);
            double vals[4] = {0, 0, 0, 0};
            const double vnorm = std::sqrt(dot(V, V, d) * d);
            if (sub) {
                auto zs = [&](double tt) { return std::pow(z_raw(p, tt), p.s); };
                double dzs = fd1(zs, t, dtz);
                double zs0 = zs(t);
                double lapc = (p.m - 1) * p.cs * p.cs * zs0 * zs0 * P.v;
                vals[0] = violation({p.cs * dzs * P.v, -lapc * P.lap}, sign,
                                    p.cs * P.v * 1.5 * kUlp * zs0 / dtz + std::abs(lapc) * P.nl);
                vals[1] = violation({P.t, dot(V, P.grad, d)}, sign, P.nt + vnorm * P.ng);
            } else {
                auto kk = [&](double tt) { return k_raw(p, tt); };
                double k0 = kk(t);
                double dk = fd1(kk, t, dtz);
                vals[0] = violation({dk, -p.Cstar * k0 * k0 / (z * z * p.r * p.r)}, 1.0, 1.5 * kUlp * k0 / dtz);
                double R = std::max(super_arg(p, x, z), 1e-3);
                const double hR = 1e-4;
                double f = bump_super(R);
                double f1 = fd1(bump_super, R, hR), f2 = fd2(bump_super, R, hR);
                double n1 = 1.5 * kUlp / hR, n2 = 5.4 * kUlp / (hR * hR);
                vals[1] = violation({p.Cstar * f, -(p.m - 1) * f * (f2 + (d - 1) * f1 / R), -f1 * f1}, 1.0,
                                    (p.m - 1) * f * (n2 + (d - 1) * n1 / R) + 2 * std::abs(f1) * n1);
                vals[2] = violation({P.t, dot(V, P.grad, d)}, sign, P.nt + vnorm * P.ng);
            }
            double g2 = dot(B.grad, B.grad, d);
            double gnorm = std::sqrt(g2 * d);
            vals[names.size() - 1] =
                violation({B.t, -(p.m - 1) * B.v * B.lap, -g2, dot(V, B.grad, d)}, sign,
                          B.nt + (p.m - 1) * std::abs(B.v) * B.nl + 2 * gnorm * B.ng + vnorm * B.ng);
            for (std::size_t c = 0; c < names.size(); ++c) {
                if (!std::isfinite(vals[c])) vals[c] = std::numeric_limits<double>::infinity();
                if (vals[c] > local[c].max_violation) {
                    local[c].max_violation = vals[c];
                    local[c].witness = x;
                    local[c].witness_t = t;
                }
            }
        }
        std::lock_guard<std::mutex> lock(mu);
        rep.skipped += skipped;
        for (std::size_t c = 0; c < names.size(); ++c)
            if (local[c].max_violation > rep.components[c].max_violation ||
                (local[c].max_violation == rep.components[c].max_violation && local[c].max_violation > 0 &&
                 local[c].witness_t < rep.components[c].witness_t)) {
                rep.components[c].max_violation = local[c].max_violation;
                rep.components[c].witness = local[c].witness;
                rep.components[c].witness_t = local[c].witness_t;
            }
    };
    parallel_for(samples, worker);
    for (auto& c : rep.components) c.passed = c.max_violation <= rep.tolerance;
    return rep;
}

// ---------------------------------------------------------------- critical points

double critical_f(double s, int dim, const Point& p) {
    auto P = [s](double w) { return std::pow(std::abs(w), s - 1); };
    if (dim == 2) {
        double x = p[0], y = p[1];
        return x * x + y * (y + 1) + 0.5 * P(x - y) * (x + y + 1) + 0.5 * P(-x - y) * (-x + y + 1);
    }
    if (dim == 3) {
        double x1 = p[0], x2 = p[1], y = p[2];
        return -0.25 * P(y - x1 + x2) * (x1 + y - 1) - 0.25 * P(y + x1 - x2) * (x2 + y - 1) -
               0.25 * P(y + x1 + x2) * (-x1 - x2 + 2 * (y - 1)) + x1 * x1 + x2 * x2 + y * (y - 1);
    }
    throw Error("critical_f: dimension must be 2 or 3");
}

std::string CriticalPointCertificate::text() const {
    nlohmann::json j;
    j["s"] = s;
    j["dim"] = dim;
    j["point"] = point_json(point, dim);
    j["value"] = value;
    j["gradient"] = point_json(gradient, dim);
    nlohmann::json H = nlohmann::json::array(), Pm = nlohmann::json::array();
    for (int a = 0; a < dim; ++a) {
        H.push_back(point_json(hessian[a], dim));
        Pm.push_back(point_json(printed[a], dim));
    }
    j["hessian_entries"] = H;
    j["printed_hessian"] = Pm;
    j["max_hessian_rel_error"] = max_hessian_rel_error;
    j["r_s"] = r_s;
    j["verdict"] = passed() ? "PASS" : "FAIL";
    return j.dump(2);
}

CriticalPointCertificate critical_point_certificate(double s, int dim, int samples_per_radius, std::uint64_t seed) {
    if (!(s > 0 && s < 1)) throw Error("critical point: s must lie in (0, 1)");
    if (dim != 2 && dim != 3) throw Error("critical point: dimension must be 2 or 3");
    CriticalPointCertificate c;
    c.s = s;
    c.dim = dim;
    c.point = dim == 2 ? Point{0, -1, 0} : Point{0, 0, 1};
    auto f = [&](const Point& x) { return critical_f(s, dim, x); };
    c.value = f(c.point);
    const double h = 1e-3;
    auto along = [&](const Point& x, int a, double t) {
        Point y = x;
        y[a] += t;
        return y;
    };
    for (int a = 0; a < dim; ++a)
        c.gradient[a] = fd1([&](double t) { return f(along(c.point, a, t)); }, 0.0, h);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            if (a == b) {
                c.hessian[a][a] = fd2([&](double t) { return f(along(c.point, a, t)); }, 0.0, h);
            } else {
                c.hessian[a][b] = fd1(
                    [&](double t) {
                        Point y = along(c.point, a, t);
                        return fd1([&](double u) { return f(along(y, b, u)); }, 0.0, h);
                    },
                    0.0, h);
            }
        }
    if (dim == 2) {
        c.printed[0][0] = 2 * s;
        c.printed[1][1] = 2 * (2 - s);
    } else {
        c.printed[0][0] = c.printed[1][1] = 1 + s;
        c.printed[2][2] = 4 - 2 * s;
        c.printed[0][2] = c.printed[2][0] = c.printed[1][2] = c.printed[2][1] = -(s - 1) / 2;
    }
    double pmax = 0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) pmax = std::max(pmax, std::abs(c.printed[a][b]));
    c.max_hessian_rel_error = 0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            double ref = c.printed[a][b] != 0 ? std::abs(c.printed[a][b]) : pmax;
            c.max_hessian_rel_error = std::max(c.max_hessian_rel_error, std::abs(c.hessian[a][b] - c.printed[a][b]) / ref);
        }
    double gmax = std::abs(c.value);
    for (int a = 0; a < dim; ++a) gmax = std::max(gmax, std::abs(c.gradient[a]));
    c.critical_ok = gmax <= 1e-8;
    c.hessian_ok = c.max_hessian_rel_error <= 1e-5;

    // r_s: largest radius (bisection to 1e-3 relative) with f >= 0 on the sampled ball
    auto nonneg_on_ball = [&](double R) {
        QuasiRandom qr(3, seed);
        for (int k = 0; k < samples_per_radius; ++k) {
            auto u = qr.next();
            Point x = ball_point(dim, u[0], u[1], u[2]);
            for (int a = 0; a < dim; ++a) x[a] = c.point[a] + R * x[a];
            if (f(x) < -1e-12) return false;
        }
        return true;
    };
    double lo = 0, hi = 0.7;
    if (nonneg_on_ball(hi)) {
        lo = hi;
    } else {
        for (int it = 0; it < 80 && hi - lo > 1e-3 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            (nonneg_on_ball(mid) ? lo : hi) = mid;
        }
    }
    c.r_s = lo;
    return c;
}

}  // namespace pmd
