#include "pmdlab/drift.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <limits>
#include <numbers>

namespace pmd {

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13);
}

// Fixed 30-point Gauss-Legendre for the smooth blend zones; values are
// evaluated inside outer quadratures, where nested adaptivity is too slow.
template <class F>
double blend_integral(F f, double a, double b) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

double sgn(double w) { return w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0); }

}  // namespace

double smoothstep(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    return t * t * t * (10 - 15 * t + 6 * t * t);
}

double smoothstep_deriv(double t) {
    if (t <= 0 || t >= 1) return 0;
    return 30 * t * t * (1 - t) * (1 - t);
}

double kappa(double xi) {
    double a = std::abs(xi);
    if (a <= 1.0 / 3) return 1;
    if (a >= 0.5) return 0;
    return 1 - smoothstep((a - 1.0 / 3) * 6);
}

double kappa_deriv(double xi) {
    double a = std::abs(xi);
    if (a <= 1.0 / 3 || a >= 0.5) return 0;
    return -6 * smoothstep_deriv((a - 1.0 / 3) * 6) * sgn(xi);
}

namespace {

// Ramp 0 -> 1 on [0,1] whose slope is a plateau of height 4/3 with cubic
// shoulders of width 1/4.
constexpr double kShoulder = 0.25;
constexpr double kPlateau = 1.0 / (1.0 - kShoulder);

double ramp(double tau) {
    if (tau <= 0) return 0;
    if (tau >= 1) return 1;
    if (tau > 1 - kShoulder) return 1 - ramp(1 - tau);
    if (tau < kShoulder) {
        double u = tau / kShoulder;
        return kPlateau * kShoulder * (u * u * u - 0.5 * u * u * u * u);
    }
    return kPlateau * (kShoulder / 2 + tau - kShoulder);
}

double ramp_deriv(double tau) {
    if (tau <= 0 || tau >= 1) return 0;
    double u = std::min(tau, 1 - tau) / kShoulder;
    if (u >= 1) return kPlateau;
    return kPlateau * (3 * u * u - 2 * u * u * u);
}

}  // namespace

double RadialCutoff::value(double r) const {
    if (r <= eps) return 0;
    if (r < 2 * eps) return ramp(std::log2(r / eps));
    if (r <= 10) return 1;
    if (r < 20) return 1 - ramp(std::log2(r / 10));
    return 0;
}

double RadialCutoff::deriv(double r) const {
    if (r <= eps || (r >= 2 * eps && r <= 10) || r >= 20) return 0;
    if (r < 2 * eps) return ramp_deriv(std::log2(r / eps)) / (r * std::numbers::ln2);
    return -ramp_deriv(std::log2(r / 10)) / (r * std::numbers::ln2);
}

// ---------------------------------------------------------------- potentials

double RadialPotential::limit() const { return std::numeric_limits<double>::infinity(); }

Vec RadialPotential::gradient(const Point& x, int dim) const {
    double r = 0;
    for (int a = 0; a < dim; ++a) r += x[a] * x[a];
    r = std::sqrt(r);
    Vec v{0, 0, 0};
    if (r == 0) return v;
    double s = slope(r) / r;
    for (int a = 0; a < dim; ++a) v[a] = s * x[a];
    return v;
}

LogLogPotential::LogLogPotential(double A, int dim) : A_(A), dim_(dim) {
    if (!(A > std::exp(std::numbers::e))) throw Error("loglog potential: need A > e^e");
    ra_ = 1 / A;
    rb_ = 1 / std::log(std::log(A));
    if (!(ra_ < rb_ / 2)) throw Error("loglog potential: band [1/A, 1/lnlnA] is empty");
    rc_ = std::min(2 * rb_, (1 + rb_) / 2);
    auto f = [this](double r) { return slope(r); };
    phi_half_ = ra_ / 4;
    phi_ra_ = phi_half_ + integrate(f, ra_ / 2, ra_);
    phi_rb_ = phi_ra_ + std::log(std::log(1 / ra_)) - std::log(std::log(1 / rb_));
    phi_rc_ = phi_rb_ + integrate(f, rb_, rc_);
    phi_one_ = phi_rc_ + (1 - rc_);
    phi_inf_ = phi_one_ + 1.0 / dim_;
}

double LogLogPotential::slope(double r) const {
    r = std::abs(r);
    if (r <= ra_ / 2) return 2 * r / ra_;
    if (r <= ra_) {
        double t = smoothstep((r - ra_ / 2) / (ra_ / 2));
        return (1 - t) + t * band(r);
    }
    if (r <= rb_) return band(r);
    if (r <= rc_) {
        double t = smoothstep((r - rb_) / (rc_ - rb_));
        if (t >= 1) return cap(r);
        return (1 - t) * band(r) + t * cap(r);
    }
    return cap(r);
}

double LogLogPotential::value(double r) const {
    r = std::abs(r);
    auto f = [this](double s) { return slope(s); };
    if (r <= ra_ / 2) return r * r / ra_;
    if (r <= ra_) return phi_half_ + blend_integral(f, ra_ / 2, r);
    if (r <= rb_) return phi_ra_ + std::log(std::log(1 / ra_)) - std::log(std::log(1 / r));
    if (r <= rc_) return phi_rb_ + blend_integral(f, rb_, r);
    if (r <= 1) return phi_rc_ + (r - rc_);
    return phi_one_ + (1 - std::pow(r, -dim_)) / dim_;
}

QuadraticRescaledPotential::QuadraticRescaledPotential(double A, int dim) : A_(A), dim_(dim) {
    if (!(A > 0)) throw Error("quadratic rescaled potential: need A > 0");
    phi2_ = 1 + integrate([this](double rho) { return unit_slope(rho); }, 1, 2);
    phi_inf_ = phi2_ + std::pow(2.0, -dim_) / dim_;
}

double QuadraticRescaledPotential::unit_slope(double rho) const {
    if (rho <= 1) return 2 * rho;
    double cap = std::pow(rho, -dim_ - 1);
    if (rho >= 2) return cap;
    double t = smoothstep(rho - 1);
    return (1 - t) * 2 * rho + t * cap;
}

double QuadraticRescaledPotential::slope(double r) const { return A_ * unit_slope(A_ * std::abs(r)); }

double QuadraticRescaledPotential::value(double r) const {
    double rho = A_ * std::abs(r);
    if (rho <= 1) return rho * rho;
    if (rho <= 2) return 1 + blend_integral([this](double x) { return unit_slope(x); }, 1, rho);
    return phi2_ + (std::pow(2.0, -dim_) - std::pow(rho, -dim_)) / dim_;
}

Vec loglog_potential_gradient(double A, const Point& x, int dim) { return LogLogPotential(A, dim).gradient(x, dim); }

double radial_lp_logq_norm(const RadialPotential& phi, int dim, double p, double q) {
    const double omega = dim == 1 ? 2.0 : (dim == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi);
    auto bps = phi.breakpoints();
    double lo = bps.empty() ? 1e-8 : bps.front() * 1e-8;
    std::vector<double> edges{std::log(lo)};
    for (double b : bps)
        if (b > lo) edges.push_back(std::log(b));
    edges.push_back(std::log(1e8));
    auto f = [&](double u) {
        double r = std::exp(u);
        double g = std::abs(phi.slope(r));
        if (g == 0) return 0.0;
        double w = g > std::numbers::e ? std::pow(std::log(g), q) : 1.0;
        return omega * std::pow(r, dim) * std::pow(g, p) * w;
    };
    double total = 0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) total += integrate(f, edges[i], edges[i + 1]);
    return std::pow(total, 1 / p);
}

// ---------------------------------------------------------------- divergence-free fields

namespace {

double pw(double w, double s) { return std::pow(std::abs(w), s); }
double dpw(double w, double s) { return w == 0 ? 0.0 : s * std::pow(std::abs(w), s - 1) * sgn(w); }

}  // namespace

double divfree2d_stream(double s, double eps, double x, double y) {
    if (y == 0) return 0;
    double K = kappa(x / y);
    double mu = RadialCutoff{eps}.value(std::hypot(x, y));
    if (K == 0 || mu == 0) return 0;
    return 0.5 * std::sqrt(s) * (pw(x - y, s) - pw(x + y, s)) * K * mu;
}

Vec divfree2d_field(double s, double eps, const Point& p) {
    const double x = p[0], y = p[1];
    if (y == 0) return {0, 0, 0};
    const double xi = x / y, r = std::hypot(x, y);
    RadialCutoff mu{eps};
    const double K = kappa(xi), M = mu.value(r);
    if (K == 0 || M == 0) return {0, 0, 0};
    const double c = 0.5 * std::sqrt(s);
    const double psi = c * (pw(x - y, s) - pw(x + y, s));
    const double psi_x = c * (dpw(x - y, s) - dpw(x + y, s));
    const double psi_y = c * (-dpw(x - y, s) - dpw(x + y, s));
    const double kd = kappa_deriv(xi), md = mu.deriv(r);
    const double G = K * M;
    const double G_x = kd / y * M + K * md * x / r;
    const double G_y = -kd * x / (y * y) * M + K * md * y / r;
    const double F_x = psi_x * G + psi * G_x;
    const double F_y = psi_y * G + psi * G_y;
    return {-F_y, F_x, 0};
}

namespace {

struct Potential3 {
    Vec F;
    std::array<Vec, 3> dF;  // dF[j][i] = d_i F_j
};

Potential3 potential3(double s, double eps, const Point& p, bool with_derivs) {
    Potential3 out{};
    const double x1 = p[0], x2 = p[1], y = p[2];
    if (y == 0) return out;
    const double xi1 = (x1 - x2) / y, xi2 = (x1 + x2) / y;
    const double r = std::sqrt(x1 * x1 + x2 * x2 + y * y);
    RadialCutoff mu{eps};
    const double K1 = kappa(xi1), K2 = kappa(xi2), M = mu.value(r);
    if (K1 == 0 || K2 == 0 || M == 0) return out;
    const double c0 = 0.25 * std::cbrt(s);
    const double a = y + x1 - x2, b = y + x1 + x2, c = y - x1 + x2;
    const double psi1 = -pw(a, s) + pw(b, s);
    const double psi2 = pw(c, s) - pw(b, s);
    const double G = K1 * K2 * M;
    out.F = {c0 * psi1 * G, c0 * psi2 * G, 0};
    if (!with_derivs) return out;
    const double da = dpw(a, s), db = dpw(b, s), dc = dpw(c, s);
    const Vec gpsi1{-da + db, da + db, -da + db};
    const Vec gpsi2{-dc - db, dc - db, dc - db};
    const double k1 = kappa_deriv(xi1), k2 = kappa_deriv(xi2), md = mu.deriv(r);
    const Vec gxi1{1 / y, -1 / y, -(x1 - x2) / (y * y)};
    const Vec gxi2{1 / y, 1 / y, -(x1 + x2) / (y * y)};
    const Vec xr{x1 / r, x2 / r, y / r};
    Vec gG;
    for (int i = 0; i < 3; ++i) gG[i] = k1 * gxi1[i] * K2 * M + K1 * k2 * gxi2[i] * M + K1 * K2 * md * xr[i];
    for (int i = 0; i < 3; ++i) {
        out.dF[0][i] = c0 * (gpsi1[i] * G + psi1 * gG[i]);
        out.dF[1][i] = c0 * (gpsi2[i] * G + psi2 * gG[i]);
    }
    return out;
}

}  // namespace

Vec divfree3d_potential(double s, double eps, const Point& x) { return potential3(s, eps, x, false).F; }

Vec divfree3d_field(double s, double eps, const Point& x) {
    auto P = potential3(s, eps, x, true);
    // curl with F_3 = 0
    return {-P.dF[1][2], P.dF[0][2], P.dF[1][0] - P.dF[0][1]};
}

bool divfree2d_pure(double eps, const Point& x) {
    if (x[1] == 0) return false;
    double r = std::hypot(x[0], x[1]);
    return std::abs(x[0] / x[1]) <= 1.0 / 3 && r >= 2 * eps && r <= 10;
}

bool divfree3d_pure(double eps, const Point& x) {
    if (x[2] == 0) return false;
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return std::abs((x[0] - x[1]) / x[2]) <= 1.0 / 3 && std::abs((x[0] + x[1]) / x[2]) <= 1.0 / 3 && r >= 2 * eps &&
           r <= 10;
}

// ---------------------------------------------------------------- DriftSpec

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string DriftSpec::tag() const {
    return std::visit(overloaded{[](const ZeroDrift&) { return std::string("zero"); },
                                 [](const LogLogDrift&) { return std::string("loglog"); },
                                 [](const QuadraticRescaledDrift&) { return std::string("quadratic_rescaled"); },
                                 [](const DivFree2D&) { return std::string("divfree2d"); },
                                 [](const DivFree3D&) { return std::string("divfree3d"); },
                                 [](const CustomDrift&) { return std::string("custom"); }},
                      shape);
}

void DriftSpec::validate(int dim) const {
    std::visit(overloaded{[](const ZeroDrift&) {},
                          [](const LogLogDrift& d) {
                              if (!(d.A > std::exp(std::numbers::e))) throw Error("drift: loglog needs A > e^e");
                          },
                          [](const QuadraticRescaledDrift& d) {
                              if (!(d.A > 0)) throw Error("drift: quadratic_rescaled needs A > 0");
                          },
                          [dim](const DivFree2D& d) {
                              if (dim != 2) throw Error("drift: divfree2d needs dimension 2");
                              if (!(d.s > 0 && d.s < 1) || !(d.epsilon > 0 && d.epsilon < 1))
                                  throw Error("drift: need s, epsilon in (0,1)");
                          },
                          [dim](const DivFree3D& d) {
                              if (dim != 3) throw Error("drift: divfree3d needs dimension 3");
                              if (!(d.s > 0 && d.s < 1) || !(d.epsilon > 0 && d.epsilon < 1))
                                  throw Error("drift: need s, epsilon in (0,1)");
                          },
                          [](const CustomDrift& d) {
                              if (!d.f) throw Error("drift: custom drift without a function");
                          }},
               shape);
}

Vec DriftSpec::evaluate(const Point& x, int dim) const {
    return std::visit(overloaded{[](const ZeroDrift&) { return Vec{0, 0, 0}; },
                                 [&](const LogLogDrift& d) { return LogLogPotential(d.A, dim).gradient(x, dim); },
                                 [&](const QuadraticRescaledDrift& d) {
                                     return QuadraticRescaledPotential(d.A, dim).gradient(x, dim);
                                 },
                                 [&](const DivFree2D& d) { return divfree2d_field(d.s, d.epsilon, x); },
                                 [&](const DivFree3D& d) { return divfree3d_field(d.s, d.epsilon, x); },
                                 [&](const CustomDrift& d) { return d.f(x); }},
                      shape);
}

namespace {

std::function<Vec(const Point&)> evaluator(const DriftSpec& spec, int dim) {
    if (auto* d = std::get_if<LogLogDrift>(&spec.shape)) {
        auto pot = std::make_shared<LogLogPotential>(d->A, dim);
        return [pot, dim](const Point& x) { return pot->gradient(x, dim); };
    }
    if (auto* d = std::get_if<QuadraticRescaledDrift>(&spec.shape)) {
        auto pot = std::make_shared<QuadraticRescaledPotential>(d->A, dim);
        return [pot, dim](const Point& x) { return pot->gradient(x, dim); };
    }
    return [spec, dim](const Point& x) { return spec.evaluate(x, dim); };
}

VectorField divfree2d_faces(const Grid& g, double s, double eps) {
    const int n = g.cells_per_axis();
    const double h = g.spacing();
    std::vector<double> F(std::size_t(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            F[std::size_t(j) * (n + 1) + i] = divfree2d_stream(s, eps, g.face_coordinate(i), g.face_coordinate(j));
    auto corner = [&](int i, int j) { return F[std::size_t(j) * (n + 1) + i]; };
    VectorField V(g, Staggering::Face);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= n; ++i) V.component(0)[g.face_index(0, {i, j, 0}, i)] = -(corner(i, j + 1) - corner(i, j)) / h;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < n; ++i) V.component(1)[g.face_index(1, {i, j, 0}, j)] = (corner(i + 1, j) - corner(i, j)) / h;
    return V;
}

VectorField divfree3d_faces(const Grid& g, double s, double eps) {
    const int n = g.cells_per_axis();
    const double h = g.spacing();
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    // edges[e] holds int F_e along each edge of axis e; index by extents n (axis e) and n+1 (others).
    std::array<std::vector<double>, 3> edges;
    auto edge_index = [n](int e, const std::array<int, 3>& idx) {
        std::size_t f = 0;
        for (int a = 2; a >= 0; --a) f = f * (a == e ? n : n + 1) + idx[a];
        return f;
    };
    for (int e = 0; e < 2; ++e) {  // F_3 = 0, so edges along the third axis carry nothing
        std::array<int, 3> ext{n + 1, n + 1, n + 1};
        ext[e] = n;
        edges[e].assign(std::size_t(ext[0]) * ext[1] * ext[2], 0.0);
        std::array<int, 3> idx;
        for (idx[2] = 0; idx[2] < ext[2]; ++idx[2])
            for (idx[1] = 0; idx[1] < ext[1]; ++idx[1])
                for (idx[0] = 0; idx[0] < ext[0]; ++idx[0]) {
                    Point p;
                    for (int a = 0; a < 3; ++a) p[a] = a == e ? g.coordinate(idx[a]) : g.face_coordinate(idx[a]);
                    double sum = 0;
                    Point q = p;
                    for (int k = 0; k < 4; ++k) {
                        q[e] = p[e] + 0.5 * h * gx[k];
                        sum += gw[k] * divfree3d_potential(s, eps, q)[e];
                    }
                    edges[e][edge_index(e, idx)] = 0.5 * h * sum;
                }
    }
    auto E = [&](int e, const std::array<int, 3>& idx) { return e == 2 ? 0.0 : edges[e][edge_index(e, idx)]; };
    VectorField V(g, Staggering::Face);
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        std::array<int, 3> ext{n, n, n};
        ext[a] = n + 1;
        std::array<int, 3> idx;
        for (idx[2] = 0; idx[2] < ext[2]; ++idx[2])
            for (idx[1] = 0; idx[1] < ext[1]; ++idx[1])
                for (idx[0] = 0; idx[0] < ext[0]; ++idx[0]) {
                    // Loop (b0,c0) -> (b1,c0) -> (b1,c1) -> (b0,c1) around the face.
                    auto shift = [&](int ax, int d) {
                        auto k = idx;
                        k[ax] += d;
                        return k;
                    };
                    double circ = E(b, idx) + E(c, shift(b, 1)) - E(b, shift(c, 1)) - E(c, idx);
                    V.component(a)[g.face_index(a, idx, idx[a])] = circ / (h * h);
                }
    }
    return V;
}

}  // namespace

VectorField DriftSpec::sample_faces(const Grid& g) const {
    validate(g.dim());
    if (auto* d = std::get_if<DivFree2D>(&shape)) {
        if (g.radial()) throw Error("drift: divergence-free fields need a box grid");
        return divfree2d_faces(g, d->s, d->epsilon);
    }
    if (auto* d = std::get_if<DivFree3D>(&shape)) {
        if (g.radial()) throw Error("drift: divergence-free fields need a box grid");
        return divfree3d_faces(g, d->s, d->epsilon);
    }
    return VectorField::sample_faces(g, evaluator(*this, g.dim()));
}

VectorField DriftSpec::sample_cells(const Grid& g) const {
    validate(g.dim());
    return VectorField::sample_cells(g, evaluator(*this, g.dim()));
}

DriftSpec DriftSpec::from_keys(const std::string& tag, double A, double s, double eps) {
    DriftSpec d;
    if (tag == "zero") d.shape = ZeroDrift{};
    else if (tag == "loglog") d.shape = LogLogDrift{A};
    else if (tag == "quadratic_rescaled") d.shape = QuadraticRescaledDrift{A};
    else if (tag == "divfree2d") d.shape = DivFree2D{s, eps};
    else if (tag == "divfree3d") d.shape = DivFree3D{s, eps};
    else if (tag == "quadratic") {
        // grad(A |x|^2); the smooth confining case
        d.shape = CustomDrift{[A](const Point& x) { return Vec{2 * A * x[0], 2 * A * x[1], 2 * A * x[2]}; }};
    } else
        throw Error("unknown drift tag '" + tag + "'");
    return d;
}

RescaledDrift rescale_drift(const DriftSpec& V, double a, double r, double m, const Grid& g, double p) {
    if (!(a > 0) || !(r > 0)) throw Error("rescale_drift: a and r must be positive");
    const int d = g.dim();
    auto f = evaluator(V, d);
    const double scale = std::pow(a, m - 1) * r;
    auto base = VectorField::sample_cells(g, f);
    auto resc = VectorField::sample_cells(g, [&](const Point& x) {
        Vec v = f({r * x[0], r * x[1], r * x[2]});
        return Vec{scale * v[0], scale * v[1], scale * v[2]};
    });
    double nb = lp_norm(base, p);
    if (nb == 0) throw Error("rescale_drift: reference field has zero norm on this grid");
    return {resc, lp_norm(resc, p) / nb, std::pow(a, m - 1) * std::pow(r, 1 - d / p)};
}

ScalarField discrete_divergence(const VectorField& V) {
    if (V.staggering() != Staggering::Face) throw Error("discrete_divergence: need a face field");
    const Grid& g = V.grid();
    ScalarField out(g);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        auto idx = g.unravel(i);
        double s = 0;
        for (int a = 0; a < g.axes(); ++a) {
            const auto& c = V.component(a);
            s += g.face_area(a, idx[a] + 1) * c[g.face_index(a, idx, idx[a] + 1)] -
                 g.face_area(a, idx[a]) * c[g.face_index(a, idx, idx[a])];
        }
        out[i] = s / g.cell_volume(i);
    }
    return out;
}

}  // namespace pmd
