#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pmdlab/grid.hpp"

namespace pmd {

// C^2 quintic smoothstep on [0,1], clamped outside.
double smoothstep(double t);
double smoothstep_deriv(double t);

// kappa: 1 on [-1/3, 1/3], 0 outside (-1/2, 1/2).
double kappa(double xi);
double kappa_deriv(double xi);

// mu_eps: 0 below eps, 1 on [2 eps, 10], 0 from 20 on. The transitions are
// ramps in log2(r) so that |mu'| <= 1.93/r.
struct RadialCutoff {
    double eps;
    double value(double r) const;
    double deriv(double r) const;
};

// Increasing radial potential with Phi(0) = 0.
class RadialPotential {
public:
    virtual ~RadialPotential() = default;
    virtual double value(double r) const = 0;
    virtual double slope(double r) const = 0;
    // Points where the profile changes formula (helps quadrature).
    virtual std::vector<double> breakpoints() const { return {}; }
    // sup Phi (infinity when unbounded).
    virtual double limit() const;
    Vec gradient(const Point& x, int dim) const;
};

class QuadraticPotential : public RadialPotential {
public:
    explicit QuadraticPotential(double c = 1.0) : c_(c) {}
    double value(double r) const override { return c_ * r * r; }
    double slope(double r) const override { return 2 * c_ * r; }

private:
    double c_;
};

// Log-log potential of the loss-of-boundedness construction: slope
// 1/(r ln(1/r)) on the band [1/A, 1/lnlnA], blended to 2r/r_a near 0 and to
// min{1, r^{-d-1}} outside.
class LogLogPotential : public RadialPotential {
public:
    LogLogPotential(double A, int dim);
    double value(double r) const override;
    double slope(double r) const override;
    std::vector<double> breakpoints() const override { return {ra_ / 2, ra_, rb_, rc_, 1.0}; }
    double limit() const override { return phi_inf_; }
    double A() const { return A_; }

private:
    double band(double r) const { return 1.0 / (r * std::log(1.0 / r)); }
    double cap(double r) const { return r <= 1 ? 1.0 : std::pow(r, -dim_ - 1); }
    double A_;
    int dim_;
    double ra_, rb_, rc_;
    double phi_half_, phi_ra_, phi_rb_, phi_rc_, phi_one_, phi_inf_;
};

// Phi_A(r) = Phi_1(A r) where Phi_1 = r^2 on [0, 1] and its slope is blended to
// r^{-d-1} on [1, 2]. ||grad Phi_A||_{L^d} does not depend on A.
class QuadraticRescaledPotential : public RadialPotential {
public:
    QuadraticRescaledPotential(double A, int dim);
    double value(double r) const override;
    double slope(double r) const override;
    std::vector<double> breakpoints() const override { return {1 / A_, 2 / A_}; }
    double limit() const override { return phi_inf_; }
    double A() const { return A_; }

private:
    double unit_slope(double rho) const;
    double A_;
    int dim_;
    double phi2_, phi_inf_;
};

Vec loglog_potential_gradient(double A, const Point& x, int dim = 2);

// (int |grad Phi|^p max{log^q |grad Phi|, 1} dx)^{1/p} over R^d by quadrature in log r.
double radial_lp_logq_norm(const RadialPotential& phi, int dim, double p, double q);

// Divergence-free cone fields (x, y) in 2D and (x1, x2, y) in 3D.
double divfree2d_stream(double s, double eps, double x, double y);
Vec divfree2d_field(double s, double eps, const Point& x);
Vec divfree3d_potential(double s, double eps, const Point& x);  // F with V = curl F
Vec divfree3d_field(double s, double eps, const Point& x);

// Cutoff state at a point: true when kappa and mu are identically 1 in a
// neighbourhood (the closed forms of the lemmas apply).
bool divfree2d_pure(double eps, const Point& x);
bool divfree3d_pure(double eps, const Point& x);

struct ZeroDrift {};
struct LogLogDrift { double A; };
struct QuadraticRescaledDrift { double A; };
struct DivFree2D { double s, epsilon; };
struct DivFree3D { double s, epsilon; };
struct CustomDrift { std::function<Vec(const Point&)> f; };

using DriftShape = std::variant<ZeroDrift, LogLogDrift, QuadraticRescaledDrift, DivFree2D, DivFree3D, CustomDrift>;

struct DriftSpec {
    DriftShape shape = ZeroDrift{};

    std::string tag() const;
    Vec evaluate(const Point& x, int dim) const;
    // Face fluxes; divergence-free families are sampled as exact face averages
    // of the stream function / vector potential so the discrete divergence vanishes.
    VectorField sample_faces(const Grid& g) const;
    VectorField sample_cells(const Grid& g) const;
    void validate(int dim) const;

    static DriftSpec from_keys(const std::string& tag, double A, double s, double eps);
};

struct RescaledDrift {
    VectorField field;       // cell samples of a^{m-1} r V(r x)
    double measured_ratio;   // ||V~||_p / ||V||_p on the grid
    double predicted_ratio;  // a^{m-1} r^{1-d/p}
};

RescaledDrift rescale_drift(const DriftSpec& V, double a, double r, double m, const Grid& g, double p);

// Discrete divergence of a face field (per cell).
ScalarField discrete_divergence(const VectorField& V);

}  // namespace pmd
