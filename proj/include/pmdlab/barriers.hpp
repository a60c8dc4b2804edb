#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmdlab/grid.hpp"

namespace pmd {

// Radial bump of the subsolution: exp(1 - 1/(1 - R^2)) on R < 1, peak 1 at 0.
double bump_sub(double R);
double bump_sub_d1(double R);
double bump_sub_d2(double R);
// Profile of the supersolution: R^2 on [0, 1/2], 1 from R = 1 on, joined by a
// C-infinity logistic blend.
double bump_super(double R);
double bump_super_d1(double R);
double bump_super_d2(double R);

// sup |Lap bump_sub| in d dimensions, measured on `samples` radii.
double bump_sub_laplacian_cap(int dim, int samples = 100000);
// Smallest C* with (m-1) phi (phi'' + (d-1) phi'/R) + phi'^2 <= C* phi for the
// super profile, measured on `samples` radii and inflated by 1e-6 relative.
double barrier101_constant(double m, int dim, int samples = 100000);

struct BarrierParams {
    double s = 0.3;
    double eps = 0.02;
    double r = 0.1;
    double m = 2;
    int dim = 2;

    // derived
    double M = 0;      // s^{-3/2} (2D), s^{-4/3} (3D)
    double T = 0;      // M (1 - (4 eps)^{2-s}) / (2 - s)
    double Cstar = 0;  // barrier101 constant of the super profile
    double Csub = 0;   // |Lap| cap of the sub bump
    double C0 = 0;     // 2 C* M r^-2 s^-1 (4 eps)^-s
    double cs_cap = 0; // s r^2 / (Csub (m-1) M)
    double cs = 0;     // subsolution height coefficient
    // Multiplies k(t); 1 except in deliberate counter-tests.
    double k_scale = 1;

    // cs defaults to half the cap.
    static BarrierParams make(double s, double eps, double r, double m, int dim, std::optional<double> cs = {});
    void validate() const;
};

double z_profile(const BarrierParams& p, double t);
double k_profile(const BarrierParams& p, double t);

// c_s z^s phi_sub(|x - z e_top| / (r z)) and k phi_super(|x + z e_top| / (r z)),
// e_top the last axis.
double subsolution_eval(const BarrierParams& p, const Point& x, double t);
double supersolution_eval(const BarrierParams& p, const Point& x, double t);

// Divergence-free drift of the construction (2D or 3D by p.dim).
Vec barrier_drift(const BarrierParams& p, const Point& x);

enum class BarrierKind { Sub, Super };

struct ComponentCheck {
    std::string name;
    double max_violation = 0;  // normalized by the largest term at the witness
    Point witness{};
    double witness_t = 0;
    bool passed = true;
};

struct SignCheckReport {
    BarrierKind kind = BarrierKind::Sub;
    BarrierParams params;
    bool with_drift = true;
    std::size_t samples = 0;
    std::size_t skipped = 0;  // drift in a cutoff transition zone
    double tolerance = 1e-8;
    std::vector<ComponentCheck> components;  // last entry is the full residual

    bool passed() const;
    const ComponentCheck& residual() const { return components.back(); }
    const ComponentCheck& component(const std::string& name) const;
    std::string text() const;
};

// Samples the pressure-equation residual v_t - (m-1) v Lap v - |grad v|^2 + V.grad v
// of the barrier (<= 0 for sub, >= 0 for super) and the lemma's sufficient
// conditions, all by fourth-order central differences.
SignCheckReport residual_sign_check(const BarrierParams& p, BarrierKind kind, std::size_t samples,
                                    std::uint64_t seed = 1, bool with_drift = true);

// f of the critical-point lemmas: 2D about (0,-1), 3D about (0,0,1).
double critical_f(double s, int dim, const Point& x);

struct CriticalPointCertificate {
    double s = 0;
    int dim = 2;
    Point point{};
    double value = 0;
    std::array<double, 3> gradient{};
    std::array<std::array<double, 3>, 3> hessian{};
    std::array<std::array<double, 3>, 3> printed{};
    double max_hessian_rel_error = 0;
    bool critical_ok = false;  // value and gradient vanish to 1e-8
    bool hessian_ok = false;   // printed entries matched to 1e-5 relative
    double r_s = 0;

    bool passed() const { return critical_ok && hessian_ok && r_s > 0; }
    std::string text() const;
};

CriticalPointCertificate critical_point_certificate(double s, int dim, int samples_per_radius = 10000,
                                                    std::uint64_t seed = 1);

// Deterministic low-discrepancy points in [0,1)^k (additive recurrence).
class QuasiRandom {
public:
    QuasiRandom(int dims, std::uint64_t seed);
    std::array<double, 4> next();

private:
    int dims_;
    std::array<double, 4> alpha_{}, state_{};
};

}  // namespace pmd
