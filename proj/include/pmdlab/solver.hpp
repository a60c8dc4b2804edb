#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pmdlab/drift.hpp"
#include "pmdlab/grid.hpp"

namespace pmd {

struct StepControl {
    double cfl_diffusion = 0.45;
    double cfl_advection = 0.45;
    double dt_max = std::numeric_limits<double>::infinity();
    // Negative cells down to -threshold * max u are zeroed; 0 makes any
    // negativity beyond round-off an error.
    double positivity_clip_threshold = 0.0;

    void validate() const;
};

struct SolverState {
    ScalarField u;
    double t = 0;
    double m = 2;
    double eps_reg = 0;
    VectorField drift;  // face fluxes
    double initial_mass = 0;
    double outflow_rate = 0;  // max over cells of total upwind outflow rate / volume

    static SolverState make(ScalarField u0, double m, double eps_reg, VectorField drift_faces, double t0 = 0);
    static SolverState make(ScalarField u0, double m, double eps_reg, const DriftSpec& drift, double t0 = 0);
    double mass() const { return u.integral(); }
};

double stable_dt(const SolverState& s, const StepControl& ctl);
// Forward Euler with the given dt (must not exceed stable_dt).
void advance(SolverState& s, double dt, const StepControl& ctl);
SolverState step(const SolverState& s, const StepControl& ctl);

// Multilinear interpolation of cell values at a point (clamped to the outer cell centers).
double probe(const ScalarField& u, const Point& x);

class TimeSeries {
public:
    explicit TimeSeries(std::vector<std::string> header = {}) : header_(std::move(header)) {}
    void add(std::vector<double> row);
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    std::vector<double> column(const std::string& name) const;
    void write_csv(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

struct Observers {
    std::vector<Point> probes;
    std::optional<ParabolicCylinder> cylinder;
    int stride = 1;
    // Keep a snapshot every `snapshot_stride` rows (0 = none).
    int snapshot_stride = 0;
};

struct Snapshot {
    double t;
    ScalarField u;
};

struct RunResult {
    SolverState state;
    TimeSeries series;
    std::vector<Snapshot> snapshots;
    long steps = 0;
};

RunResult run_until(SolverState s, double t_end, const StepControl& ctl, const Observers& obs = {});

// Source-type solution of u_t = Lap u^m.
double barenblatt_constant(double m, int d, double mass);
double barenblatt_oracle(double m, int d, double mass, const Point& x, double t);

struct StationaryProfile {
    ScalarField rho;
    double C;
    double support_radius;
};

// Mass of (C - (m-1)/m Phi)_+^{1/(m-1)} over R^d.
double stationary_mass(const RadialPotential& phi, double m, int d, double C);
double stationary_constant(const RadialPotential& phi, double m, int d, double mass);
StationaryProfile stationary_profile(const RadialPotential& phi, double m, double mass, const Grid& g);

struct ContractionSeries {
    std::vector<double> values;
    bool nonincreasing;
};

ContractionSeries l1_contraction_probe(const std::vector<ScalarField>& u1, const std::vector<ScalarField>& u2,
                                       double slack = 1e-8);

// Test function eta(t) prod_a b((x_a - c_a)/w) with b(z) = (1-z^2)^4 and
// eta(t) = (1 - t/T)^4 on [0, T].
struct PolyBump {
    Point center{};
    double width = 1;
    double T = 1;

    double value(const Point& x, int d, double t) const;
    double dt(const Point& x, int d, double t) const;
    Vec grad(const Point& x, int d, double t) const;
};

struct WeakResidual {
    double raw;
    double normalized;
};

// Defect of int int u phi_t + int u0 phi(0) - int int (grad u^m + u V).grad phi
// over snapshots starting at the initial time (times are shifted so history[0] is t = 0).
WeakResidual weak_residual(const std::vector<Snapshot>& history, const VectorField& drift_faces, double m,
                           const PolyBump& phi);

}  // namespace pmd
