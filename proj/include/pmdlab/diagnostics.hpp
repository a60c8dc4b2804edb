#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmdlab/grid.hpp"

namespace pmd {

// v = m/(m-1) u^{m-1} and nu = u^{1/m}, with their inverses.
ScalarField pressure_transform(const ScalarField& u, double m);
ScalarField pressure_inverse(const ScalarField& v, double m);
ScalarField nu_transform(const ScalarField& u, double m);
ScalarField nu_inverse(const ScalarField& nu, double m);

// Snapshots (t_i, field) on one grid with strictly increasing times.
// Values between snapshots are linear in t.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    void add(double t, ScalarField f);

    const Grid& grid() const;
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double time(std::size_t i) const { return times_[i]; }
    const std::vector<double>& times() const { return times_; }
    const ScalarField& slice(std::size_t i) const { return slices_[i]; }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }

    // Multilinear in space (clamped to the outer cell centers) and linear in time.
    double sample(const Point& x, double t) const;
    SpaceTimeField shifted(double c) const;
    SpaceTimeField scaled(double c) const;

private:
    std::vector<double> times_;
    std::vector<ScalarField> slices_;
};

// v(x, t) = nu(x0 + r x, t0 + r^2 w^{-alpha} t), alpha = (m-1)/m, on
// [-1, 1]^d x [-1, 0] sampled by `cells` per axis and `slices` times.
// t0 defaults to the last snapshot time.
struct RescaleOptions {
    Point x0{};
    std::optional<double> t0;
    int cells = 0;   // 0: the source resolution
    int slices = 0;  // 0: the number of source snapshots in the window
};

SpaceTimeField rescale_cylinder(const SpaceTimeField& nu, double r, double w_osc, double m,
                                const RescaleOptions& opt = {});

// max - min over cells with centers in the ball and snapshot times in Q.
double oscillation(const SpaceTimeField& w, const ParabolicCylinder& Q);

struct SpaceTimePoint {
    Point x{};
    double t = 0;
};

struct HolderReport {
    double delta = 1;
    double value = 0;
    SpaceTimePoint p, q;
    std::size_t points = 0;  // lattice size after decimation
    int stride = 1;

    std::string csv() const;  // header + one row
};

struct HolderOptions {
    std::optional<ParabolicCylinder> region;
    std::size_t max_points = 4000;
    int stride = 0;  // lattice step in cell and snapshot indices; 0 picks the
                     // smallest power of two that fits max_points
};

// max |w(p) - w(q)| / d(p, q)^delta with d = max(|x_p - x_q|, |t_p - t_q|^{1/2}).
HolderReport holder_seminorm(const SpaceTimeField& w, double delta, const HolderOptions& opt = {});

struct LevelSeries {
    std::vector<double> thresholds;
    std::vector<double> exponents;
    // A[i][j] for thresholds[i], exponents[j]: time integral of |{v > k} cap B'|^q.
    std::vector<std::vector<double>> A, B;
    double ball_measure = 0;
    double window = 0;

    // Nonincreasing in k and nondecreasing in q (relative slack 1e-12).
    bool monotone() const;
    void write_csv(const std::string& path) const;
};

// Trapezoid in time over the snapshots, cell volumes in space, B' the ball of
// `radius` about `center`. The time window must have length <= 1.
LevelSeries level_measures(const SpaceTimeField& w, const std::vector<double>& thresholds,
                           const std::vector<double>& exponents, double radius = 1.0, Point center = {});

}  // namespace pmd
