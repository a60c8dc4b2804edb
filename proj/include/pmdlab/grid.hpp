#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Point = std::array<double, 3>;
using Vec = std::array<double, 3>;

inline double norm(const Vec& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

// Fixed-shape pairwise summation; the split points depend only on the length,
// so the result is bitwise reproducible.
double pairwise_sum(std::span<const double> xs);

// Number of worker threads used by parallel loops (1 = serial).
void set_jobs(int jobs);
int jobs();

// Runs fn(begin, end) over [0, n) split into contiguous blocks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

enum class GridMode { Box, Radial };

class Grid {
public:
    Grid() = default;
    static Grid box(int dim, int cells, double half_extent);
    // Radial profile on [0, radius]; volumes are those of d-dimensional shells.
    static Grid radial(int dim, int cells, double radius);

    int dim() const { return dim_; }
    int cells_per_axis() const { return n_; }
    double half_extent() const { return L_; }
    double spacing() const { return h_; }
    GridMode mode() const { return mode_; }
    bool radial() const { return mode_ == GridMode::Radial; }
    // Array axes: d for box grids, 1 for radial grids.
    int axes() const { return radial() ? 1 : dim_; }

    std::size_t cell_count() const;
    std::size_t face_count(int axis) const;
    std::size_t stride(int axis) const { return strides_[axis]; }

    std::array<int, 3> unravel(std::size_t cell) const;
    std::size_t ravel(const std::array<int, 3>& idx) const;
    // Face index for face j (0..n) along axis; idx holds the other cell indices.
    std::size_t face_index(int axis, std::array<int, 3> idx, int j) const;

    Point center(std::size_t cell) const;
    double coordinate(int i) const;  // cell-center coordinate along an axis
    double face_coordinate(int j) const;
    double cell_volume(std::size_t cell) const;
    double face_area(int axis, int j) const;
    double total_volume() const;

    bool operator==(const Grid& o) const;

private:
    int dim_ = 1;
    int n_ = 0;
    double L_ = 0;
    double h_ = 0;
    GridMode mode_ = GridMode::Box;
    std::array<std::size_t, 3> strides_{1, 1, 1};
    double box_volume_ = 0, box_area_ = 0;
    std::vector<double> radial_volume_;
    std::vector<double> radial_area_;
};

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Grid g, double value = 0.0);
    ScalarField(Grid g, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    double integral() const;
    double max() const;
    double min() const;
    // Throws naming the first non-finite cell.
    void require_finite(const char* what) const;

    static ScalarField sample(const Grid& g, const std::function<double(const Point&)>& f);

private:
    Grid grid_;
    std::vector<double> v_;
};

enum class Staggering { Face, Cell };

// Face form: component a holds the normal component on faces of axis a.
// Cell form: component a holds the a-th Cartesian component at cell centers.
class VectorField {
public:
    VectorField() = default;
    VectorField(Grid g, Staggering s);

    const Grid& grid() const { return grid_; }
    Staggering staggering() const { return stag_; }
    int components() const { return grid_.axes(); }
    std::vector<double>& component(int a) { return c_[a]; }
    const std::vector<double>& component(int a) const { return c_[a]; }

    // Cell-centered vector (face values averaged onto cells for face form).
    Vec at_cell(std::size_t cell) const;
    VectorField to_cells() const;
    VectorField& operator*=(double s);

    static VectorField sample_cells(const Grid& g, const std::function<Vec(const Point&)>& f);
    static VectorField sample_faces(const Grid& g, const std::function<Vec(const Point&)>& f);

private:
    Grid grid_;
    Staggering stag_ = Staggering::Cell;
    std::array<std::vector<double>, 3> c_;
};

struct ParabolicCylinder {
    Point x0{};
    double t0 = 0;
    double r = 1;
    double c = 1;

    ParabolicCylinder() = default;
    ParabolicCylinder(Point x, double t, double radius, double depth);
    double t_begin() const { return t0 - c * r * r; }
    bool contains_space(const Point& x, int dim) const;
    bool contains_time(double t) const { return t > t_begin() && t <= t0; }
};

// phi_eps(u) = u^m + eps*u and its derivative.
double phi_eps(double u, double m, double eps);
double dphi_eps(double u, double m, double eps);

ScalarField laplacian_of_nonlinearity(const ScalarField& u, double m, double eps);
ScalarField divergence_of_drift_flux(const ScalarField& u, const VectorField& V);

double lp_norm(const VectorField& V, double p);
double lp_logq_norm(const VectorField& V, double p, double q);
// Restricted to cells whose centers satisfy the predicate.
double lp_norm(const VectorField& V, double p, const std::function<bool(const Point&)>& region);

void write_snapshot_csv(const std::string& path, const ScalarField& u);
ScalarField read_snapshot_csv(const std::string& path, const Grid& g);
std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace pmd
