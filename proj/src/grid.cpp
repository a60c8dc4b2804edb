#include "pmdlab/grid.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace pmd {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

namespace {
std::atomic<int> g_jobs{1};
}

void set_jobs(int jobs) { g_jobs = std::max(1, jobs); }
int jobs() { return g_jobs; }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    int nj = g_jobs;
    if (nj <= 1 || n < 4096) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + nj - 1) / nj;
    for (int k = 0; k < nj; ++k) {
        std::size_t b = k * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& t : pool) t.join();
}

namespace {

double omega(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 2.0 * std::numbers::pi;
        default: return 4.0 * std::numbers::pi;
    }
}

}  // namespace

Grid Grid::box(int dim, int cells, double half_extent) {
    if (dim < 1 || dim > 3) throw Error("grid: dimension must be 1, 2 or 3");
    if (cells < 4) throw Error("grid: need at least 4 cells per axis");
    if (!(half_extent > 0) || !std::isfinite(half_extent)) throw Error("grid: half extent must be positive");
    Grid g;
    g.dim_ = dim;
    g.n_ = cells;
    g.L_ = half_extent;
    g.h_ = 2.0 * half_extent / cells;
    g.mode_ = GridMode::Box;
    g.strides_ = {1, std::size_t(cells), std::size_t(cells) * cells};
    g.box_volume_ = std::pow(g.h_, dim);
    g.box_area_ = std::pow(g.h_, dim - 1);
    return g;
}

Grid Grid::radial(int dim, int cells, double radius) {
    if (dim < 1 || dim > 3) throw Error("grid: dimension must be 1, 2 or 3");
    if (cells < 4) throw Error("grid: need at least 4 cells per axis");
    if (!(radius > 0) || !std::isfinite(radius)) throw Error("grid: radius must be positive");
    Grid g;
    g.dim_ = dim;
    g.n_ = cells;
    g.L_ = radius;
    g.h_ = radius / cells;
    g.mode_ = GridMode::Radial;
    g.radial_volume_.resize(cells);
    g.radial_area_.resize(cells + 1);
    double w = omega(dim);
    for (int i = 0; i < cells; ++i) {
        double r0 = i * g.h_, r1 = (i + 1) * g.h_;
        g.radial_volume_[i] = w / dim * (std::pow(r1, dim) - std::pow(r0, dim));
    }
    for (int j = 0; j <= cells; ++j) g.radial_area_[j] = w * std::pow(j * g.h_, dim - 1);
    return g;
}

std::size_t Grid::cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < axes(); ++a) c *= n_;
    return c;
}

std::size_t Grid::face_count(int) const { return cell_count() / n_ * (n_ + 1); }

std::array<int, 3> Grid::unravel(std::size_t cell) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < axes(); ++a) {
        idx[a] = int(cell % n_);
        cell /= n_;
    }
    return idx;
}

std::size_t Grid::ravel(const std::array<int, 3>& idx) const {
    std::size_t c = 0;
    for (int a = axes() - 1; a >= 0; --a) c = c * n_ + idx[a];
    return c;
}

std::size_t Grid::face_index(int axis, std::array<int, 3> idx, int j) const {
    idx[axis] = j;
    std::size_t f = 0;
    for (int a = axes() - 1; a >= 0; --a) f = f * (a == axis ? n_ + 1 : n_) + idx[a];
    return f;
}

double Grid::coordinate(int i) const { return radial() ? (i + 0.5) * h_ : -L_ + (i + 0.5) * h_; }
double Grid::face_coordinate(int j) const { return radial() ? j * h_ : -L_ + j * h_; }

Point Grid::center(std::size_t cell) const {
    auto idx = unravel(cell);
    Point p{0, 0, 0};
    for (int a = 0; a < axes(); ++a) p[a] = coordinate(idx[a]);
    return p;
}

double Grid::cell_volume(std::size_t cell) const {
    return radial() ? radial_volume_[cell] : box_volume_;
}

double Grid::face_area(int, int j) const {
    return radial() ? radial_area_[j] : box_area_;
}

double Grid::total_volume() const {
    if (radial()) return omega(dim_) / dim_ * std::pow(L_, dim_);
    return std::pow(2 * L_, dim_);
}

bool Grid::operator==(const Grid& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && L_ == o.L_ && mode_ == o.mode_;
}

// ---------------------------------------------------------------- fields

ScalarField::ScalarField(Grid g, double value) : grid_(std::move(g)), v_(grid_.cell_count(), value) {}

ScalarField::ScalarField(Grid g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    if (v_.size() != grid_.cell_count()) throw Error("scalar field: value count does not match grid");
}

double ScalarField::integral() const {
    std::vector<double> w(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) w[i] = v_[i] * grid_.cell_volume(i);
    return pairwise_sum(w);
}

double ScalarField::max() const { return *std::max_element(v_.begin(), v_.end()); }
double ScalarField::min() const { return *std::min_element(v_.begin(), v_.end()); }

void ScalarField::require_finite(const char* what) const {
    for (std::size_t i = 0; i < v_.size(); ++i) {
        if (!std::isfinite(v_[i])) {
            auto idx = grid_.unravel(i);
            std::ostringstream os;
            os << what << ": non-finite value " << v_[i] << " at cell " << i << " (" << idx[0];
            for (int a = 1; a < grid_.axes(); ++a) os << "," << idx[a];
            os << ")";
            throw Error(os.str());
        }
    }
}

ScalarField ScalarField::sample(const Grid& g, const std::function<double(const Point&)>& f) {
    ScalarField u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(g.center(i));
    return u;
}

VectorField::VectorField(Grid g, Staggering s) : grid_(std::move(g)), stag_(s) {
    for (int a = 0; a < grid_.axes(); ++a)
        c_[a].assign(s == Staggering::Face ? grid_.face_count(a) : grid_.cell_count(), 0.0);
}

Vec VectorField::at_cell(std::size_t cell) const {
    Vec v{0, 0, 0};
    if (stag_ == Staggering::Cell) {
        for (int a = 0; a < components(); ++a) v[a] = c_[a][cell];
        return v;
    }
    auto idx = grid_.unravel(cell);
    for (int a = 0; a < components(); ++a) {
        v[a] = 0.5 * (c_[a][grid_.face_index(a, idx, idx[a])] + c_[a][grid_.face_index(a, idx, idx[a] + 1)]);
    }
    return v;
}

VectorField VectorField::to_cells() const {
    if (stag_ == Staggering::Cell) return *this;
    VectorField out(grid_, Staggering::Cell);
    for (std::size_t i = 0; i < grid_.cell_count(); ++i) {
        Vec v = at_cell(i);
        for (int a = 0; a < components(); ++a) out.c_[a][i] = v[a];
    }
    return out;
}

VectorField& VectorField::operator*=(double s) {
    for (auto& comp : c_)
        for (double& x : comp) x *= s;
    return *this;
}

VectorField VectorField::sample_cells(const Grid& g, const std::function<Vec(const Point&)>& f) {
    VectorField V(g, Staggering::Cell);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        Vec v = f(g.center(i));
        for (int a = 0; a < g.axes(); ++a) V.c_[a][i] = v[a];
    }
    return V;
}

namespace {

// Calls fn(idx) for every multi-index with extents ext (unused axes have extent 1).
template <class F>
void for_each_index(const std::array<int, 3>& ext, F&& fn) {
    std::array<int, 3> idx{0, 0, 0};
    for (idx[2] = 0; idx[2] < ext[2]; ++idx[2])
        for (idx[1] = 0; idx[1] < ext[1]; ++idx[1])
            for (idx[0] = 0; idx[0] < ext[0]; ++idx[0]) fn(idx);
}

std::array<int, 3> face_extents(const Grid& g, int axis) {
    std::array<int, 3> ext{1, 1, 1};
    for (int a = 0; a < g.axes(); ++a) ext[a] = g.cells_per_axis() + (a == axis ? 1 : 0);
    return ext;
}

}  // namespace

VectorField VectorField::sample_faces(const Grid& g, const std::function<Vec(const Point&)>& f) {
    VectorField V(g, Staggering::Face);
    for (int a = 0; a < g.axes(); ++a) {
        for_each_index(face_extents(g, a), [&](const std::array<int, 3>& idx) {
            Point p{0, 0, 0};
            for (int b = 0; b < g.axes(); ++b) p[b] = b == a ? g.face_coordinate(idx[b]) : g.coordinate(idx[b]);
            V.c_[a][g.face_index(a, idx, idx[a])] = f(p)[a];
        });
    }
    return V;
}

ParabolicCylinder::ParabolicCylinder(Point x, double t, double radius, double depth)
    : x0(x), t0(t), r(radius), c(depth) {
    if (!(radius > 0) || !(depth > 0)) throw Error("cylinder: radius and depth factor must be positive");
}

bool ParabolicCylinder::contains_space(const Point& x, int dim) const {
    double s = 0;
    for (int a = 0; a < dim; ++a) s += (x[a] - x0[a]) * (x[a] - x0[a]);
    return s < r * r;
}

// ---------------------------------------------------------------- operators

double phi_eps(double u, double m, double eps) {
    double um = m == 2.0 ? u * u : (m == 1.0 ? u : std::pow(u, m));
    return um + eps * u;
}

double dphi_eps(double u, double m, double eps) {
    double d = m == 2.0 ? 2 * u : (m == 1.0 ? 1.0 : m * std::pow(u, m - 1));
    return d + eps;
}

namespace {

void require_nonnegative(const ScalarField& u, const char* what) {
    u.require_finite(what);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] < 0) throw Error(std::string(what) + ": negative density at cell " + std::to_string(i));
}

// Visits each interior face of the given axis as (lower cell, upper cell, face index, j).
template <class F>
void for_each_interior_face(const Grid& g, int axis, F&& fn) {
    // cell = below + st (i + n above), face = below + st (j + (n + 1) above)
    const std::size_t n = g.cells_per_axis(), st = g.stride(axis), above = g.cell_count() / (st * n);
    for (std::size_t k = 0; k < above; ++k)
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t c0 = st * (i + n * k), f0 = st * (i + 1 + (n + 1) * k);
            for (std::size_t b = 0; b < st; ++b) fn(c0 + b, c0 + b + st, f0 + b, int(i + 1));
        }
}

}  // namespace

ScalarField laplacian_of_nonlinearity(const ScalarField& u, double m, double eps) {
    require_nonnegative(u, "laplacian_of_nonlinearity");
    const Grid& g = u.grid();
    std::vector<double> phi(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) phi[i] = phi_eps(u[i], m, eps);
    ScalarField out(g);
    const double h = g.spacing();
    for (int a = 0; a < g.axes(); ++a) {
        for_each_interior_face(g, a, [&](std::size_t lo, std::size_t hi, std::size_t, int j) {
            double F = g.face_area(a, j) * (phi[hi] - phi[lo]) / h;
            out[lo] += F;
            out[hi] -= F;
        });
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= g.cell_volume(i);
    return out;
}

ScalarField divergence_of_drift_flux(const ScalarField& u, const VectorField& V) {
    require_nonnegative(u, "divergence_of_drift_flux");
    const Grid& g = u.grid();
    if (!(V.grid() == g)) throw Error("divergence_of_drift_flux: drift and density live on different grids");
    if (V.staggering() != Staggering::Face) throw Error("divergence_of_drift_flux: drift must be in face form");
    ScalarField out(g);
    for (int a = 0; a < g.axes(); ++a) {
        const auto& Vf = V.component(a);
        for_each_interior_face(g, a, [&](std::size_t lo, std::size_t hi, std::size_t f, int j) {
            // Mass moves with velocity -V, so the upwind cell is on the side -V comes from.
            double up = Vf[f] < 0 ? u[lo] : u[hi];
            double q = g.face_area(a, j) * Vf[f] * up;
            out[lo] += q;
            out[hi] -= q;
        });
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= g.cell_volume(i);
    return out;
}

namespace {

double lp_core(const VectorField& V, double p, double q, const std::function<bool(const Point&)>* region) {
    if (!(p >= 1)) throw Error("lp_norm: p must be >= 1");
    const Grid& g = V.grid();
    std::vector<double> terms(g.cell_count(), 0.0);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (region && !(*region)(g.center(i))) continue;
        double mag = norm(V.at_cell(i));
        if (!std::isfinite(mag)) throw Error("lp_norm: non-finite drift at cell " + std::to_string(i));
        if (mag == 0) continue;
        double w = 1.0;
        if (q > 0 && mag > std::numbers::e) w = std::pow(std::log(mag), q);
        terms[i] = g.cell_volume(i) * std::pow(mag, p) * w;
    }
    return std::pow(pairwise_sum(terms), 1.0 / p);
}

}  // namespace

double lp_norm(const VectorField& V, double p) { return lp_core(V, p, 0.0, nullptr); }

double lp_norm(const VectorField& V, double p, const std::function<bool(const Point&)>& region) {
    return lp_core(V, p, 0.0, &region);
}

double lp_logq_norm(const VectorField& V, double p, double q) {
    if (!(q > 0)) throw Error("lp_logq_norm: q must be positive");
    return lp_core(V, p, q, nullptr);
}

// ---------------------------------------------------------------- csv

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double x = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error("cannot parse number '" + s + "'");
    return x;
}

namespace {

std::string snapshot_header(const Grid& g) {
    if (g.radial()) return "r,value";
    static const char* names[] = {"x", "y", "z"};
    std::string h;
    for (int a = 0; a < g.dim(); ++a) h += std::string(names[a]) + ",";
    return h + "value";
}

}  // namespace

void write_snapshot_csv(const std::string& path, const ScalarField& u) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const Grid& g = u.grid();
    out << snapshot_header(g) << '\n';
    for (std::size_t i = 0; i < u.size(); ++i) {
        Point p = g.center(i);
        for (int a = 0; a < g.axes(); ++a) out << format_double(p[a]) << ',';
        out << format_double(u[i]) << '\n';
    }
}

ScalarField read_snapshot_csv(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line != snapshot_header(g)) throw Error(path + ": header '" + line + "' does not match grid");
    ScalarField u(g);
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (i >= u.size()) throw Error(path + ": too many rows");
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (int(cols.size()) != g.axes() + 1) throw Error(path + ": bad column count at row " + std::to_string(i));
        Point p = g.center(i);
        for (int a = 0; a < g.axes(); ++a)
            if (parse_double(cols[a]) != p[a]) throw Error(path + ": coordinates do not match grid at row " + std::to_string(i));
        u[i] = parse_double(cols.back());
        ++i;
    }
    if (i != u.size()) throw Error(path + ": too few rows");
    return u;
}

}  // namespace pmd
