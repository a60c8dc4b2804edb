#include "pmdlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

namespace pmd {

namespace {

ScalarField power_map(const ScalarField& u, double coef, double expo, const char* what) {
    u.require_finite(what);
    ScalarField out(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] < 0) throw Error(std::string(what) + ": negative value at cell " + std::to_string(i));
        out[i] = u[i] == 0 ? 0.0 : coef * std::pow(u[i], expo);
    }
    return out;
}

void require_m(double m, const char* what) {
    if (!(m > 1)) throw Error(std::string(what) + ": m must exceed 1");
}

// Lattice coordinate of x along an axis; snapped onto a cell center when it is
// within round-off of one.
double lattice(const Grid& g, double x) {
    double s = (x - g.face_coordinate(0)) / g.spacing() - 0.5;
    double r = std::round(s);
    return std::abs(s - r) < 1e-9 ? r : s;
}

double interpolate(const ScalarField& u, const Point& x) {
    const Grid& g = u.grid();
    const int n = g.cells_per_axis();
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> fr{0, 0, 0};
    for (int a = 0; a < g.axes(); ++a) {
        double pos = g.radial() ? norm(x) : x[a];
        double s = std::clamp(lattice(g, pos), 0.0, double(n - 1));
        int i = std::min(int(std::floor(s)), n - 2);
        i0[a] = i;
        fr[a] = s - i;
    }
    double val = 0;
    for (int c = 0; c < (1 << g.axes()); ++c) {
        double w = 1;
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < g.axes(); ++a) {
            int bit = (c >> a) & 1;
            idx[a] = i0[a] + bit;
            w *= bit ? fr[a] : 1 - fr[a];
        }
        if (w != 0) val += w * u[g.ravel(idx)];
    }
    return val;
}

double spatial_distance(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

std::string point_text(const SpaceTimePoint& p, int dim) {
    std::ostringstream os;
    for (int a = 0; a < dim; ++a) os << format_double(p.x[a]) << ';';
    os << format_double(p.t);
    return os.str();
}

}  // namespace

ScalarField pressure_transform(const ScalarField& u, double m) {
    require_m(m, "pressure_transform");
    return power_map(u, m / (m - 1), m - 1, "pressure_transform");
}

ScalarField pressure_inverse(const ScalarField& v, double m) {
    require_m(m, "pressure_inverse");
    ScalarField w = power_map(v, 1.0, 1.0, "pressure_inverse");
    for (auto& x : w.values()) x = x == 0 ? 0.0 : std::pow((m - 1) / m * x, 1 / (m - 1));
    return w;
}

ScalarField nu_transform(const ScalarField& u, double m) {
    require_m(m, "nu_transform");
    return power_map(u, 1.0, 1 / m, "nu_transform");
}

ScalarField nu_inverse(const ScalarField& nu, double m) {
    require_m(m, "nu_inverse");
    return power_map(nu, 1.0, m, "nu_inverse");
}

// ---------------------------------------------------------------- space-time

void SpaceTimeField::add(double t, ScalarField f) {
    if (!std::isfinite(t)) throw Error("space-time field: non-finite time");
    if (!times_.empty()) {
        if (!(t > times_.back())) throw Error("space-time field: times must increase strictly");
        if (!(f.grid() == slices_.front().grid())) throw Error("space-time field: snapshots must share one grid");
    }
    times_.push_back(t);
    slices_.push_back(std::move(f));
}

const Grid& SpaceTimeField::grid() const {
    if (slices_.empty()) throw Error("space-time field: empty");
    return slices_.front().grid();
}

double SpaceTimeField::sample(const Point& x, double t) const {
    if (times_.empty()) throw Error("space-time field: empty");
    const double tol = 1e-9 * std::max(1.0, t_end() - t_begin());
    if (t < t_begin() - tol || t > t_end() + tol) throw Error("space-time field: time outside the data range");
    if (times_.size() == 1) return interpolate(slices_[0], x);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t j = std::clamp<std::size_t>(it - times_.begin(), 1, times_.size() - 1);
    double t0 = times_[j - 1], t1 = times_[j];
    double f = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    if (std::abs(t - t0) <= tol) f = 0;
    if (std::abs(t - t1) <= tol) f = 1;
    double a = f == 1 ? 0 : interpolate(slices_[j - 1], x);
    double b = f == 0 ? 0 : interpolate(slices_[j], x);
    return (1 - f) * a + f * b;
}

SpaceTimeField SpaceTimeField::shifted(double c) const {
    SpaceTimeField out = *this;
    for (auto& s : out.slices_)
        for (auto& v : s.values()) v += c;
    return out;
}

SpaceTimeField SpaceTimeField::scaled(double c) const {
    SpaceTimeField out = *this;
    for (auto& s : out.slices_)
        for (auto& v : s.values()) v *= c;
    return out;
}

SpaceTimeField rescale_cylinder(const SpaceTimeField& nu, double r, double w_osc, double m, const RescaleOptions& opt) {
    const Grid& g = nu.grid();
    if (g.radial()) throw Error("rescale_cylinder: box grids only");
    if (!(r > 0) || !(w_osc > 0)) throw Error("rescale_cylinder: r and w_osc must be positive");
    require_m(m, "rescale_cylinder");
    const int d = g.dim();
    const double alpha = (m - 1) / m;
    const double depth = r * r * std::pow(w_osc, -alpha);
    const double t0 = opt.t0.value_or(nu.t_end());
    const double tol = 1e-12 * std::max(1.0, std::abs(t0));
    if (t0 > nu.t_end() + tol || t0 - depth < nu.t_begin() - tol)
        throw Error("rescale_cylinder: cylinder exceeds the data range in time");
    for (int a = 0; a < d; ++a)
        if (opt.x0[a] - r < -g.half_extent() - 1e-12 || opt.x0[a] + r > g.half_extent() + 1e-12)
            throw Error("rescale_cylinder: cylinder exceeds the data range in space");

    int slices = opt.slices;
    if (slices == 0)
        for (double t : nu.times())
            if (t >= t0 - depth - tol && t <= t0 + tol) ++slices;
    slices = std::max(slices, 2);
    const Grid out_grid = Grid::box(d, opt.cells > 0 ? opt.cells : g.cells_per_axis(), 1.0);

    SpaceTimeField out;
    for (int j = 0; j < slices; ++j) {
        const double s = -1.0 + double(j) / (slices - 1);
        const double src_t = std::clamp(t0 + depth * s, nu.t_begin(), nu.t_end());
        ScalarField f(out_grid);
        parallel_for(out_grid.cell_count(), [&](std::size_t b, std::size_t e) {
            for (std::size_t c = b; c < e; ++c) {
                Point x = out_grid.center(c), y = opt.x0;
                for (int a = 0; a < d; ++a) y[a] += r * x[a];
                f[c] = nu.sample(y, src_t);
            }
        });
        out.add(s, std::move(f));
    }
    return out;
}

double oscillation(const SpaceTimeField& w, const ParabolicCylinder& Q) {
    const Grid& g = w.grid();
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!Q.contains_time(w.time(i))) continue;
        const ScalarField& f = w.slice(i);
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            if (Q.contains_space(g.center(c), g.dim())) {
                lo = std::min(lo, f[c]);
                hi = std::max(hi, f[c]);
            }
    }
    if (!(hi >= lo)) throw Error("oscillation: the cylinder contains no samples");
    return hi - lo;
}

// ---------------------------------------------------------------- Hölder

std::string HolderReport::csv() const {
    std::ostringstream os;
    os << "delta,value,p_point,q_point\n"
       << format_double(delta) << ',' << format_double(value) << ',' << point_text(p, 3) << ','
       << point_text(q, 3) << '\n';
    return os.str();
}

HolderReport holder_seminorm(const SpaceTimeField& w, double delta, const HolderOptions& opt) {
    if (!(delta > 0 && delta <= 1)) throw Error("holder_seminorm: delta must lie in (0, 1]");
    const Grid& g = w.grid();
    const int axes = g.axes();

    struct Sample {
        std::size_t slice, cell;
    };
    auto inside = [&](std::size_t i, std::size_t c) {
        if (!opt.region) return true;
        return opt.region->contains_time(w.time(i)) && opt.region->contains_space(g.center(c), g.dim());
    };
    auto lattice_points = [&](int stride) {
        std::vector<Sample> pts;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i % stride) continue;
            for (std::size_t c = 0; c < g.cell_count(); ++c) {
                auto idx = g.unravel(c);
                bool on = true;
                for (int a = 0; a < axes; ++a) on = on && idx[a] % stride == 0;
                if (on && inside(i, c)) pts.push_back({i, c});
            }
        }
        return pts;
    };

    int stride = opt.stride;
    std::vector<Sample> pts;
    if (stride > 0) {
        pts = lattice_points(stride);
    } else {
        stride = 1;
        for (;;) {
            pts = lattice_points(stride);
            if (pts.size() <= opt.max_points || stride > (1 << 20)) break;
            stride *= 2;
        }
    }

    // the extreme-value pair over the whole region
    std::optional<Sample> amax, amin;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            if (!inside(i, c)) continue;
            double v = w.slice(i)[c];
            if (!amax || v > w.slice(amax->slice)[amax->cell]) amax = Sample{i, c};
            if (!amin || v < w.slice(amin->slice)[amin->cell]) amin = Sample{i, c};
        }
    if (!amax) throw Error("holder_seminorm: the region contains no samples");
    for (const Sample& e : {*amax, *amin}) {
        bool dup = std::any_of(pts.begin(), pts.end(), [&](const Sample& s) { return s.slice == e.slice && s.cell == e.cell; });
        if (!dup) pts.push_back(e);
    }

    std::vector<Point> xs(pts.size());
    std::vector<double> ts(pts.size()), vs(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        xs[k] = g.center(pts[k].cell);
        ts[k] = w.time(pts[k].slice);
        vs[k] = w.slice(pts[k].slice)[pts[k].cell];
    }

    struct Best {
        double q = -1;
        std::size_t i = 0, j = 0;
        bool better(const Best& o) const { return q > o.q || (q == o.q && (i < o.i || (i == o.i && j < o.j))); }
    };
    Best best;
    std::mutex mu;
    parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
        Best local;
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                double dist = std::max(spatial_distance(xs[i], xs[j]), std::sqrt(std::abs(ts[i] - ts[j])));
                if (dist == 0) continue;
                Best c{std::abs(vs[i] - vs[j]) / std::pow(dist, delta), i, j};
                if (c.better(local)) local = c;
            }
        std::lock_guard lock(mu);
        if (local.better(best)) best = local;
    });

    HolderReport rep;
    rep.delta = delta;
    rep.points = pts.size();
    rep.stride = stride;
    if (best.q >= 0) {
        rep.value = best.q;
        rep.p = {xs[best.i], ts[best.i]};
        rep.q = {xs[best.j], ts[best.j]};
    }
    return rep;
}

// ---------------------------------------------------------------- level sets

bool LevelSeries::monotone() const {
    auto order = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        return idx;
    };
    auto ok = [](double lo, double hi) { return lo <= hi + 1e-12 * std::max(std::abs(lo), std::abs(hi)); };
    const auto ki = order(thresholds), qi = order(exponents);
    for (std::size_t j = 0; j < exponents.size(); ++j)
        for (std::size_t a = 1; a < ki.size(); ++a) {
            if (!ok(A[ki[a]][j], A[ki[a - 1]][j])) return false;
            if (!ok(B[ki[a - 1]][j], B[ki[a]][j])) return false;
        }
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        for (std::size_t b = 1; b < qi.size(); ++b) {
            if (!ok(A[i][qi[b - 1]], A[i][qi[b]])) return false;
            if (!ok(B[i][qi[b - 1]], B[i][qi[b]])) return false;
        }
    return true;
}

void LevelSeries::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("level series: cannot write " + path);
    os << "k,q,A,B\n";
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        for (std::size_t j = 0; j < exponents.size(); ++j)
            os << format_double(thresholds[i]) << ',' << format_double(exponents[j]) << ',' << format_double(A[i][j])
               << ',' << format_double(B[i][j]) << '\n';
}

LevelSeries level_measures(const SpaceTimeField& w, const std::vector<double>& thresholds,
                           const std::vector<double>& exponents, double radius, Point center) {
    for (double q : exponents)
        if (!(q > 0 && q <= 1)) throw Error("level_measures: exponents must lie in (0, 1]");
    if (w.size() < 2) throw Error("level_measures: need at least two snapshots");
    const double window = w.t_end() - w.t_begin();
    if (window > 1 + 1e-12) throw Error("level_measures: time window longer than 1");
    const Grid& g = w.grid();
    const ParabolicCylinder ball(center, 0.0, radius, 1.0);

    std::vector<std::size_t> cells;
    LevelSeries out;
    for (std::size_t c = 0; c < g.cell_count(); ++c)
        if (ball.contains_space(g.center(c), g.dim())) {
            cells.push_back(c);
            out.ball_measure += g.cell_volume(c);
        }
    out.thresholds = thresholds;
    out.exponents = exponents;
    out.window = window;

    const std::size_t nk = thresholds.size(), nt = w.size();
    // above[k][i], below[k][i]: measures of the super/sub-level sets at slice i
    std::vector<std::vector<double>> above(nk, std::vector<double>(nt)), below(nk, std::vector<double>(nt));
    parallel_for(nt, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t k = 0; k < nk; ++k) {
                double up = 0, down = 0;
                for (std::size_t c : cells) {
                    double v = w.slice(i)[c];
                    if (v > thresholds[k]) up += g.cell_volume(c);
                    if (v < thresholds[k]) down += g.cell_volume(c);
                }
                above[k][i] = up;
                below[k][i] = down;
            }
    });

    std::vector<double> weight(nt, 0.0);
    for (std::size_t i = 0; i + 1 < nt; ++i) {
        double half = 0.5 * (w.time(i + 1) - w.time(i));
        weight[i] += half;
        weight[i + 1] += half;
    }
    auto integrate = [&](const std::vector<double>& f, double q) {
        double s = 0;
        for (std::size_t i = 0; i < nt; ++i)
            if (f[i] > 0) s += weight[i] * std::pow(f[i], q);
        return s > 0 ? std::pow(s, 1 / q) : 0.0;
    };
    out.A.assign(nk, std::vector<double>(exponents.size()));
    out.B = out.A;
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t j = 0; j < exponents.size(); ++j) {
            out.A[k][j] = integrate(above[k], exponents[j]);
            out.B[k][j] = integrate(below[k], exponents[j]);
        }
    return out;
}

}  // namespace pmd
