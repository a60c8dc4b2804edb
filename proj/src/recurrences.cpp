#include "pmdlab/recurrences.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pmdlab/grid.hpp"

namespace pmd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFloor = -700;

double log_add(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
}

}  // namespace

double iteration_exponent(int k, double a) {
    if (!(a > -1)) throw Error("iteration: a must exceed -1");
    if (k < 0) throw Error("iteration: negative index");
    return std::ldexp(a + 1, k) - a;
}

AppendixAResult run_appendix_a(const AppendixAConfig& cfg) {
    if (!(cfg.C0 > 0)) throw Error("appendix A: C0 must be positive");
    if (!(cfg.C1 >= 0)) throw Error("appendix A: C1 must be nonnegative");
    if (!(cfg.M > 0)) throw Error("appendix A: M must be positive");
    if (cfg.K < 0 || cfg.K > 1000) throw Error("appendix A: K must lie in [0, 1000]");
    AppendixAResult r;
    r.config = cfg;
    r.C2 = cfg.C2.value_or(std::max(cfg.C1, 1.0) * (1 + cfg.M) * (1 + 1 / cfg.C0));
    if (!(r.C2 > 0)) throw Error("appendix A: C2 must be positive");
    const double lC2 = std::log(r.C2);

    double lM = std::log(cfg.M), c = 1;
    for (int k = 0; k <= cfg.K; ++k) {
        const double n = iteration_exponent(k, cfg.a);
        if (!std::isfinite(n)) throw Error("appendix A: n_k overflows");
        if (k > 0) {
            lM = log_add(n * lC2, k * lC2 + (2 + cfg.C1 / n) * lM);
            c = (2 + cfg.C1 / n) * c + k + 1;
        }
        r.n.push_back(n);
        r.log_M.push_back(lM);
        r.normalized.push_back(std::exp(lM / n));
        r.c.push_back(c);
        r.sup_normalized = std::max(r.sup_normalized, r.normalized.back());
        r.sup_c_over_n = std::max(r.sup_c_over_n, c / n);
    }
    // Induction M_k <= C3^{c_k}: C3 = max(C2^rho, M, 2) with rho = max(1, sup n_k/(c_k - 1))
    // covers C2^{n_k} <= C3^{c_k - 1} and C2^k C3^{c_k - k - 1} <= C3^{c_k - 1}.
    double rho = 1;
    for (int k = 1; k <= cfg.K; ++k) rho = std::max(rho, r.n[k] / (r.c[k] - 1));
    const double lC3 = std::max({rho * lC2, std::log(cfg.M), std::log(2.0)});
    r.recorded_bound = std::exp(lC3 * r.sup_c_over_n);
    const auto& B = r.normalized;
    for (int k = cfg.K; k >= 1; --k) {
        if (std::abs(B[k] - B[k - 1]) > 1e-10 * B[k]) break;
        r.plateau_from = k - 1;
    }
    return r;
}

std::string AppendixAResult::text() const {
    std::ostringstream os;
    os << "appendix A: C0=" << format_double(config.C0) << " C1=" << format_double(config.C1)
       << " a=" << format_double(config.a) << " M=" << format_double(config.M) << " K=" << config.K
       << " C2=" << format_double(C2) << "\n  sup_k M_k^(1/n_k)=" << format_double(sup_normalized)
       << " recorded bound=" << format_double(recorded_bound) << " plateau from k=" << plateau_from
       << "\n  sup_k c_k/n_k=" << format_double(sup_c_over_n) << '\n';
    return os.str();
}

void AppendixAResult::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("appendix A: cannot write " + path);
    os << "k,n_k,log_M_k,B_k,c_k\n";
    for (std::size_t k = 0; k < n.size(); ++k)
        os << k << ',' << format_double(n[k]) << ',' << format_double(log_M[k]) << ',' << format_double(normalized[k])
           << ',' << format_double(c[k]) << '\n';
}

double critical_exponent(int d) {
    if (d < 2) throw Error("appendix B: d must be at least 2");
    return d + 4.0 / (d + 2);
}

double appendix_b_exponent(int d, double p) {
    if (d < 2) throw Error("appendix B: d must be at least 2");
    if (!(p > 2)) throw Error("appendix B: p must exceed 2");
    const double q1 = 1 - 2 / p;
    return 2.0 / (d + 2) + 2.0 / d * q1 / (1 - q1);
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Converges: return "CONVERGES";
    case Verdict::Stalls: return "STALLS";
    case Verdict::Diverges: return "DIVERGES";
    }
    return "?";
}

AppendixBResult run_appendix_b(const AppendixBConfig& cfg) {
    if (cfg.d < 2) throw Error("appendix B: d must be at least 2");
    if (!(cfg.p > 2)) throw Error("appendix B: p must exceed 2");
    if (!(cfg.C1 > 0)) throw Error("appendix B: C1 must be positive");
    if (!(cfg.a0 >= 0 && cfg.a0 < 1)) throw Error("appendix B: a0 must lie in [0, 1)");
    if (cfg.N < 1) throw Error("appendix B: N must be positive");
    const double d = cfg.d, q1 = 1 - 2 / cfg.p, q2 = 1 - 1 / cfg.p, lC = std::log(cfg.C1);

    AppendixBResult r;
    r.config = cfg;
    double la = cfg.a0 == 0 ? kNegInf : std::log(cfg.a0), lb = la;
    r.log_a.push_back(la);
    r.log_b.push_back(lb);
    if (la == kNegInf) {
        r.verdict = Verdict::Converges;
        return r;
    }
    for (int n = 0; n < cfg.N; ++n) {
        const double nb = n * lC + log_add(la * (q2 + 2 / d), la * 2 / d + lb * q1);
        const double na = n * lC + log_add(la * (q2 + 2 / (d + 2)), lb * q1 + la * 2 / (d + 2));
        la = na;
        lb = nb;
        r.log_a.push_back(la);
        r.log_b.push_back(lb);
        r.steps = n + 1;
        if (la >= 0 || !std::isfinite(la)) {
            r.verdict = Verdict::Diverges;
            return r;
        }
        if (la <= kFloor && r.log_a.size() > 10) {
            bool decreasing = true;
            for (std::size_t i = r.log_a.size() - 10; i < r.log_a.size(); ++i)
                decreasing = decreasing && r.log_a[i] <= r.log_a[i - 1];
            if (decreasing) {
                r.verdict = Verdict::Converges;
                return r;
            }
        }
    }
    r.verdict = Verdict::Stalls;
    return r;
}

std::string AppendixBResult::text() const {
    std::ostringstream os;
    os << "appendix B: d=" << config.d << " p=" << format_double(config.p) << " C1=" << format_double(config.C1)
       << " a0=" << format_double(config.a0) << " -> " << to_string(verdict) << " after " << steps
       << " steps, log a_n=" << format_double(final_log_a()) << '\n';
    return os.str();
}

ThresholdScan threshold_scan(int d, double C1, const std::vector<double>& a0s, const std::vector<double>& ps, int N) {
    ThresholdScan s;
    s.d = d;
    s.C1 = C1;
    s.a0s = a0s;
    s.ps = ps;
    s.entries.resize(a0s.size() * ps.size());
    parallel_for(s.entries.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double a0 = a0s[i / ps.size()], p = ps[i % ps.size()];
            auto r = run_appendix_b({d, p, C1, a0, N});
            s.entries[i] = {p, a0, r.verdict, r.final_log_a()};
        }
    });
    for (std::size_t ia = 0; ia < a0s.size(); ++ia) {
        double best = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t ip = 0; ip < ps.size(); ++ip)
            if (s.at(ia, ip).verdict == Verdict::Converges && !(ps[ip] >= best)) best = ps[ip];
        s.frontier.push_back(best);
    }
    return s;
}

bool ThresholdScan::frontier_ok() const {
    const double pstar = critical_exponent(d);
    for (std::size_t i = 0; i < a0s.size(); ++i) {
        if (frontier[i] < pstar - 0.05) return false;
        for (std::size_t j = 0; j < a0s.size(); ++j) {
            if (!(a0s[j] < a0s[i])) continue;
            // smaller a0: every converging p still converges
            for (std::size_t ip = 0; ip < ps.size(); ++ip)
                if (at(i, ip).verdict == Verdict::Converges && at(j, ip).verdict != Verdict::Converges) return false;
        }
    }
    return true;
}

void ThresholdScan::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("threshold scan: cannot write " + path);
    os << "d,p,a0,verdict,final_log_a\n";
    for (const auto& e : entries)
        os << d << ',' << format_double(e.p) << ',' << format_double(e.a0) << ',' << to_string(e.verdict) << ','
           << format_double(e.final_log_a) << '\n';
}

}  // namespace pmd
