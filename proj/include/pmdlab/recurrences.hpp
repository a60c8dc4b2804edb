#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pmd {

// n_{k+1} = 2 n_k + a, n_0 = 1, i.e. n_k = 2^k (a + 1) - a.
double iteration_exponent(int k, double a);

struct AppendixAConfig {
    double C0 = 1;
    double C1 = 1;  // 0 is accepted (pure doubling of c_k)
    double a = 0;
    double M = 2;   // bound of B_k(0) and B_0(t)
    int K = 1000;
    std::optional<double> C2;  // default max(C1, 1) (1 + M) (1 + 1/C0)
};

struct AppendixAResult {
    AppendixAConfig config;
    double C2 = 0;
    // C3^{sup c_k/n_k}, C3 the constant of the induction M_k <= C3^{c_k}
    double recorded_bound = 0;
    std::vector<double> n, log_M, normalized, c;
    double sup_normalized = 0;
    double sup_c_over_n = 0;
    int plateau_from = -1;  // first k after which B_k moves by < 1e-10 relative

    bool bounded() const { return sup_normalized <= recorded_bound && plateau_from >= 0; }
    std::string text() const;
    void write_csv(const std::string& path) const;
};

// M_0 = M, M_k = C2^{n_k} + C2^k M_{k-1}^{2 + C1/n_k} and c_0 = 1,
// c_k = (2 + C1/n_k) c_{k-1} + k + 1, carried as logarithms.
AppendixAResult run_appendix_a(const AppendixAConfig& cfg);

// p* = d + 4/(d+2) and the limiting exponent 2/(d+2) + (2/d) q1/(1 - q1),
// which exceeds 1 exactly when p > p*.
double critical_exponent(int d);
double appendix_b_exponent(int d, double p);

enum class Verdict { Converges, Stalls, Diverges };
std::string to_string(Verdict v);

struct AppendixBConfig {
    int d = 2;
    double p = 3.5;
    double C1 = 1;
    double a0 = 1e-6;  // = b_0
    int N = 5000;
};

struct AppendixBResult {
    AppendixBConfig config;
    std::vector<double> log_a, log_b;
    // Converges: log a_n at or below -700 and decreasing over the last 10 steps.
    // Diverges: a_n left (0, 1). Stalls: neither within N steps.
    Verdict verdict = Verdict::Stalls;
    int steps = 0;

    double final_log_a() const { return log_a.back(); }
    std::string text() const;
};

// b_{n+1} = C1^n (a_n^{q2 + 2/d} + a_n^{2/d} b_n^{q1}),
// a_{n+1} = C1^n (a_n^{q2 + 2/(d+2)} + b_n^{q1} a_n^{2/(d+2)}), q1 = 1 - 2/p, q2 = 1 - 1/p.
AppendixBResult run_appendix_b(const AppendixBConfig& cfg);

struct ScanEntry {
    double p, a0;
    Verdict verdict;
    double final_log_a;
};

struct ThresholdScan {
    int d = 2;
    double C1 = 1;
    std::vector<double> a0s, ps;
    std::vector<ScanEntry> entries;  // a0-major
    // least p with Converges for each a0 (NaN when none)
    std::vector<double> frontier;

    const ScanEntry& at(std::size_t ia, std::size_t ip) const { return entries[ia * ps.size() + ip]; }
    // Smaller a0 never shrinks the converging set, and no frontier lies below p* - 0.05.
    bool frontier_ok() const;
    void write_csv(const std::string& path) const;
};

ThresholdScan threshold_scan(int d, double C1, const std::vector<double>& a0s, const std::vector<double>& ps,
                             int N = 5000);

}  // namespace pmd
