#pragma once

#include "geokm/exact.hpp"
#include "geokm/moduli.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace geokm {

// Counterfunction mini-language: "zero", "successor", "const:c",
// "linear:a,b" (a*n + b), "table:[v0,v1,...]" (0 past the end).
// All values are nonnegative integers.
class GFunc {
  public:
    static GFunc parse(const std::string& spec);
    static GFunc zero();

    BigInt operator()(const BigInt& n) const;
    std::int64_t at_i64(std::int64_t n) const; // resource_error on overflow

    bool is_affine() const { return !is_table_; }
    const BigInt& affine_a() const { return a_; }
    const BigInt& affine_b() const { return b_; }
    const std::vector<std::int64_t>& table() const { return table_; }
    const std::string& spec() const { return spec_; }

  private:
    GFunc() = default;
    bool is_table_ = false;
    BigInt a_ = 0;
    BigInt b_ = 0;
    std::vector<std::int64_t> table_;
    std::string spec_ = "zero";
};

// Additive constant in the M numerator: the published 11/2, or the 10 the
// underlying derivation supports without slack.
enum class MVariant { paper, strict };

// Whether theta uses eta or its factored form eta_tilde.
enum class ThetaRoute { eta, eta_tilde };

std::string variant_name(MVariant v);

// f(K) = 2 (1 + (1+K)^2 (2+K)), exact.
BigRat f_of_K(const BigRat& K);

struct ThetaInfo {
    BigRat f_k;
    RatInterval d_bound; // D = e^K (b + 2)
    RatInterval theta;
};

// theta = eps / (L^2 f(K)) * eta((1+K)D + 1, eps / (f(K)((1+K)D + 1))).
// Domain: K >= 0, L >= 2, b > 0, eps in (0, 1]. `terms` controls the e^K
// enclosure width. Guarantees theta < 1 and the inner eps argument < 1/2.
ThetaInfo compute_theta(const BigRat& K, long L, const BigRat& b, const BigRat& eps,
                        const Modulus& m, ThetaRoute route, int terms = 32);

struct BoundInputs {
    BigRat K;
    long L = 2;
    BigRat b;
    BigRat eps;
    GFunc g = GFunc::zero();
    const Modulus* modulus = nullptr; // defaults to cat0
    ThetaRoute route = ThetaRoute::eta;
    MVariant variant = MVariant::paper;
};

// M = ceil(3 (5KD + D + c) / theta), certified by interval refinement.
BigInt compute_m(const BoundInputs& in);

struct BoundReport {
    std::string formula; // "general" | "asymptotic-regularity" | "cat0-closed" | "cat0-derived"
    MVariant variant = MVariant::paper;
    ThetaRoute route = ThetaRoute::eta;
    BigRat f_k;
    RatInterval d_bound;
    RatInterval theta; // empty meaning for cat0-closed (closed form skips theta)
    bool has_theta = true;
    BigInt m_count;
    std::string g_spec;
    BigInt phi;
    BigInt phi_lower; // 2M, always certified
};

nlohmann::json bound_report_to_json(const BoundReport& r);

// How h is iterated: the fixed-point horizon h(n) = g(n+1)+n+2, or the
// window form h(n) = g(n)+n.
enum class HKind { horizon, window };

// h^M(0) exactly. Affine g uses closed forms, table g a constant tail
// shortcut; the budget caps both loop steps and result size (bits/8).
BigInt iterate_h(const GFunc& g, const BigInt& m, HKind kind, std::int64_t budget);

// h^M(0) >= n, decided without materializing h^M(0).
bool phi_at_least(const GFunc& g, const BigInt& m, const BigInt& n);

// The guaranteed-witness values h^i(0) + offset for i < m, up to `cap`.
// offset is 1 for the horizon form, 0 for the window form.
std::vector<std::int64_t> h_candidates(const GFunc& g, const BigInt& m, HKind kind,
                                       std::int64_t cap);

// Full metastability bound; throws resource_error when phi cannot be
// materialized within the budget.
BoundReport compute_phi_metastable(const BoundInputs& in, std::int64_t budget = 10000000);

// g == 0 specialization, phi = 2M.
BoundReport compute_phi_asreg(const BigRat& K, long L, const BigRat& b, const BigRat& eps,
                              const Modulus& m, ThetaRoute route = ThetaRoute::eta,
                              MVariant variant = MVariant::paper);

// CAT(0) closed forms: first the published
//   M = ceil(24 L^2 (5KD + D + c) f(K)^3 ((1+K)D+1)^2 / eps^2),
// then the tighter eta_tilde-derived
//   M = ceil(3 (5KD + D + c) / theta_tilde).
// The first dominates the second (factor f(K)((1+K)D+1)); asserted.
std::pair<BoundReport, BoundReport> compute_phi_cat0(const BigRat& K, long L,
                                                     const BigRat& d_c, const BigRat& eps,
                                                     MVariant variant = MVariant::paper);

// For a nonincreasing-enough nonnegative sequence: M = ceil(a0 / eps) and
// Theta = max{g^i(0) : i <= M}, the horizon within which some consecutive
// pair of g-iterates drops by at most eps.
struct BasicLemmaBound {
    BigInt m_count;
    BigInt theta_cap;
};

BasicLemmaBound basic_lemma_bound(const BigRat& a0, const BigRat& eps, const GFunc& g,
                                  std::int64_t budget = 10000000);

// Finds i < M with a[g^i(0)] - a[g^{i+1}(0)] <= eps. Requires the sequence
// defined up to Theta and nonnegative there (hypothesis_error otherwise);
// counterexample_error if no i works, which the telescoping argument rules
// out.
struct BasicLemmaWitness {
    BigInt index;       // i
    std::int64_t start; // g^i(0)
    double drop;
};

BasicLemmaWitness verify_basic_lemma_on_sequence(std::span<const double> a, double eps,
                                                 const GFunc& g, std::int64_t budget = 10000000);

struct QihouInputs {
    BigRat a1, b1, c1; // a_0 <= A1, sum b <= B1, sum c <= C1
    BigRat a2, b2, c2;
    BigRat theta;      // > 0
    GFunc g = GFunc::zero();
};

struct QihouBound {
    BigInt m_count;
    BigInt psi;
    RatInterval d1; // (A1 + C1) e^{B1}
    RatInterval d2;
};

// Psi = h^M(0) with h(n) = g(n)+n and
// M = ceil(3 (4 B1 D1 + 4 C1 + D1 + 4 B2 D2 + 4 C2 + D2) / theta).
QihouBound quant_qihou_psi(const QihouInputs& in, std::int64_t budget = 10000000);

struct WindowScan {
    enum class Status { found, not_found, inconclusive };
    Status status = Status::not_found;
    std::int64_t n = -1;     // first window start that works
    std::int64_t skipped = 0; // windows extending past the trace
};

// First N with residuals[m] < eps for every m in [N, N+g(N)], N <= cap.
// Windows sticking out past the data are skipped; if nothing passed but some
// were skipped the scan is inconclusive rather than failed.
WindowScan find_metastable_window(std::span<const double> residuals, double eps,
                                  const GFunc& g, std::int64_t cap);

struct QihouSeqResult {
    BigInt candidate_index; // i with N = h^i(0)
    std::int64_t n;
    double osc_a;     // max oscillation of a on [N, N+g(N)]
    double osc_alpha;
};

// Checks the recurrences x_{n+1} <= (1+b_n) x_n + c_n, the budget sums and
// the D_i caps up to Psi + 1 (hypothesis_error naming the first bad index),
// then scans the guaranteed candidates N = h^i(0), i < M for a window where
// both sequences oscillate by at most theta. counterexample_error if none
// works.
QihouSeqResult verify_qihou_on_sequences(std::span<const double> a, std::span<const double> b,
                                         std::span<const double> c,
                                         std::span<const double> alpha,
                                         std::span<const double> beta,
                                         std::span<const double> gamma,
                                         const QihouInputs& in, double tol = 1e-9,
                                         std::int64_t budget = 10000000);

} // namespace geokm
