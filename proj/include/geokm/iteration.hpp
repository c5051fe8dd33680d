#pragma once

#include "geokm/geometry.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace geokm {

// T with d(T^n x, T^n y) <= (1 + k_n) d(x, y), k_n >= 0, sum k_n <= K.
// The k-sum cap is enforced lazily: whichever routine queries k keeps a
// running sum and raises hypothesis_error past K + 1e-12.
struct Mapping {
    std::string name;
    std::function<Point(const Point&)> apply;
    std::function<double(std::int64_t)> k;
    double K = 0.0;
};

// lambda_n in [1/L, 1 - 1/L], L >= 2; checked at query time.
struct Schedule {
    std::function<double(std::int64_t)> lambda;
    int L = 2;
};

Schedule constant_schedule(double lam, int L);
// {"lambda": "const:0.5" | "table:[...]", "L": 2}; table entries repeat the
// last value past the end.
Schedule schedule_from_config(const nlohmann::json& config);

// Anchor p with declared d(x0, p) <= b and d(Tp, p) <= delta, both verified
// numerically (tol 1e-12) at construction.
struct AnchorPoint {
    Point p;
    double b = 0.0;
    double delta = 0.0;
};

AnchorPoint make_anchor(const Space& s, const Mapping& t, const Point& x0, const Point& p,
                        std::optional<double> b = std::nullopt,
                        std::optional<double> delta = std::nullopt);

Point apply_power(const Mapping& t, std::int64_t n, Point x);
double residual(const Space& s, const Mapping& t, const Point& x);

// x_0 .. x_S with the per-index residual d(x_n, T x_n), power residual
// d(T^n x_n, x_n), queried lambda_n / k_n, and anchor distances.
struct Trace {
    std::vector<Point> points;
    std::vector<double> lambda;
    std::vector<double> k;
    std::vector<double> residual;
    std::vector<double> power_residual;
    std::vector<double> dist_anchor;
    bool has_anchor = false;

    std::int64_t steps() const { return static_cast<std::int64_t>(points.size()) - 1; }
};

// x_{n+1} = W(x_n, T^n x_n, lambda_n). T^n is recomputed by n-fold
// application each step (O(S^2) applications total). Non-finite coordinates
// raise numeric_error naming the step.
Trace km_iterate(const Space& s, const Mapping& t, const Schedule& sched, const Point& x0,
                 std::int64_t steps, const AnchorPoint* anchor = nullptr);

// Sampled check of d(T^n x, T^n y) <= (1 + k_n) d(x, y) for n <= n_max.
SampleReport validate_mapping(const Space& s, const Mapping& t, std::uint64_t seed,
                              std::int64_t n_max, long pairs, double tol);

struct FamilyAudit {
    std::string family;
    double worst_margin = 0.0; // max over steps of lhs - rhs; <= tol passes
    std::int64_t worst_step = -1;
    bool pass = false;
};

struct AuditReport {
    std::vector<FamilyAudit> families;
    double reconstruction_max = 0.0;
    std::int64_t steps = 0;
    bool pass = false;
};

nlohmann::json audit_report_to_json(const AuditReport& r);

// Re-derives every step and checks, per n:
//   power-residual-step: d(T^n x_{n+1}, x_{n+1}) <= (1+k_n) d(T^n x_n, x_n)
//   iterate-residual:    rho_{n+1} <= d(T^{n+1} x_{n+1}, x_{n+1}) + (1+K)^2 d(T^n x_n, x_n)
//   anchored-recurrence: d(x_{n+1}, p) <= (1+k_n) d(x_n, p) + d(T^n p, p)
//   conditional-residual: rho_{n+1} <= (1+(1+K)^2(2+K)) alpha* + (1+K^2) gamma*
// where alpha* is the smallest premise threshold the step satisfies and
// gamma* = max(d(Tp,p), d(T^n p,p)). Recorded columns and points must agree
// with recomputation to 1e-12 (integrity_error otherwise). Anchored families
// are skipped when the trace has no anchor.
AuditReport trace_inequality_audit(const Space& s, const Mapping& t, const Trace& trace,
                                   const AnchorPoint* anchor, double K, double tol);

// Built-in mappings. All close over the space by reference; the space must
// outlive the mapping.
Mapping make_constant_mapping(const Space& s, const Point& target);
Mapping make_identity_mapping();
// Euclidean (dim >= 2, rotates the first two coordinates) or disk (rotation
// about the center); both are isometries.
Mapping make_rotation_mapping(const Space& s, double angle);
// Cyclic shift of the arms around vertex 0; verified at construction to be a
// weight-preserving automorphism.
Mapping make_tree_rotation_mapping(const Space& s, int shift);
// x -> the point at distance min(cap, d(x, target)) from x toward target;
// nonexpansive (k = 0).
Mapping make_toward_mapping(const Space& s, const Point& target, double cap);

// {"name": "constant"|"identity"|"rotation"|"tree-rotation"|"toward", ...,
//  "k": {"kind":"zero"|"geometric"|"table", ...}, "K": cap}
Mapping mapping_from_config(const Space& s, const nlohmann::json& config);

void write_trace_csv(const Trace& trace, const std::string& path);
// The residual column of a trace CSV, in order.
std::vector<double> read_residual_csv(const std::string& path);

} // namespace geokm
