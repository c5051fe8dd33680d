#pragma once

#include "geokm/expr.hpp"
#include "geokm/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geokm {

struct ModulusWarning {
    double r = 0.0;
    double eps = 0.0;
    double value = 0.0; // pre-clamp value > 1
};

// Modulus of uniform convexity eta(r, eps), optionally factored as
// eta(r, eps) = eps * eta_tilde(r, eps). Values are clamped to (0, 1]:
// values > 1 clamp to 1 (warnings collected on a construction-time grid),
// values <= 0 are domain errors.
class Modulus {
  public:
    Modulus(std::string name, Expr eta, std::optional<Expr> eta_tilde, bool monotone);

    const std::string& name() const { return name_; }
    bool monotone() const { return monotone_; }
    bool has_tilde() const { return eta_tilde_.has_value(); }
    const std::vector<ModulusWarning>& warnings() const { return warnings_; }

    // Domain: r > 0, eps in (0, 2].
    double eval(double r, double eps) const;
    double eval_tilde(double r, double eps) const;

    RatInterval eval_exact(const RatInterval& r, const RatInterval& eps) const;
    RatInterval eval_tilde_exact(const RatInterval& r, const RatInterval& eps) const;

    const Expr& eta_expr() const { return eta_; }
    const Expr* tilde_expr() const { return eta_tilde_ ? &*eta_tilde_ : nullptr; }

  private:
    std::string name_;
    Expr eta_;
    std::optional<Expr> eta_tilde_;
    bool monotone_;
    std::vector<ModulusWarning> warnings_;
};

// eta(r, eps) = eps^2 / 8 with eta_tilde = eps / 8; monotone.
Modulus cat0_modulus();

// {"name": "cat0"} or {"name": ..., "eta": "<expr in r, eps>",
// "eta_tilde": "<expr>"?, "monotone": bool}. When eta_tilde is given,
// eta == eps * eta_tilde is checked exactly on a grid.
Modulus modulus_from_config(const nlohmann::json& config);

double eval_modulus(const Modulus& m, double r, double eps);

// (1 - 2 lambda (1 - lambda) eta(r, eps)) * r: the radius shrink factor a
// lambda-combination of two points of B(a, r) at distance >= eps*r enjoys.
double combination_bound(const Modulus& m, double r, double eps, double lambda);

// Same bound evaluated at an enlarged radius s >= r (monotone moduli only
// make this weaker): (1 - 2 lambda (1 - lambda) eta(s, eps*r/s)) * s.
double combination_bound_rescaled(const Modulus& m, double r, double eps, double lambda,
                                  double s);

// eta nonincreasing in r at every grid eps.
bool verify_monotone(const Modulus& m, std::span<const double> r_grid,
                     std::span<const double> eps_grid);
bool verify_monotone(const Modulus& m);

struct PremiseTuple {
    Point a, x, y;
    double r = 0.0;
    double eps = 0.0;
    double separation = 0.0; // d(x, y) >= eps * r
};

// Constructive sampler: pulls x, y toward a so d(a,.) <= r holds by
// construction, then picks eps <= min(2, d(x,y)/r). Returns nothing when the
// tuple degenerates (x ~ y).
std::optional<PremiseTuple> sample_premise_tuple(const Space& s, Rng& rng);

struct ModulusReport {
    long samples = 0;
    long premise_satisfying = 0;
    double max_violation = 0.0;
    bool pass = false;
    std::string witness; // worst tuple, for diagnosing failures
};

nlohmann::json modulus_report_to_json(const ModulusReport& r);

// Samples premise tuples and checks both the general-lambda combination bound
// and the midpoint form d(mid, a) <= (1 - eta(r, eps)) r.
ModulusReport verify_modulus(const Space& s, const Modulus& m, std::uint64_t seed,
                             long samples, double tol);

} // namespace geokm
