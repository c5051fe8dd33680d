#include "geokm/moduli.hpp"

#include "geokm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace geokm {

namespace {

constexpr double kGridR[] = {0.1, 1.0, 10.0, 100.0};
constexpr double kGridEps[] = {0.01, 0.1, 0.5, 1.0, 1.5, 2.0};

void check_domain(double r, double eps) {
    if (!(r > 0.0)) throw std::domain_error("modulus radius must be positive");
    if (!(eps > 0.0 && eps <= 2.0)) throw std::domain_error("modulus eps must lie in (0, 2]");
}

} // namespace

Modulus::Modulus(std::string name, Expr eta, std::optional<Expr> eta_tilde, bool monotone)
    : name_(std::move(name)), eta_(std::move(eta)), eta_tilde_(std::move(eta_tilde)),
      monotone_(monotone) {
    for (double r : kGridR)
        for (double eps : kGridEps) {
            const double v = eta_.eval(r, eps);
            if (v > 1.0) warnings_.push_back({r, eps, v});
        }
}

double Modulus::eval(double r, double eps) const {
    check_domain(r, eps);
    const double v = eta_.eval(r, eps);
    if (!(v > 0.0)) throw std::domain_error("modulus value must be positive");
    return std::min(v, 1.0);
}

double Modulus::eval_tilde(double r, double eps) const {
    if (!eta_tilde_) throw std::domain_error("modulus '" + name_ + "' has no eta_tilde factor");
    check_domain(r, eps);
    const double v = eta_tilde_->eval(r, eps);
    if (!(v > 0.0)) throw std::domain_error("modulus eta_tilde value must be positive");
    return std::min(v, 1.0);
}

RatInterval Modulus::eval_exact(const RatInterval& r, const RatInterval& eps) const {
    if (!(r.lo > 0)) throw std::domain_error("modulus radius must be positive");
    if (!(eps.lo > 0 && eps.hi <= 2)) throw std::domain_error("modulus eps must lie in (0, 2]");
    const RatInterval v = eta_.eval_interval(r, eps);
    if (!(v.lo > 0)) throw std::domain_error("modulus value must be positive");
    return v.clamp_above_one();
}

RatInterval Modulus::eval_tilde_exact(const RatInterval& r, const RatInterval& eps) const {
    if (!eta_tilde_) throw std::domain_error("modulus '" + name_ + "' has no eta_tilde factor");
    if (!(r.lo > 0)) throw std::domain_error("modulus radius must be positive");
    if (!(eps.lo > 0 && eps.hi <= 2)) throw std::domain_error("modulus eps must lie in (0, 2]");
    const RatInterval v = eta_tilde_->eval_interval(r, eps);
    if (!(v.lo > 0)) throw std::domain_error("modulus eta_tilde value must be positive");
    return v.clamp_above_one();
}

Modulus cat0_modulus() {
    return Modulus("cat0", Expr::parse("eps^2/8"), Expr::parse("eps/8"), true);
}

Modulus modulus_from_config(const nlohmann::json& config) {
    if (!config.is_object()) throw config_error("modulus config must be an object");
    const std::string name = config.value("name", std::string("custom"));
    if (name == "cat0" && !config.contains("eta")) return cat0_modulus();
    if (!config.contains("eta") || !config["eta"].is_string())
        throw config_error("custom modulus needs an 'eta' expression string");
    Expr eta = Expr::parse(config["eta"].get<std::string>());
    std::optional<Expr> tilde;
    if (config.contains("eta_tilde")) {
        if (!config["eta_tilde"].is_string()) throw config_error("'eta_tilde' must be a string");
        tilde = Expr::parse(config["eta_tilde"].get<std::string>());
        // eta == eps * eta_tilde must hold identically; both are rational
        // expressions, so grid equality is checked exactly.
        for (int rnum : {1, 3, 7, 50})
            for (int epsnum : {1, 2, 3, 4}) {
                const RatInterval r = RatInterval::exact(BigRat(rnum, 2));
                const RatInterval e = RatInterval::exact(BigRat(epsnum, 2));
                const RatInterval lhs = eta.eval_interval(r, e);
                const RatInterval rhs = RatInterval::exact(BigRat(epsnum, 2)) *
                                        tilde->eval_interval(r, e);
                if (!lhs.is_exact() || !rhs.is_exact() || lhs.lo != rhs.lo)
                    throw config_error("eta_tilde does not factor eta as eps * eta_tilde");
            }
    }
    const bool monotone = config.value("monotone", false);
    return Modulus(name, std::move(eta), std::move(tilde), monotone);
}

double eval_modulus(const Modulus& m, double r, double eps) { return m.eval(r, eps); }

double combination_bound(const Modulus& m, double r, double eps, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::domain_error("combination parameter must lie in [0, 1]");
    check_domain(r, eps);
    return (1.0 - 2.0 * lambda * (1.0 - lambda) * m.eval(r, eps)) * r;
}

double combination_bound_rescaled(const Modulus& m, double r, double eps, double lambda,
                                  double s) {
    if (s < r) throw std::domain_error("rescaled radius must satisfy s >= r");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::domain_error("combination parameter must lie in [0, 1]");
    check_domain(r, eps);
    return (1.0 - 2.0 * lambda * (1.0 - lambda) * m.eval(s, eps * r / s)) * s;
}

bool verify_monotone(const Modulus& m, std::span<const double> r_grid,
                     std::span<const double> eps_grid) {
    for (double eps : eps_grid) {
        double prev = std::numeric_limits<double>::infinity();
        std::vector<double> rs(r_grid.begin(), r_grid.end());
        std::sort(rs.begin(), rs.end());
        for (double r : rs) {
            const double v = m.eval(r, eps);
            if (v > prev + 1e-15) return false;
            prev = v;
        }
    }
    return true;
}

bool verify_monotone(const Modulus& m) {
    return verify_monotone(m, kGridR, kGridEps);
}

std::optional<PremiseTuple> sample_premise_tuple(const Space& s, Rng& rng) {
    const Point a = sample_point(s, rng);
    const Point u = sample_point(s, rng);
    const Point v = sample_point(s, rng);
    const double du = dist(s, a, u);
    const double dv = dist(s, a, v);
    if (du < 1e-9 || dv < 1e-9) return std::nullopt;
    // Radius scale: around the reach of the sampled points, sometimes beyond.
    const double base = std::max(du, dv);
    const double r = base * std::exp(rng.uniform(-2.0, 0.5));
    const Point x = combine(s, a, u, std::min(1.0, r / du));
    const Point y = combine(s, a, v, std::min(1.0, r / dv));
    const double sep = dist(s, x, y);
    if (sep < 1e-9) return std::nullopt;
    const double emax = std::min(2.0, sep / r);
    if (emax < 1e-9) return std::nullopt;
    double eps;
    const auto mode = rng.integer(4);
    if (mode == 0) {
        eps = emax; // the extreme premise, where invalid moduli break first
    } else {
        eps = emax * std::max(rng.unit(), 1e-12);
    }
    if (eps <= 0.0) return std::nullopt;
    return PremiseTuple{a, x, y, r, eps, sep};
}

nlohmann::json modulus_report_to_json(const ModulusReport& r) {
    return nlohmann::json{{"samples", r.samples},
                          {"premise_satisfying", r.premise_satisfying},
                          {"max_violation", r.max_violation},
                          {"pass", r.pass},
                          {"witness", r.witness}};
}

ModulusReport verify_modulus(const Space& s, const Modulus& m, std::uint64_t seed,
                             long samples, double tol) {
    Rng rng(seed);
    ModulusReport rep;
    rep.samples = samples;
    for (long i = 0; i < samples; ++i) {
        const auto tup = sample_premise_tuple(s, rng);
        const double lambda = rng.unit();
        if (!tup) continue;
        ++rep.premise_satisfying;
        const double eta = m.eval(tup->r, tup->eps);

        const Point mid = combine(s, tup->x, tup->y, 0.5);
        const double v_mid = dist(s, mid, tup->a) - (1.0 - eta) * tup->r;

        const Point gen = combine(s, tup->x, tup->y, lambda);
        const double bound = (1.0 - 2.0 * lambda * (1.0 - lambda) * eta) * tup->r;
        const double v_gen = dist(s, gen, tup->a) - bound;

        const double v = std::max(v_mid, v_gen);
        if (v > rep.max_violation) {
            rep.max_violation = v;
            std::ostringstream os;
            os << "r=" << tup->r << " eps=" << tup->eps << " sep=" << tup->separation
               << " lambda=" << lambda << " violation=" << v;
            rep.witness = os.str();
        }
    }
    rep.pass = rep.max_violation <= tol;
    return rep;
}

} // namespace geokm
