#include "geokm/rates.hpp"

#include "geokm/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace geokm {

namespace {

[[noreturn]] void gfail(const std::string& spec, std::size_t pos, const std::string& what) {
    throw config_error("g-spec parse error at position " + std::to_string(pos) + ": " + what +
                       " (in '" + spec + "')");
}

BigInt parse_nonneg_int(const std::string& spec, std::size_t& pos) {
    const std::size_t start = pos;
    while (pos < spec.size() && std::isdigit(static_cast<unsigned char>(spec[pos]))) ++pos;
    if (pos == start) gfail(spec, pos, "expected a nonnegative integer");
    return BigInt(spec.substr(start, pos - start));
}

std::int64_t checked_i64(const BigInt& v, const char* what) {
    if (!v.fits_slong_p())
        throw resource_error(std::string(what) + " does not fit in a 64-bit integer: " +
                             v.get_str());
    return v.get_si();
}

// Result-size guard for materializing d * (c^M - 1) / (c - 1): roughly
// M * log2(c) bits, capped at 8 * budget.
void guard_pow_size(const BigInt& m, const BigInt& c, std::int64_t budget) {
    if (!m.fits_slong_p())
        throw resource_error("iterate count too large to materialize: M=" + m.get_str());
    const double bits = m.get_d() * static_cast<double>(mpz_sizeinbase(c.get_mpz_t(), 2));
    if (bits > 8.0 * static_cast<double>(budget))
        throw resource_error("materialized value would need ~" +
                             std::to_string(static_cast<long long>(bits)) +
                             " bits, over the budget");
}

BigInt geometric_sum(const BigInt& d, const BigInt& c, const BigInt& m, std::int64_t budget) {
    // d * (c^M - 1) / (c - 1) for c >= 2.
    guard_pow_size(m, c, budget);
    BigInt cm;
    mpz_pow_ui(cm.get_mpz_t(), c.get_mpz_t(), static_cast<unsigned long>(m.get_ui()));
    return d * (cm - 1) / (c - 1);
}

} // namespace

GFunc GFunc::zero() {
    GFunc g;
    return g;
}

GFunc GFunc::parse(const std::string& spec) {
    GFunc g;
    g.spec_ = spec;
    if (spec == "zero") return g;
    if (spec == "successor") {
        g.a_ = 1;
        g.b_ = 1;
        return g;
    }
    if (spec.rfind("const:", 0) == 0) {
        std::size_t pos = 6;
        g.b_ = parse_nonneg_int(spec, pos);
        if (pos != spec.size()) gfail(spec, pos, "trailing input");
        return g;
    }
    if (spec.rfind("linear:", 0) == 0) {
        std::size_t pos = 7;
        g.a_ = parse_nonneg_int(spec, pos);
        if (pos >= spec.size() || spec[pos] != ',') gfail(spec, pos, "expected ','");
        ++pos;
        g.b_ = parse_nonneg_int(spec, pos);
        if (pos != spec.size()) gfail(spec, pos, "trailing input");
        return g;
    }
    if (spec.rfind("table:", 0) == 0) {
        std::size_t pos = 6;
        if (pos >= spec.size() || spec[pos] != '[') gfail(spec, pos, "expected '['");
        ++pos;
        g.is_table_ = true;
        if (pos < spec.size() && spec[pos] == ']') {
            if (pos + 1 != spec.size()) gfail(spec, pos + 1, "trailing input");
            return g;
        }
        for (;;) {
            const BigInt v = parse_nonneg_int(spec, pos);
            g.table_.push_back(checked_i64(v, "table entry"));
            if (pos >= spec.size()) gfail(spec, pos, "expected ',' or ']'");
            if (spec[pos] == ']') {
                ++pos;
                break;
            }
            if (spec[pos] != ',') gfail(spec, pos, "expected ',' or ']'");
            ++pos;
        }
        if (pos != spec.size()) gfail(spec, pos, "trailing input");
        return g;
    }
    gfail(spec, 0, "unknown g form (want zero, successor, const:c, linear:a,b or table:[...])");
}

BigInt GFunc::operator()(const BigInt& n) const {
    if (n < 0) throw std::domain_error("g is defined on nonnegative integers");
    if (!is_table_) return a_ * n + b_;
    if (n >= static_cast<long>(table_.size())) return 0;
    return BigInt(static_cast<long>(table_[n.get_si()]));
}

std::int64_t GFunc::at_i64(std::int64_t n) const {
    return checked_i64((*this)(BigInt(static_cast<long>(n))), "g value");
}

std::string variant_name(MVariant v) { return v == MVariant::paper ? "paper" : "strict"; }

BigRat f_of_K(const BigRat& K) {
    if (K < 0) throw std::domain_error("K must be >= 0");
    const BigRat k1 = K + 1;
    return BigRat(2) * (BigRat(1) + k1 * k1 * (K + 2));
}

ThetaInfo compute_theta(const BigRat& K, long L, const BigRat& b, const BigRat& eps,
                        const Modulus& m, ThetaRoute route, int terms) {
    if (K < 0) throw std::domain_error("K must be >= 0");
    if (L < 2) throw std::domain_error("L must be >= 2");
    if (!(b > 0)) throw std::domain_error("b must be positive");
    if (!(eps > 0 && eps <= 1))
        throw std::domain_error("eps must lie in (0, 1]; larger eps is not clamped");
    if (route == ThetaRoute::eta_tilde && !m.has_tilde())
        throw std::domain_error("modulus has no eta_tilde factor for the requested route");

    ThetaInfo out;
    out.f_k = f_of_K(K);
    out.d_bound = exp_enclosure(K, terms) * RatInterval::exact(b + 2);
    const RatInterval radius = (K + 1) * out.d_bound + RatInterval::exact(1);
    const RatInterval inner = RatInterval::exact(eps) / (out.f_k * radius);
    if (!(inner.hi < BigRat(1, 2)))
        throw std::logic_error("inner eps argument must stay below 1/2");
    const RatInterval eta = route == ThetaRoute::eta ? m.eval_exact(radius, inner)
                                                     : m.eval_tilde_exact(radius, inner);
    const BigRat scale = eps / (BigRat(L) * BigRat(L) * out.f_k);
    out.theta = scale * eta;
    if (!(out.theta.hi < 1)) throw std::logic_error("theta must stay below 1");
    if (!(out.theta.lo > 0)) throw std::logic_error("theta must be positive");
    return out;
}

namespace {

BigRat additive_constant(MVariant v) {
    return v == MVariant::paper ? BigRat(11, 2) : BigRat(10);
}

RatInterval m_argument(const BoundInputs& in, int terms) {
    const Modulus def = cat0_modulus();
    const Modulus& mod = in.modulus ? *in.modulus : def;
    const ThetaInfo ti = compute_theta(in.K, in.L, in.b, in.eps, mod, in.route, terms);
    const RatInterval numer =
        BigRat(3) * (in.K * BigRat(5) * ti.d_bound + ti.d_bound +
                     RatInterval::exact(additive_constant(in.variant)));
    return numer / ti.theta;
}

constexpr int kTermsReport = 64;
constexpr int kTermsMax = 1 << 16;

} // namespace

BigInt compute_m(const BoundInputs& in) {
    return certified_ceil([&in](int t) { return m_argument(in, t); }, 32, kTermsMax);
}

nlohmann::json bound_report_to_json(const BoundReport& r) {
    nlohmann::ordered_json j;
    j["formula"] = r.formula;
    j["variant"] = variant_name(r.variant);
    j["route"] = r.route == ThetaRoute::eta ? "eta" : "eta_tilde";
    j["f_K"] = rat_to_string(r.f_k);
    j["D"] = {{"lo", rat_to_string(r.d_bound.lo)}, {"hi", rat_to_string(r.d_bound.hi)}};
    if (r.has_theta)
        j["theta"] = {{"lo", rat_to_string(r.theta.lo)}, {"hi", rat_to_string(r.theta.hi)}};
    j["M"] = r.m_count.get_str();
    j["g"] = r.g_spec;
    j["phi"] = r.phi.get_str();
    j["phi_lower"] = r.phi_lower.get_str();
    return j;
}

BigInt iterate_h(const GFunc& g, const BigInt& m, HKind kind, std::int64_t budget) {
    if (m < 0) throw std::domain_error("iterate count must be >= 0");
    if (g.is_affine()) {
        const BigInt c = g.affine_a() + 1;
        const BigInt d = kind == HKind::horizon ? g.affine_a() + g.affine_b() + 2 : g.affine_b();
        if (c == 1) return m * d;
        if (d == 0) return BigInt(0);
        return geometric_sum(d, c, m, budget);
    }
    // Table g: iterate until the argument leaves the table, then the tail is
    // h(n) = n + 2 (horizon) or a fixed point (window).
    const auto& tbl = g.table();
    const BigInt tbl_size(static_cast<long>(tbl.size()));
    BigInt v = 0;
    BigInt i = 0;
    std::int64_t steps = 0;
    while (i < m) {
        if (kind == HKind::horizon) {
            const BigInt idx = v + 1;
            if (idx >= tbl_size) return v + 2 * (m - i);
            v += BigInt(static_cast<long>(tbl[idx.get_si()])) + 2;
        } else {
            if (v >= tbl_size) return v;
            const std::int64_t gv = tbl[v.get_si()];
            if (gv == 0) return v;
            v += static_cast<long>(gv);
        }
        ++i;
        if (++steps > budget) throw resource_error("h-iteration exceeded the step budget");
    }
    return v;
}

bool phi_at_least(const GFunc& g, const BigInt& m, const BigInt& n) {
    if (n <= 0) return true;
    if (m <= 0) return false;
    if (g.is_affine()) {
        const BigInt c = g.affine_a() + 1;
        const BigInt d = g.affine_a() + g.affine_b() + 2;
        if (c == 1) return m * d >= n;
        // h^M(0) = d (c^M - 1)/(c - 1) >= c^M - 1 >= 2^M - 1.
        const std::size_t nbits = mpz_sizeinbase(n.get_mpz_t(), 2);
        if (m > BigInt(static_cast<unsigned long>(nbits))) return true;
        return geometric_sum(d, c, m, 1 << 30) >= n;
    }
    const auto& tbl = g.table();
    const BigInt tbl_size(static_cast<long>(tbl.size()));
    BigInt v = 0;
    BigInt i = 0;
    while (i < m) {
        if (v >= n) return true;
        const BigInt idx = v + 1;
        if (idx >= tbl_size) return v + 2 * (m - i) >= n;
        v += BigInt(static_cast<long>(tbl[idx.get_si()])) + 2;
        ++i;
    }
    return v >= n;
}

std::vector<std::int64_t> h_candidates(const GFunc& g, const BigInt& m, HKind kind,
                                       std::int64_t cap) {
    std::vector<std::int64_t> out;
    const std::int64_t offset = kind == HKind::horizon ? 1 : 0;
    BigInt v = 0;
    BigInt i = 0;
    while (i < m) {
        const BigInt candidate = v + offset;
        if (candidate > BigInt(static_cast<long>(cap))) break;
        out.push_back(checked_i64(candidate, "candidate"));
        BigInt next;
        if (kind == HKind::horizon)
            next = g(v + 1) + v + 2;
        else
            next = g(v) + v;
        if (next == v) break; // window form can reach a fixed point
        v = next;
        ++i;
    }
    return out;
}

namespace {

BoundReport make_report(const BoundInputs& in, const std::string& formula, const BigInt& m,
                        const BigInt& phi) {
    const Modulus def = cat0_modulus();
    const Modulus& mod = in.modulus ? *in.modulus : def;
    const ThetaInfo ti = compute_theta(in.K, in.L, in.b, in.eps, mod, in.route, kTermsReport);
    BoundReport r;
    r.formula = formula;
    r.variant = in.variant;
    r.route = in.route;
    r.f_k = ti.f_k;
    r.d_bound = ti.d_bound;
    r.theta = ti.theta;
    r.has_theta = true;
    r.m_count = m;
    r.g_spec = in.g.spec();
    r.phi = phi;
    r.phi_lower = 2 * m;
    return r;
}

} // namespace

BoundReport compute_phi_metastable(const BoundInputs& in, std::int64_t budget) {
    const BigInt m = compute_m(in);
    const BigInt phi = iterate_h(in.g, m, HKind::horizon, budget);
    return make_report(in, "general", m, phi);
}

BoundReport compute_phi_asreg(const BigRat& K, long L, const BigRat& b, const BigRat& eps,
                              const Modulus& m, ThetaRoute route, MVariant variant) {
    BoundInputs in;
    in.K = K;
    in.L = L;
    in.b = b;
    in.eps = eps;
    in.g = GFunc::zero();
    in.modulus = &m;
    in.route = route;
    in.variant = variant;
    const BigInt mc = compute_m(in);
    const BigInt phi = 2 * mc;
    if (iterate_h(in.g, mc, HKind::horizon, 4) != phi)
        throw std::logic_error("asymptotic-regularity phi must equal the g=0 horizon");
    BoundReport r = make_report(in, "asymptotic-regularity", mc, phi);
    return r;
}

std::pair<BoundReport, BoundReport> compute_phi_cat0(const BigRat& K, long L, const BigRat& d_c,
                                                     const BigRat& eps, MVariant variant) {
    const Modulus cat0 = cat0_modulus();

    BoundInputs derived_in;
    derived_in.K = K;
    derived_in.L = L;
    derived_in.b = d_c;
    derived_in.eps = eps;
    derived_in.g = GFunc::zero();
    derived_in.modulus = &cat0;
    derived_in.route = ThetaRoute::eta_tilde;
    derived_in.variant = variant;
    const BigInt m_derived = compute_m(derived_in);
    BoundReport derived = make_report(derived_in, "cat0-derived", m_derived, 2 * m_derived);

    // Published closed form: 24 L^2 (5KD + D + c) f^3 ((1+K)D+1)^2 / eps^2.
    const BigRat fk = f_of_K(K);
    const BigRat c = additive_constant(variant);
    auto closed_arg = [&](int terms) {
        const RatInterval d = exp_enclosure(K, terms) * RatInterval::exact(d_c + 2);
        const RatInterval radius = (K + 1) * d + RatInterval::exact(1);
        const BigRat scale = BigRat(24) * BigRat(L) * BigRat(L) * fk * fk * fk / (eps * eps);
        return scale * (K * BigRat(5) * d + d + RatInterval::exact(c)) * radius * radius;
    };
    if (!(eps > 0 && eps <= 1)) throw std::domain_error("eps must lie in (0, 1]");
    if (!(d_c > 0)) throw std::domain_error("diameter must be positive");
    const BigInt m_closed = certified_ceil(closed_arg, 32, kTermsMax);

    BoundReport closed;
    closed.formula = "cat0-closed";
    closed.variant = variant;
    closed.route = ThetaRoute::eta_tilde;
    closed.f_k = fk;
    closed.d_bound = exp_enclosure(K, kTermsReport) * RatInterval::exact(d_c + 2);
    closed.has_theta = false;
    closed.m_count = m_closed;
    closed.g_spec = "zero";
    closed.phi = 2 * m_closed;
    closed.phi_lower = 2 * m_closed;

    // The published form carries an extra factor f(K)((1+K)D+1) >= 24.
    if (m_closed < m_derived)
        throw std::logic_error("closed-form M must dominate the eta_tilde-derived M");
    return {closed, derived};
}

BasicLemmaBound basic_lemma_bound(const BigRat& a0, const BigRat& eps, const GFunc& g,
                                  std::int64_t budget) {
    if (a0 < 0) throw std::domain_error("a0 must be >= 0");
    if (!(eps > 0)) throw std::domain_error("eps must be positive");
    BasicLemmaBound out;
    out.m_count = ceil_rat(a0 / eps);
    if (g.is_affine()) {
        const BigInt& a = g.affine_a();
        const BigInt& b = g.affine_b();
        // g-iterates from 0 are nondecreasing, so the max is the last.
        if (a == 0) {
            out.theta_cap = out.m_count >= 1 ? b : BigInt(0);
        } else if (a == 1) {
            out.theta_cap = out.m_count * b;
        } else if (b == 0) {
            out.theta_cap = 0;
        } else {
            guard_pow_size(out.m_count, a, budget);
            BigInt am;
            mpz_pow_ui(am.get_mpz_t(), a.get_mpz_t(),
                       static_cast<unsigned long>(out.m_count.get_ui()));
            out.theta_cap = b * (am - 1) / (a - 1);
        }
        return out;
    }
    // Table iterates can cycle; the reachable set is finite, so stop on a
    // revisit.
    BigInt best = 0;
    BigInt v = 0;
    std::set<std::int64_t> seen;
    BigInt i = 0;
    std::int64_t steps = 0;
    while (i <= out.m_count) {
        const std::int64_t vi = checked_i64(v, "g-iterate");
        best = std::max(best, v);
        if (!seen.insert(vi).second) break;
        v = g(v);
        ++i;
        if (++steps > budget) throw resource_error("g-iteration exceeded the step budget");
    }
    out.theta_cap = best;
    return out;
}

BasicLemmaWitness verify_basic_lemma_on_sequence(std::span<const double> a, double eps,
                                                 const GFunc& g, std::int64_t budget) {
    if (!(eps > 0)) throw std::domain_error("eps must be positive");
    if (a.empty()) throw hypothesis_error("empty sequence");
    if (!(a[0] > 0)) throw hypothesis_error("a[0] must be positive for a nonzero horizon");
    const BigInt m = ceil_rat(rat_from_double(a[0]) / rat_from_double(eps));
    std::int64_t v = 0;
    BigInt i = 0;
    std::int64_t steps = 0;
    while (i < m) {
        const std::int64_t next = g.at_i64(v);
        if (v >= static_cast<std::int64_t>(a.size()) ||
            next >= static_cast<std::int64_t>(a.size()))
            throw hypothesis_error("sequence shorter than the scan needs (index " +
                                   std::to_string(std::max(v, next)) + ")");
        const double drop = a[v] - a[next];
        if (drop <= eps) return BasicLemmaWitness{i, v, drop};
        v = next;
        ++i;
        if (++steps > budget) throw resource_error("scan exceeded the step budget");
    }
    if (v < static_cast<std::int64_t>(a.size()) && a[v] < 0.0)
        throw hypothesis_error("a[g^M(0)] is negative; the telescoping premise fails");
    throw counterexample_error("no index i < M dropped by <= eps; premises were verified");
}

QihouBound quant_qihou_psi(const QihouInputs& in, std::int64_t budget) {
    if (in.a1 < 1 || in.a2 < 1) throw std::domain_error("A1 and A2 must be >= 1");
    if (in.b1 < 0 || in.b2 < 0 || in.c1 < 0 || in.c2 < 0)
        throw std::domain_error("B and C budgets must be >= 0");
    if (!(in.theta > 0)) throw std::domain_error("theta must be positive");
    QihouBound out;
    auto arg = [&in](int terms) {
        const RatInterval d1 = exp_enclosure(in.b1, terms) * RatInterval::exact(in.a1 + in.c1);
        const RatInterval d2 = exp_enclosure(in.b2, terms) * RatInterval::exact(in.a2 + in.c2);
        const RatInterval numer = BigRat(3) * (in.b1 * BigRat(4) * d1 +
                                               RatInterval::exact(in.c1 * 4) + d1 +
                                               in.b2 * BigRat(4) * d2 +
                                               RatInterval::exact(in.c2 * 4) + d2);
        return numer / RatInterval::exact(in.theta);
    };
    out.m_count = certified_ceil(arg, 32, kTermsMax);
    out.d1 = exp_enclosure(in.b1, kTermsReport) * RatInterval::exact(in.a1 + in.c1);
    out.d2 = exp_enclosure(in.b2, kTermsReport) * RatInterval::exact(in.a2 + in.c2);
    out.psi = iterate_h(in.g, out.m_count, HKind::window, budget);
    return out;
}

WindowScan find_metastable_window(std::span<const double> residuals, double eps, const GFunc& g,
                                  std::int64_t cap) {
    if (!(eps > 0)) throw std::domain_error("eps must be positive");
    WindowScan out;
    const std::int64_t last = static_cast<std::int64_t>(residuals.size()) - 1;
    for (std::int64_t n = 0; n <= std::min(cap, last); ++n) {
        const BigInt gn = g(BigInt(static_cast<long>(n)));
        if (gn > BigInt(static_cast<long>(last - n))) {
            ++out.skipped;
            continue;
        }
        const std::int64_t end = n + gn.get_si();
        bool ok = true;
        for (std::int64_t i = n; i <= end && ok; ++i) ok = residuals[i] < eps;
        if (ok) {
            out.status = WindowScan::Status::found;
            out.n = n;
            return out;
        }
    }
    out.status = out.skipped > 0 ? WindowScan::Status::inconclusive
                                 : WindowScan::Status::not_found;
    return out;
}

QihouSeqResult verify_qihou_on_sequences(std::span<const double> a, std::span<const double> b,
                                         std::span<const double> c,
                                         std::span<const double> alpha,
                                         std::span<const double> beta,
                                         std::span<const double> gamma,
                                         const QihouInputs& in, double tol,
                                         std::int64_t budget) {
    const QihouBound qb = quant_qihou_psi(in, budget);
    const std::int64_t psi = checked_i64(qb.psi, "psi");

    auto need = [&](std::span<const double> s, std::int64_t upto, const char* name) {
        if (static_cast<std::int64_t>(s.size()) < upto + 1)
            throw hypothesis_error(std::string(name) + " must be defined up to index " +
                                   std::to_string(upto));
    };
    need(a, psi + 1, "a");
    need(alpha, psi + 1, "alpha");
    need(b, psi, "b");
    need(c, psi, "c");
    need(beta, psi, "beta");
    need(gamma, psi, "gamma");

    auto check_side = [&](std::span<const double> x, std::span<const double> growth,
                          std::span<const double> drift, const BigRat& cap_a,
                          const BigRat& cap_b, const BigRat& cap_c, const char* name) {
        if (x[0] > rat_to_double(cap_a) + tol)
            throw hypothesis_error(std::string(name) + "[0] exceeds its A bound");
        double sum_g = 0.0, sum_d = 0.0;
        for (std::int64_t n = 0; n <= psi; ++n) {
            if (x[n] < 0.0 || growth[n] < 0.0 || drift[n] < 0.0)
                throw hypothesis_error(std::string(name) + " data negative at index " +
                                       std::to_string(n));
            if (x[n + 1] > (1.0 + growth[n]) * x[n] + drift[n] + tol)
                throw hypothesis_error(std::string(name) + " recurrence fails at index " +
                                       std::to_string(n));
            sum_g += growth[n];
            sum_d += drift[n];
        }
        if (sum_g > rat_to_double(cap_b) + tol)
            throw hypothesis_error(std::string(name) + " growth sum exceeds its B bound");
        if (sum_d > rat_to_double(cap_c) + tol)
            throw hypothesis_error(std::string(name) + " drift sum exceeds its C bound");
    };
    check_side(a, b, c, in.a1, in.b1, in.c1, "a");
    check_side(alpha, beta, gamma, in.a2, in.b2, in.c2, "alpha");

    // Part 1 of the proposition; failing it with verified hypotheses would be
    // a counterexample, not bad input.
    const double d1 = rat_to_double(qb.d1.hi), d2 = rat_to_double(qb.d2.hi);
    for (std::int64_t n = 0; n <= psi + 1; ++n) {
        if (a[n] > d1 + tol)
            throw counterexample_error("a exceeds its D1 bound at index " + std::to_string(n));
        if (alpha[n] > d2 + tol)
            throw counterexample_error("alpha exceeds its D2 bound at index " + std::to_string(n));
    }

    const double th = rat_to_double(in.theta);
    std::int64_t v = 0;
    BigInt i = 0;
    while (i < qb.m_count) {
        const std::int64_t gn = in.g.at_i64(v);
        if (v + gn > psi) throw std::logic_error("candidate window escapes psi");
        double amin = a[v], amax = a[v], lmin = alpha[v], lmax = alpha[v];
        for (std::int64_t j = v; j <= v + gn; ++j) {
            amin = std::min(amin, a[j]);
            amax = std::max(amax, a[j]);
            lmin = std::min(lmin, alpha[j]);
            lmax = std::max(lmax, alpha[j]);
        }
        if (amax - amin <= th + tol && lmax - lmin <= th + tol)
            return QihouSeqResult{i, v, amax - amin, lmax - lmin};
        if (gn == 0) break; // fixed point: later candidates repeat this one
        v += gn;
        ++i;
    }
    throw counterexample_error("no candidate window oscillates within theta; premises verified");
}

} // namespace geokm
