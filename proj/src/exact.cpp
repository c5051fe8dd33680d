#include "geokm/exact.hpp"

#include "geokm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace geokm {

BigRat rat_from_string(const std::string& s) {
    if (s.empty()) throw config_error("empty rational literal");
    const auto slash = s.find('/');
    const auto dot = s.find('.');
    try {
        if (slash != std::string::npos) {
            if (dot != std::string::npos) throw config_error("mixed '/' and '.' in rational literal: " + s);
            BigRat q(s, 10);
            if (q.get_den() == 0) throw config_error("zero denominator in rational literal: " + s);
            q.canonicalize();
            return q;
        }
        if (dot != std::string::npos) {
            const std::string ip = s.substr(0, dot);
            const std::string fp = s.substr(dot + 1);
            if (fp.empty() || fp.find_first_not_of("0123456789") != std::string::npos)
                throw config_error("bad decimal literal: " + s);
            bool neg = !ip.empty() && ip[0] == '-';
            std::string ipdigits = neg || (!ip.empty() && ip[0] == '+') ? ip.substr(1) : ip;
            if (ipdigits.empty()) ipdigits = "0";
            if (ipdigits.find_first_not_of("0123456789") != std::string::npos)
                throw config_error("bad decimal literal: " + s);
            BigInt num(ipdigits + fp, 10); // base fixed: leading zeros are not octal
            BigInt den = 1;
            mpz_ui_pow_ui(den.get_mpz_t(), 10, fp.size());
            BigRat q(num, den);
            q.canonicalize();
            return neg ? BigRat(-q) : q;
        }
        BigRat q(s, 10);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw config_error("bad rational literal: " + s);
    }
}

BigRat rat_from_double(double x) {
    if (!std::isfinite(x)) throw config_error("non-finite value where rational expected");
    BigRat q;
    mpq_set_d(q.get_mpq_t(), x);
    return q;
}

double rat_to_double(const BigRat& q) { return q.get_d(); }

std::string rat_to_string(const BigRat& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

BigInt ceil_rat(const BigRat& q) {
    BigInt r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

BigInt floor_rat(const BigRat& q) {
    BigInt r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

RatInterval::RatInterval(BigRat l, BigRat h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo > hi) throw std::logic_error("interval endpoints reversed");
}

RatInterval RatInterval::operator-() const { return RatInterval(-hi, -lo); }

RatInterval RatInterval::operator+(const RatInterval& o) const {
    return RatInterval(lo + o.lo, hi + o.hi);
}

RatInterval RatInterval::operator-(const RatInterval& o) const {
    return RatInterval(lo - o.hi, hi - o.lo);
}

RatInterval RatInterval::operator*(const RatInterval& o) const {
    const BigRat p1 = lo * o.lo, p2 = lo * o.hi, p3 = hi * o.lo, p4 = hi * o.hi;
    return RatInterval(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

RatInterval RatInterval::operator/(const RatInterval& o) const {
    if (o.lo <= 0 && o.hi >= 0)
        throw std::domain_error("interval division by an interval containing zero");
    return *this * RatInterval(BigRat(1) / o.hi, BigRat(1) / o.lo);
}

RatInterval RatInterval::pow_int(long n) const {
    if (n < 0) return RatInterval::exact(1) / pow_int(-n);
    RatInterval acc = RatInterval::exact(1);
    for (long i = 0; i < n; ++i) acc = acc * *this;
    return acc;
}

RatInterval RatInterval::clamp_above_one() const {
    return RatInterval(std::min(lo, BigRat(1)), std::min(hi, BigRat(1)));
}

std::string RatInterval::to_string() const {
    if (is_exact()) return rat_to_string(lo);
    return "[" + rat_to_string(lo) + ", " + rat_to_string(hi) + "]";
}

RatInterval operator*(const BigRat& a, const RatInterval& iv) {
    return RatInterval::exact(a) * iv;
}

RatInterval operator+(const BigRat& a, const RatInterval& iv) {
    return RatInterval::exact(a) + iv;
}

RatInterval exp_enclosure(const BigRat& x, int terms) {
    if (x < 0) throw std::domain_error("exp_enclosure requires x >= 0");
    if (x == 0) return RatInterval::exact(1);
    // Need x/(n+2) < 1 for the geometric tail; pad the term count if the
    // caller asked for fewer.
    long n = std::max<long>(terms, 2 * mpz_get_si(ceil_rat(x).get_mpz_t()) + 4);
    BigRat sum = 1;
    BigRat term = 1; // x^i / i!
    for (long i = 1; i <= n; ++i) {
        term *= x / BigRat(i);
        sum += term;
    }
    // Tail: sum_{i>n} x^i/i! <= term_n * (x/(n+1)) / (1 - x/(n+2)).
    const BigRat r1 = x / BigRat(n + 1);
    const BigRat r2 = x / BigRat(n + 2);
    const BigRat tail = term * r1 / (BigRat(1) - r2);
    return RatInterval(sum, sum + tail);
}

BigInt certified_ceil(const std::function<RatInterval(int)>& eval, int t0, int tmax) {
    for (int t = t0; t <= tmax; t *= 2) {
        const RatInterval iv = eval(t);
        const BigInt clo = ceil_rat(iv.lo);
        const BigInt chi = ceil_rat(iv.hi);
        if (clo == chi) return clo;
    }
    throw resource_error("could not certify a ceiling within the precision budget");
}

} // namespace geokm
