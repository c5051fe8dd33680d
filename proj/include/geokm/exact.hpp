#pragma once

#include <gmpxx.h>

#include <functional>
#include <string>

namespace geokm {

using BigInt = mpz_class;
using BigRat = mpq_class;

// Parses "3", "-7", "5/3", "0.125", "2.5" into an exact rational.
// Decimal strings are exact (0.1 -> 1/10). Scientific notation is not
// accepted. Throws config_error on anything else.
BigRat rat_from_string(const std::string& s);

// Exact value of the double (dyadic rational). Throws on NaN/inf.
BigRat rat_from_double(double x);

double rat_to_double(const BigRat& q);

// Canonical "p/q" (or "p" when q == 1).
std::string rat_to_string(const BigRat& q);

BigInt ceil_rat(const BigRat& q);
BigInt floor_rat(const BigRat& q);

// Closed rational interval [lo, hi]. All operations return enclosures of the
// exact image; division requires a sign-definite denominator.
struct RatInterval {
    BigRat lo;
    BigRat hi;

    RatInterval() : lo(0), hi(0) {}
    RatInterval(BigRat l, BigRat h);
    static RatInterval exact(const BigRat& v) { return RatInterval(v, v); }

    bool is_exact() const { return lo == hi; }
    BigRat width() const { return hi - lo; }
    bool contains(const BigRat& v) const { return lo <= v && v <= hi; }

    RatInterval operator-() const;
    RatInterval operator+(const RatInterval& o) const;
    RatInterval operator-(const RatInterval& o) const;
    RatInterval operator*(const RatInterval& o) const;
    RatInterval operator/(const RatInterval& o) const;

    // Integer power by repeated multiplication; negative n reciprocates.
    RatInterval pow_int(long n) const;

    // min(., 1) on both endpoints; used for modulus clamping.
    RatInterval clamp_above_one() const;

    std::string to_string() const;
};

RatInterval operator*(const BigRat& a, const RatInterval& iv);
RatInterval operator+(const BigRat& a, const RatInterval& iv);

// Enclosure of e^x for rational x >= 0 via a Taylor partial sum plus a
// geometric tail bound. More terms -> tighter. Exact [1,1] at x == 0.
RatInterval exp_enclosure(const BigRat& x, int terms);

// Ceiling of a real number known only through refinable enclosures.
// eval(t) must return an enclosure that shrinks as t grows; terms are doubled
// from t0 until both endpoints agree on the ceiling. Throws resource_error if
// t exceeds tmax without certifying.
BigInt certified_ceil(const std::function<RatInterval(int)>& eval, int t0, int tmax);

} // namespace geokm
