#pragma once

// Exact rational arithmetic and the scalar traits shared by the exact and
// floating-point code paths.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace mdist {

using Rational = mpq_class;
using Integer = mpz_class;

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static bool is_positive(const Rational& x) { return sgn(x) > 0; }
  static bool is_negative(const Rational& x) { return sgn(x) < 0; }
  static bool leq(const Rational& a, const Rational& b) { return a <= b; }
  static const char* name() { return "exact"; }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  // Feasibility / optimality tolerance of the floating-point backend.
  static constexpr double tol = 1e-9;
  static bool is_zero(double x) { return std::abs(x) <= tol; }
  static bool is_positive(double x) { return x > tol; }
  static bool is_negative(double x) { return x < -tol; }
  static bool leq(double a, double b) { return a <= b + tol; }
  static const char* name() { return "float"; }
};

template <class T>
concept Scalar = std::is_same_v<T, Rational> || std::is_same_v<T, double>;

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

// Exact value of a finite double.
inline Rational exact_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value cannot be made exact");
  return Rational(x);
}

template <Scalar T>
T scalar_cast(const Rational& q) {
  if constexpr (std::is_same_v<T, Rational>) {
    return q;
  } else {
    return q.get_d();
  }
}

template <Scalar T>
T scalar_cast(double x) {
  if constexpr (std::is_same_v<T, Rational>) {
    return exact_from_double(x);
  } else {
    return x;
  }
}

template <Scalar T>
T scalar_from_int(std::int64_t v) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(static_cast<long>(v));
  } else {
    return static_cast<double>(v);
  }
}

inline Rational make_rational(long num, long den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational make_rational(const Integer& num, const Integer& den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline Integer lcm(const Integer& a, const Integer& b) {
  Integer r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Integer floor_of(const Rational& q) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

// Best rational approximation of x with denominator at most max_den
// (continued-fraction convergents plus the best semiconvergent).
inline Rational best_rational_approximation(double x, long max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  if (max_den < 1) throw std::invalid_argument("max_den must be >= 1");
  const Rational target = exact_from_double(x);
  Integer p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Rational rest = target;
  while (true) {
    const Integer a = floor_of(rest);
    const Integer p2 = a * p1 + p0;
    const Integer q2 = a * q1 + q0;
    if (q2 > max_den) {
      // Largest semiconvergent that still fits.
      const Integer t = (Integer(max_den) - q0) / q1;
      const Rational semi = make_rational(t * p1 + p0, t * q1 + q0);
      const Rational conv = make_rational(p1, q1);
      const Rational d_semi = abs(semi - target);
      const Rational d_conv = abs(conv - target);
      return d_semi < d_conv ? semi : conv;
    }
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const Rational frac = rest - a;
    if (sgn(frac) == 0) return make_rational(p1, q1);
    rest = 1 / frac;
  }
}

inline Rational pow(const Rational& base, unsigned exponent) {
  Rational r = 1;
  Rational b = base;
  while (exponent > 0) {
    if (exponent & 1u) r *= b;
    exponent >>= 1;
    if (exponent > 0) b *= b;
  }
  return r;
}

template <Scalar T>
T ipow(const T& base, unsigned exponent) {
  if constexpr (std::is_same_v<T, Rational>) {
    return pow(base, exponent);
  } else {
    double r = 1.0;
    for (unsigned i = 0; i < exponent; ++i) r *= base;
    return r;
  }
}

}  // namespace mdist
