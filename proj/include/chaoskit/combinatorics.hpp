#pragma once

// Exact integer combinatorics for the chaos coefficients.
//
// Every factorial, binomial and factorial ratio that feeds a coefficient is
// evaluated in unsigned 128-bit arithmetic and only converted to double at the
// very end. Factorial arguments are capped at 20; any overflowing product
// raises CoefficientOverflow instead of wrapping.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chaoskit {

using exact_uint = unsigned __int128;

inline constexpr unsigned kMaxFactorialArg = 20;

class CoefficientOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

inline exact_uint checked_mul(exact_uint a, exact_uint b) {
  exact_uint out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw CoefficientOverflow("exact coefficient exceeds 128-bit capacity");
  return out;
}

inline exact_uint factorial(unsigned n) {
  if (n > kMaxFactorialArg)
    throw CoefficientOverflow("factorial argument " + std::to_string(n) +
                              " exceeds cap " +
                              std::to_string(kMaxFactorialArg));
  exact_uint out = 1;
  for (unsigned i = 2; i <= n; ++i) out *= i;
  return out;
}

// n! / (n-k)!, zero when k > n.
inline exact_uint falling_factorial(unsigned n, unsigned k) {
  if (k > n) return 0;
  return factorial(n) / factorial(n - k);
}

// C(n, k), zero when k > n.
inline exact_uint binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// n! / (a! b!) with a + b <= n; always an integer.
inline exact_uint factorial_ratio(unsigned n, unsigned a, unsigned b) {
  if (a + b > n) throw std::invalid_argument("factorial_ratio: a + b > n");
  return checked_mul(binomial(n, a), falling_factorial(n - a, n - a - b));
}

inline double to_double(exact_uint v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  const auto lo = static_cast<std::uint64_t>(v);
  return static_cast<double>(hi) * 18446744073709551616.0 +
         static_cast<double>(lo);
}

// num / den, both exact; the division happens in floating point.
struct ExactRatio {
  exact_uint num = 0;
  exact_uint den = 1;

  [[nodiscard]] double value() const { return to_double(num) / to_double(den); }
};

/// Coefficients appearing in the expansion of E det Lambda^(k).
///
/// alpha(k,r) = (n! m! / ((n-k-r)! (m-k-r)! r!))^2 (m+n-2k-2r)!
///   weights the squared-norm form of the r-th term;
/// beta(k,r)  = n!^2 m!^2 / ((n-k-r)! (m-k-r)! r!^2)
///   weights its hat-contraction form;
/// gamma(n,s) = (n!^2 / ((n-s)! s!))^2 n (n-2s)
///   appears in the covariance inequality, s <= n/2.
inline exact_uint alpha_coeff(unsigned n, unsigned m, unsigned k, unsigned r) {
  if (k + r > n || k + r > m)
    throw std::invalid_argument("alpha_coeff: k + r exceeds min(n, m)");
  const exact_uint a = factorial_ratio(n, n - k - r, r);
  const exact_uint b = falling_factorial(m, k + r);
  const exact_uint base = checked_mul(a, b);
  return checked_mul(checked_mul(base, base), factorial(m + n - 2 * k - 2 * r));
}

inline exact_uint beta_coeff(unsigned n, unsigned m, unsigned k, unsigned r) {
  if (k + r > n || k + r > m)
    throw std::invalid_argument("beta_coeff: k + r exceeds min(n, m)");
  const exact_uint a = factorial_ratio(n, n - k - r, r);
  const exact_uint b = factorial_ratio(m, m - k - r, r);
  return checked_mul(checked_mul(a, b), checked_mul(factorial(n), factorial(m)));
}

inline exact_uint gamma_coeff(unsigned n, unsigned s) {
  if (2 * s > n) throw std::invalid_argument("gamma_coeff: requires 2s <= n");
  const exact_uint base = checked_mul(factorial_ratio(n, n - s, s), factorial(n));
  return checked_mul(checked_mul(base, base), exact_uint(n) * (n - 2 * s));
}

struct CombinatorialCoeffs {
  exact_uint alpha = 0;
  exact_uint beta = 0;
  exact_uint gamma = 0;

  [[nodiscard]] double alpha_value() const { return to_double(alpha); }
  [[nodiscard]] double beta_value() const { return to_double(beta); }
  [[nodiscard]] double gamma_value() const { return to_double(gamma); }
};

// alpha/beta use (n, m, k, r); gamma uses (n, s).
inline CombinatorialCoeffs combinatorial_coefficients(unsigned n, unsigned m,
                                                      unsigned k, unsigned r,
                                                      unsigned s) {
  return {alpha_coeff(n, m, k, r), beta_coeff(n, m, k, r), gamma_coeff(n, s)};
}

}  // namespace chaoskit
