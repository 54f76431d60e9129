#pragma once

// Iterated Malliavin matrices of a pair (F, G) = (I_n(f), I_m(g)).
//
// Lambda^(k) is the 2x2 Gram matrix of D^(k)F and D^(k)G in H^{(x)k}. Two
// independent routes to E det Lambda^(k) live here:
//   * symbolic: build the Gram entries as chaos expansions and take the
//     constant term of a*c - b^2;
//   * closed form: T_0^(k) + sum_{r>=1} T_r^(k) from contraction norms and
//     hat contractions of f and g.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaoskit/chaos.hpp"
#include "chaoskit/combinatorics.hpp"
#include "chaoskit/tensor.hpp"

namespace chaoskit {

class MalliavinPair {
 public:
  MalliavinPair(Tensor f, Tensor g) : f_(std::move(f)), g_(std::move(g)) {
    if (f_.dim() != g_.dim())
      throw std::invalid_argument("pair: f and g must share a dimension");
    if (f_.order() < 1 || g_.order() < 1)
      throw std::invalid_argument("pair: orders must be >= 1");
    f_ = f_.verified_symmetric();
    g_ = g_.verified_symmetric();
  }

  [[nodiscard]] const Tensor& f() const { return f_; }
  [[nodiscard]] const Tensor& g() const { return g_; }
  [[nodiscard]] std::size_t n() const { return f_.order(); }
  [[nodiscard]] std::size_t m() const { return g_.order(); }
  [[nodiscard]] std::size_t dim() const { return f_.dim(); }
  [[nodiscard]] std::size_t min_order() const { return std::min(n(), m()); }

  [[nodiscard]] ChaosExpansion F() const { return ChaosExpansion::integral(f_); }
  [[nodiscard]] ChaosExpansion G() const { return ChaosExpansion::integral(g_); }

  void check_k(std::size_t k) const {
    if (k < 1 || k > min_order())
      throw std::invalid_argument("k = " + std::to_string(k) +
                                  " out of range [1, " +
                                  std::to_string(min_order()) + "]");
  }

 private:
  Tensor f_;
  Tensor g_;
};

/// Natural size of E det Lambda^(k):
/// n!^2 m!^2 / ((n-k)! (m-k)!) * |f|^2 |g|^2, the bound from
/// E |D^(k)F|^2 E |D^(k)G|^2 with the chaos factorials.
inline double det_scale(const MalliavinPair& p, std::size_t k) {
  p.check_k(k);
  const auto n = static_cast<unsigned>(p.n());
  const auto m = static_cast<unsigned>(p.m());
  const auto kk = static_cast<unsigned>(k);
  const exact_uint c = checked_mul(
      checked_mul(factorial(n), factorial(m)),
      checked_mul(falling_factorial(n, kk), falling_factorial(m, kk)));
  return to_double(c) * inner(p.f(), p.f()) * inner(p.g(), p.g());
}

// ---------------------------------------------------------------------------
// Symbolic route

struct GramChaos {
  ChaosExpansion ff;  // |D^(k)F|^2
  ChaosExpansion fg;  // <D^(k)F, D^(k)G>
  ChaosExpansion gg;  // |D^(k)G|^2
};

inline GramChaos gram_chaos(const MalliavinPair& p, std::size_t k) {
  p.check_k(k);
  const HValuedChaos dF = derivative(p.F(), k);
  const HValuedChaos dG = derivative(p.G(), k);
  GramChaos out{ChaosExpansion(p.dim()), ChaosExpansion(p.dim()),
                ChaosExpansion(p.dim())};
  for (std::size_t j = 0; j < dF.size(); ++j) {
    out.ff = add(out.ff, multiply(dF.entry(j), dF.entry(j)));
    out.fg = add(out.fg, multiply(dF.entry(j), dG.entry(j)));
    out.gg = add(out.gg, multiply(dG.entry(j), dG.entry(j)));
  }
  return out;
}

inline ChaosExpansion det_lambda_symbolic(const MalliavinPair& p, std::size_t k) {
  const GramChaos gram = gram_chaos(p, k);
  return subtract(multiply(gram.ff, gram.gg), multiply(gram.fg, gram.fg));
}

// Constant term of det_lambda_symbolic; E[a c] - E[b^2] by the isometry.
inline double expected_det_symbolic(const MalliavinPair& p, std::size_t k) {
  const GramChaos gram = gram_chaos(p, k);
  return l2_inner(gram.ff, gram.gg) - l2_inner(gram.fg, gram.fg);
}

/// Pointwise det Lambda^(k) as the sum of squares
/// 1/2 sum_{i,l} (D_i F D_l G - D_l F D_i G)^2.
class SumOfSquares {
 public:
  SumOfSquares(const MalliavinPair& p, std::size_t k)
      : dim_(p.dim()),
        dF_((p.check_k(k), derivative(p.F(), k))),
        dG_(derivative(p.G(), k)),
        a_(dF_.size()),
        b_(dG_.size()) {}

  [[nodiscard]] std::size_t dim() const { return dim_; }

  double operator()(std::span<const double> xi) const {
    load(xi);
    double acc = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i)
      for (std::size_t l = i + 1; l < a_.size(); ++l) {
        const double w = a_[i] * b_[l] - a_[l] * b_[i];
        acc += w * w;
      }
    return acc;  // ordered pairs counted once; the 1/2 cancels the i<->l twin
  }

  // |a|^2 |b|^2 - <a,b>^2 on the same evaluated gradients.
  double determinant_form(std::span<const double> xi) const {
    load(xi);
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      aa += a_[i] * a_[i];
      bb += b_[i] * b_[i];
      ab += a_[i] * b_[i];
    }
    return aa * bb - ab * ab;
  }

 private:
  void load(std::span<const double> xi) const {
    if (xi.size() != dim_)
      throw std::invalid_argument("sum_of_squares_eval: point length mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) {
      a_[i] = evaluate(dF_.entry(i), xi);
      b_[i] = evaluate(dG_.entry(i), xi);
    }
  }

  std::size_t dim_;
  HValuedChaos dF_;
  HValuedChaos dG_;
  mutable std::vector<double> a_;
  mutable std::vector<double> b_;
};

inline double sum_of_squares_eval(const MalliavinPair& p, std::size_t k,
                                  std::span<const double> xi) {
  return SumOfSquares(p, k)(xi);
}

// ---------------------------------------------------------------------------
// Closed-form route

struct DetBreakdown {
  std::size_t k = 0;
  double t0 = 0.0;
  std::vector<double> tr;  // r = 1 .. (n-k) ^ (m-k)
  double remainder = 0.0;  // sum of tr
  double closed_form = 0.0;
  std::optional<double> symbolic;
};

/// Caches f (x)_r g and g (x)_r f for every r, shared by all k.
class PairAnalysis {
 public:
  explicit PairAnalysis(MalliavinPair pair) : pair_(std::move(pair)) {
    for (std::size_t r = 0; r <= pair_.min_order(); ++r) {
      fg_.push_back(contract(pair_.f(), pair_.g(), r));
      gf_.push_back(contract(pair_.g(), pair_.f(), r));
      fg_norm2_.push_back(inner(fg_.back(), fg_.back()));
    }
  }

  [[nodiscard]] const MalliavinPair& pair() const { return pair_; }

  // |f (x)_s g|^2
  [[nodiscard]] double contraction_norm2(std::size_t s) const {
    return fg_norm2_.at(s);
  }

  // (f (x)_r g) ^(x)_s (g (x)_r f)
  [[nodiscard]] double hat(std::size_t r, std::size_t s) const {
    return hat_pairing(fg_.at(r), gf_.at(r), pair_.n(), pair_.m(), r, s);
  }

  /// T_0^(k) = n!^2 m!^2/((m-k)!(n-k)!) *
  ///   sum_s C(m-k,s) C(n-k,s) (|f (x)_s g|^2 - |f (x)_{s+k} g|^2).
  [[nodiscard]] double t0(std::size_t k) const {
    pair_.check_k(k);
    const auto n = static_cast<unsigned>(pair_.n());
    const auto m = static_cast<unsigned>(pair_.m());
    const auto kk = static_cast<unsigned>(k);
    const exact_uint coef = checked_mul(
        checked_mul(factorial(n), factorial(m)),
        checked_mul(falling_factorial(n, kk), falling_factorial(m, kk)));
    double sum = 0.0;
    for (unsigned s = 0; s <= std::min(n - kk, m - kk); ++s) {
      const double w = to_double(checked_mul(binomial(m - kk, s), binomial(n - kk, s)));
      sum += w * (contraction_norm2(s) - contraction_norm2(s + kk));
    }
    return to_double(coef) * sum;
  }

  /// T_r^(k) = beta(k,r) sum_s C(n-k-r,s) C(m-k-r,s)
  ///   (hat(r, s) - hat(r, s+k)),  1 <= r <= (n-k) ^ (m-k).
  [[nodiscard]] double tr(std::size_t k, std::size_t r) const {
    pair_.check_k(k);
    const std::size_t top = pair_.min_order() - k;
    if (r < 1 || r > top)
      throw std::invalid_argument("tr_term: r = " + std::to_string(r) +
                                  " out of range [1, " + std::to_string(top) + "]");
    const auto n = static_cast<unsigned>(pair_.n());
    const auto m = static_cast<unsigned>(pair_.m());
    const auto kk = static_cast<unsigned>(k);
    const auto rr = static_cast<unsigned>(r);
    double sum = 0.0;
    for (unsigned s = 0; s <= top - r; ++s) {
      const double w = to_double(
          checked_mul(binomial(n - kk - rr, s), binomial(m - kk - rr, s)));
      sum += w * (hat(r, s) - hat(r, s + k));
    }
    return to_double(beta_coeff(n, m, kk, rr)) * sum;
  }

  [[nodiscard]] DetBreakdown breakdown(std::size_t k) const {
    DetBreakdown out;
    out.k = k;
    out.t0 = t0(k);
    for (std::size_t r = 1; r <= pair_.min_order() - k; ++r) {
      out.tr.push_back(tr(k, r));
      out.remainder += out.tr.back();
    }
    out.closed_form = out.t0 + out.remainder;
    return out;
  }

  [[nodiscard]] double expected_det(std::size_t k) const {
    return breakdown(k).closed_form;
  }

 private:
  MalliavinPair pair_;
  std::vector<Tensor> fg_;
  std::vector<Tensor> gf_;
  std::vector<double> fg_norm2_;
};

inline double t0_term(const MalliavinPair& p, std::size_t k) {
  return PairAnalysis(p).t0(k);
}

inline double tr_term(const MalliavinPair& p, std::size_t k, std::size_t r) {
  return PairAnalysis(p).tr(k, r);
}

/// T_r^(k) straight from its definition:
/// 1/2 alpha(k,r) sum_{i,l} |f_i (x)~_r g_l - f_l (x)~_r g_i|^2, 0 <= r.
/// Manifestly non-negative; shares no code with PairAnalysis beyond contract.
inline double tr_term_direct(const MalliavinPair& p, std::size_t k, std::size_t r) {
  p.check_k(k);
  const std::size_t top = p.min_order() - k;
  if (r > top)
    throw std::invalid_argument("tr_term_direct: r = " + std::to_string(r) +
                                " out of range [0, " + std::to_string(top) + "]");
  const std::size_t count = ipow(p.dim(), k);
  std::vector<Tensor> fs, gs;
  for (std::size_t i = 0; i < count; ++i) {
    fs.push_back(slice_flat(p.f(), i, k));
    gs.push_back(slice_flat(p.g(), i, k));
  }
  std::vector<Tensor> sym(count * count);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t l = 0; l < count; ++l)
      sym[i * count + l] = sym_contract(fs[i], gs[l], r);
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t l = 0; l < count; ++l) {
      const Tensor& a = sym[i * count + l];
      const Tensor& b = sym[l * count + i];
      for (std::size_t x = 0; x < a.size(); ++x) {
        const double w = a[x] - b[x];
        acc += w * w;
      }
    }
  const double alpha = to_double(
      alpha_coeff(static_cast<unsigned>(p.n()), static_cast<unsigned>(p.m()),
                  static_cast<unsigned>(k), static_cast<unsigned>(r)));
  return 0.5 * alpha * acc;
}

/// E det Lambda^(k) = T_0^(k) + R_{m,n,k}, with the symbolic oracle attached
/// when `with_symbolic` is set.
inline DetBreakdown expected_det_closed_form(const MalliavinPair& p, std::size_t k,
                                             bool with_symbolic = true) {
  DetBreakdown out = PairAnalysis(p).breakdown(k);
  if (with_symbolic) out.symbolic = expected_det_symbolic(p, k);
  return out;
}

// ---------------------------------------------------------------------------
// Covariance, inequality, density

inline void require_equal_orders(const MalliavinPair& p, const char* what) {
  if (p.n() != p.m())
    throw std::invalid_argument(std::string(what) + ": requires n = m (got n = " +
                                std::to_string(p.n()) + ", m = " +
                                std::to_string(p.m()) + ")");
}

/// det C = n!^2 (|f|^2 |g|^2 - <f,g>^2) for the covariance C of (F, G).
inline double cov_det(const MalliavinPair& p) {
  require_equal_orders(p, "cov_det");
  const double nf = to_double(factorial(static_cast<unsigned>(p.n())));
  const double fg = inner(p.f(), p.g());
  return nf * nf * (inner(p.f(), p.f()) * inner(p.g(), p.g()) - fg * fg);
}

// n!^2 |f|^2 |g|^2, the size of det C.
inline double cov_scale(const MalliavinPair& p) {
  const double nf = to_double(factorial(static_cast<unsigned>(p.n())));
  return nf * nf * inner(p.f(), p.f()) * inner(p.g(), p.g());
}

// n (n - 2s) / s!^2
inline ExactRatio covariance_weight(unsigned n, unsigned s) {
  const exact_uint sf = factorial(s);
  return {exact_uint(n) * (n - 2 * s), checked_mul(sf, sf)};
}

// n^2 / (n-1)^2: the constant in E det Lambda^(1) >= c_n det C, n in 2..4.
inline ExactRatio direct_bound_constant(unsigned n) {
  if (n < 2 || n > 4)
    throw std::invalid_argument("direct_bound_constant: defined for n in {2,3,4}");
  return {exact_uint(n) * n, exact_uint(n - 1) * (n - 1)};
}

struct CovarianceBound {
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool holds = false;
  std::vector<double> edet;  // E det Lambda^(s), s = 1 .. max(1, [(n-1)/2])

  [[nodiscard]] double ratio() const { return rhs == 0.0 ? INFINITY : lhs / rhs; }
};

/// sum_{s=2}^{[(n-1)/2]} n(n-2s)/s!^2 E det Lambda^(s)
///   + (n-1)^2 E det Lambda^(1)  >=  n^2 det C.
inline CovarianceBound covariance_bound_check(const PairAnalysis& a, double tol_rel = 1e-9) {
  const MalliavinPair& p = a.pair();
  require_equal_orders(p, "covariance_bound_check");
  const auto n = static_cast<unsigned>(p.n());
  if (n < 2) throw std::invalid_argument("covariance_bound_check: requires n >= 2");
  CovarianceBound out;
  const unsigned top = std::max(1u, (n - 1) / 2);
  for (unsigned s = 1; s <= top; ++s) out.edet.push_back(a.expected_det(s));
  out.lhs = double((n - 1) * (n - 1)) * out.edet[0];
  for (unsigned s = 2; s <= (n - 1) / 2; ++s)
    out.lhs += covariance_weight(n, s).value() * out.edet[s - 1];
  out.rhs = double(n) * n * cov_det(p);
  out.tolerance = tol_rel * double(n) * n * cov_scale(p);
  out.holds = out.lhs >= out.rhs - out.tolerance;
  return out;
}

inline CovarianceBound covariance_bound_check(const MalliavinPair& p, double tol_rel = 1e-9) {
  return covariance_bound_check(PairAnalysis(p), tol_rel);
}

enum class DensityVerdict { Degenerate, AbsolutelyContinuous };

inline const char* to_string(DensityVerdict v) {
  return v == DensityVerdict::Degenerate ? "DEGENERATE" : "ABSOLUTELY_CONTINUOUS";
}

struct DensityReport {
  DensityVerdict verdict = DensityVerdict::Degenerate;
  double cov_det = 0.0;
  double tol_abs = 0.0;
  std::vector<double> edet;            // k = 1 .. n
  std::vector<double> zero_threshold;  // tol_abs (n!/(n-k)!)^2 per k
  bool consistent = false;             // all zero or all positive across k
};

inline double default_tol_abs(const MalliavinPair& p) { return 1e-10 * cov_scale(p); }

/// Degenerate iff det C <= tol_abs. E det Lambda^(k) is compared against
/// tol_abs rescaled by (n!/(n-k)!)^2, which matches det Lambda^(n) = n!^2 det C
/// at k = n.
inline DensityReport density_check(const MalliavinPair& p,
                                   std::optional<double> tol_abs = std::nullopt) {
  require_equal_orders(p, "density_check");
  DensityReport out;
  out.tol_abs = tol_abs.value_or(default_tol_abs(p));
  if (!(out.tol_abs > 0.0)) throw std::invalid_argument("tol_abs must be > 0");
  out.cov_det = cov_det(p);
  out.verdict = out.cov_det <= out.tol_abs ? DensityVerdict::Degenerate
                                           : DensityVerdict::AbsolutelyContinuous;
  const PairAnalysis a(p);
  const auto n = static_cast<unsigned>(p.n());
  bool all_zero = true, all_positive = true;
  for (unsigned k = 1; k <= n; ++k) {
    const double ratio = to_double(falling_factorial(n, k));
    out.edet.push_back(a.expected_det(k));
    out.zero_threshold.push_back(out.tol_abs * ratio * ratio);
    const bool zero = out.edet.back() <= out.zero_threshold.back();
    all_zero = all_zero && zero;
    all_positive = all_positive && !zero;
  }
  out.consistent = out.verdict == DensityVerdict::Degenerate ? all_zero : all_positive;
  return out;
}

}  // namespace chaoskit
