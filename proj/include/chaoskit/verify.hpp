#pragma once

// Randomized identity suites behind `chaoskit verify`.
//
// Each check covers one random instance (one seed) and records the worst
// deviation over its sub-cases, so a failing line can be replayed by seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoskit/chaos.hpp"
#include "chaoskit/combinatorics.hpp"
#include "chaoskit/io.hpp"
#include "chaoskit/malliavin.hpp"
#include "chaoskit/mc.hpp"
#include "chaoskit/random.hpp"
#include "chaoskit/tensor.hpp"

namespace chaoskit::verify {

struct Config {
  std::size_t dim = 3;
  std::size_t max_order = 4;
  std::size_t trials = 10;
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = 1;
  double tol_rel = 1e-9;
  unsigned workers = 0;
};

struct Check {
  std::string suite;
  std::string name;
  std::uint64_t seed = 0;
  std::string params;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

class Log {
 public:
  void add(Check c) { checks_.push_back(std::move(c)); }

  // |observed - expected| <= tol_rel * scale
  void compare(std::string suite, std::string name, std::uint64_t seed,
               std::string params, double observed, double expected, double scale,
               double tol_rel) {
    const double tol = tol_rel * scale;
    add({std::move(suite), std::move(name), seed, std::move(params), observed,
         expected, tol, std::abs(observed - expected) <= tol});
  }

  // observed >= expected - tolerance
  void at_least(std::string suite, std::string name, std::uint64_t seed,
                std::string params, double observed, double bound, double tol) {
    add({std::move(suite), std::move(name), seed, std::move(params), observed,
         bound, tol, observed >= bound - tol});
  }

  [[nodiscard]] const std::vector<Check>& checks() const { return checks_; }
  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(
        checks_.begin(), checks_.end(), [](const Check& c) { return !c.passed; }));
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Check& c : checks_)
      arr.push_back({{"suite", c.suite},
                     {"check", c.name},
                     {"seed", c.seed},
                     {"params", c.params},
                     {"observed", c.observed},
                     {"expected", c.expected},
                     {"tolerance", c.tolerance},
                     {"passed", c.passed}});
    return {{"passed", failures() == 0},
            {"total", checks_.size()},
            {"failures", failures()},
            {"checks", std::move(arr)}};
  }

 private:
  std::vector<Check> checks_;
};

namespace detail {

inline std::string shape(std::size_t d, std::size_t n, std::size_t m) {
  return "d=" + std::to_string(d) + " n=" + std::to_string(n) +
         " m=" + std::to_string(m);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

inline double max_abs(const Tensor& a) {
  double out = 0.0;
  for (double v : a.coeffs()) out = std::max(out, std::abs(v));
  return out;
}

// Worst relative deviation tracker: keeps (observed, expected, scale) of the
// case with the largest |o - e| / scale.
struct Worst {
  double observed = 0.0, expected = 0.0, scale = 1.0, ratio = -1.0;
  void offer(double o, double e, double s) {
    s = std::max(s, 1e-300);
    const double r = std::abs(o - e) / s;
    if (r > ratio) *this = {o, e, s, r};
  }
};

}  // namespace detail

/// Identities on contractions, hat contractions and symmetrization.
inline void run_tensor_suite(const Config& cfg, Log& log) {
  const std::string suite = "tensor";
  for (std::size_t d = 2; d <= std::max<std::size_t>(2, cfg.dim); ++d)
    for (std::size_t n = 1; n <= cfg.max_order; ++n)
      for (std::size_t m = 1; m <= cfg.max_order; ++m)
        for (std::size_t t = 0; t < cfg.trials; ++t) {
          const std::uint64_t s0 = derive_seed(cfg.seed, 100 + d * 100 + n * 10 + m, t);
          const Tensor f = random_symmetric(d, n, derive_seed(s0, 0, 0));
          const Tensor g = random_symmetric(d, m, derive_seed(s0, 1, 0));
          const Tensor h = random_symmetric(d, n, derive_seed(s0, 2, 0));
          const Tensor l = random_symmetric(d, m, derive_seed(s0, 3, 0));
          const std::string params = detail::shape(d, n, m);
          const std::size_t mn = std::min(n, m);
          const double fg_scale = norm(f) * norm(g);
          const double quad_scale = fg_scale * norm(h) * norm(l);

          // sum_i f_i (x)_r g_i = f (x)_{r+k} g
          detail::Worst w;
          for (std::size_t k = 0; k <= mn; ++k)
            for (std::size_t r = 0; k + r <= mn; ++r) {
              const Tensor direct = contract(f, g, r + k);
              std::vector<double> acc(direct.size(), 0.0);
              for (std::size_t i = 0; i < ipow(d, k); ++i) {
                const Tensor c = contract(slice_flat(f, i, k), slice_flat(g, i, k), r);
                for (std::size_t x = 0; x < c.size(); ++x) acc[x] += c[x];
              }
              const Tensor summed(d, direct.order(), std::move(acc));
              w.offer(detail::max_abs_diff(summed, direct), 0.0, fg_scale);
            }
          log.compare(suite, "slice_sum_contraction", s0, params, w.observed,
                      w.expected, w.scale, cfg.tol_rel);

          // <f (x)_{n-r} h, g (x)_{m-r} l> = <f (x)_r g, h (x)_r l>
          w = {};
          for (std::size_t r = 0; r + 1 <= mn; ++r)
            w.offer(inner(contract(f, h, n - r), contract(g, l, m - r)),
                    inner(contract(f, g, r), contract(h, l, r)), quad_scale);
          log.compare(suite, "contraction_inner_swap", s0, params, w.observed,
                      w.expected, w.scale, cfg.tol_rel);

          // <f (x)~ g, l (x)~ h> = m!n!/(m+n)! sum_r C(n,r) C(m,r) <f (x)_r l, h (x)_r g>
          {
            const auto un = static_cast<unsigned>(n), um = static_cast<unsigned>(m);
            double rhs = 0.0;
            for (unsigned r = 0; r <= mn; ++r)
              rhs += to_double(binomial(un, r) * binomial(um, r)) *
                     inner(contract(f, l, r), contract(h, g, r));
            rhs *= ExactRatio{factorial(un) * factorial(um), factorial(un + um)}.value();
            const double lhs = inner(sym_contract(f, g, 0), sym_contract(l, h, 0));
            log.compare(suite, "symmetrized_product_inner", s0, params, lhs, rhs,
                        quad_scale, cfg.tol_rel);
          }

          // <f (x)~_r g, l (x)~_r h> via hat contractions
          w = {};
          for (std::size_t r = 0; r + 1 <= mn; ++r) {
            const auto a = static_cast<unsigned>(n - r), b = static_cast<unsigned>(m - r);
            double rhs = 0.0;
            for (unsigned s = 0; s <= std::min(a, b); ++s)
              rhs += to_double(binomial(a, s) * binomial(b, s)) *
                     hat_contract(f, g, l, h, r, s);
            rhs *= ExactRatio{factorial(a) * factorial(b), factorial(a + b)}.value();
            w.offer(inner(sym_contract(f, g, r), sym_contract(l, h, r)), rhs, quad_scale);
          }
          log.compare(suite, "hat_contraction_expansion", s0, params, w.observed,
                      w.expected, w.scale, cfg.tol_rel);

          // (f (x)_r g) ^(x)_s (l (x)_r h) = (f (x)_s l) ^(x)_r (g (x)_s h)
          w = {};
          for (std::size_t r = 0; r <= mn; ++r)
            for (std::size_t s = 0; r + s <= mn; ++s)
              w.offer(hat_contract(f, g, l, h, r, s), hat_contract(f, l, g, h, s, r),
                      quad_scale);
          log.compare(suite, "hat_swap", s0, params, w.observed, w.expected, w.scale,
                      cfg.tol_rel);

          // symmetrize is an idempotent contraction on non-symmetric input
          {
            const Tensor raw = contract(f, g, 0);
            const Tensor once = symmetrize(raw);
            const Tensor twice = symmetrize(with_symmetry(once, false));
            log.compare(suite, "symmetrize_idempotent", s0, params,
                        detail::max_abs_diff(once, twice), 0.0, detail::max_abs(raw),
                        cfg.tol_rel);
            log.at_least(suite, "symmetrize_norm_shrinks", s0, params, norm(raw),
                         norm(once), cfg.tol_rel * norm(raw));
          }
        }
}

/// Product formula, isometry, divergence of the derivative, and the
/// derivative against finite differences.
inline void run_chaos_suite(const Config& cfg, Log& log) {
  const std::string suite = "chaos";
  for (std::size_t d = 1; d <= cfg.dim; ++d) {
    for (std::size_t n = 1; n <= cfg.max_order; ++n)
      for (std::size_t m = 1; m <= cfg.max_order; ++m)
        for (std::size_t t = 0; t < cfg.trials; ++t) {
          const std::uint64_t s0 = derive_seed(cfg.seed, 200 + d * 100 + n * 10 + m, t);
          const auto F = ChaosExpansion::integral(random_symmetric(d, n, derive_seed(s0, 0, 0)));
          const auto G = ChaosExpansion::integral(random_symmetric(d, m, derive_seed(s0, 1, 0)));
          const std::string params = detail::shape(d, n, m);
          const ChaosExpansion FG = multiply(F, G);
          detail::Worst w;
          for (std::size_t p = 0; p < 50; ++p) {
            const auto xi = sample_gaussian(d, derive_seed(s0, 2, 0), p);
            const double a = evaluate(F, xi), b = evaluate(G, xi);
            w.offer(evaluate(FG, xi), a * b, std::max(1.0, std::abs(a * b)));
          }
          log.compare(suite, "product_formula_pointwise", s0, params, w.observed,
                      w.expected, w.scale, cfg.tol_rel);
          const double iso =
              n == m ? to_double(factorial(static_cast<unsigned>(n))) *
                           inner(F.term(n), G.term(m))
                     : 0.0;
          log.compare(suite, "isometry", s0, params, expectation(FG), iso,
                      std::max(1.0, to_double(factorial(static_cast<unsigned>(n))) *
                                        norm(F.term(n)) * norm(G.term(m))),
                      cfg.tol_rel);
        }

    for (std::size_t n = 1; n <= std::max<std::size_t>(5, cfg.max_order); ++n)
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t s0 = derive_seed(cfg.seed, 300 + d * 100 + n, t);
        const Tensor f = random_symmetric(d, n, s0);
        const auto F = ChaosExpansion::integral(f);
        const ChaosExpansion back = divergence(derivative(F, 1));
        const Tensor expect = scale(static_cast<double>(n), f);
        log.compare(suite, "divergence_of_derivative", s0,
                    "d=" + std::to_string(d) + " n=" + std::to_string(n),
                    detail::max_abs_diff(back.term(n), expect), 0.0,
                    std::max(1.0, detail::max_abs(expect)), 1e-12);

        // dF_j(xi) vs central differences, step 1e-5
        if (n <= cfg.max_order) {
          const HValuedChaos dF = derivative(F, 1);
          detail::Worst wd;
          for (std::size_t p = 0; p < 5; ++p) {
            auto xi = sample_gaussian(d, derive_seed(s0, 4, 0), p);
            for (std::size_t j = 0; j < d; ++j) {
              const double h = 1e-5, x0 = xi[j];
              xi[j] = x0 + h;
              const double up = evaluate(F, xi);
              xi[j] = x0 - h;
              const double down = evaluate(F, xi);
              xi[j] = x0;
              const double fd = (up - down) / (2 * h);
              const double exact = evaluate(dF.entry(j), xi);
              wd.offer(exact, fd, std::max(1.0, std::abs(fd)));
            }
          }
          log.compare(suite, "derivative_finite_difference", s0,
                      "d=" + std::to_string(d) + " n=" + std::to_string(n),
                      wd.observed, wd.expected, wd.scale, 1e-5);
        }
      }
  }
}

/// Closed form vs symbolic oracle, T_r forms, (e1) pointwise, the covariance
/// inequality, and degeneracy for proportional pairs.
inline void run_malliavin_suite(const Config& cfg, Log& log) {
  const std::string suite = "malliavin";
  const std::size_t dmax = std::min<std::size_t>(cfg.dim, 3);
  for (std::size_t d = 2; d <= std::max<std::size_t>(2, dmax); ++d)
    for (std::size_t n = 1; n <= cfg.max_order; ++n)
      for (std::size_t m = 1; m <= cfg.max_order; ++m)
        for (std::size_t t = 0; t < cfg.trials; ++t) {
          const std::uint64_t s0 = derive_seed(cfg.seed, 400 + d * 100 + n * 10 + m, t);
          const MalliavinPair p(random_symmetric(d, n, derive_seed(s0, 0, 0)),
                                random_symmetric(d, m, derive_seed(s0, 1, 0)));
          const PairAnalysis a(p);
          const std::string params = detail::shape(d, n, m);
          detail::Worst w, wr;
          double min_term = INFINITY, min_scale = 1.0;
          for (std::size_t k = 1; k <= p.min_order(); ++k) {
            const DetBreakdown b = a.breakdown(k);
            const double sym = expected_det_symbolic(p, k);
            w.offer(b.closed_form, sym, 1.0 + std::abs(sym));
            const double sc = det_scale(p, k);
            wr.offer(b.t0, tr_term_direct(p, k, 0), sc);
            for (std::size_t r = 1; r <= b.tr.size(); ++r) {
              wr.offer(b.tr[r - 1], tr_term_direct(p, k, r), sc);
              if (b.tr[r - 1] / sc < min_term) {
                min_term = b.tr[r - 1] / sc;
                min_scale = sc;
              }
            }
            if (b.closed_form / sc < min_term) {
              min_term = b.closed_form / sc;
              min_scale = sc;
            }
          }
          log.compare(suite, "closed_form_vs_symbolic", s0, params, w.observed,
                      w.expected, w.scale, 1e-8);
          log.compare(suite, "tr_term_vs_direct", s0, params, wr.observed, wr.expected,
                      wr.scale, cfg.tol_rel);
          log.at_least(suite, "terms_nonnegative", s0, params, min_term * min_scale, 0.0,
                       1e-10 * min_scale);

          // (e1) at a few points, only where the full determinant is cheap
          if (n + m <= 6) {
            detail::Worst we;
            for (std::size_t k = 1; k <= p.min_order(); ++k) {
              const ChaosExpansion det = det_lambda_symbolic(p, k);
              const SumOfSquares sos(p, k);
              for (std::size_t q = 0; q < 10; ++q) {
                const auto xi = sample_gaussian(d, derive_seed(s0, 5, k), q);
                const double v = sos(xi);
                we.offer(v, evaluate(det, xi), std::max(1.0, std::abs(v)));
              }
            }
            log.compare(suite, "sum_of_squares_pointwise", s0, params, we.observed,
                        we.expected, we.scale, cfg.tol_rel);
          }

          if (n == m) {
            log.compare(suite, "top_order_equals_covariance", s0, params,
                        a.expected_det(n),
                        std::pow(to_double(factorial(static_cast<unsigned>(n))), 2) *
                            cov_det(p),
                        det_scale(p, n), cfg.tol_rel);
            if (n >= 2) {
              const CovarianceBound th = covariance_bound_check(a, cfg.tol_rel);
              log.at_least(suite, "covariance_inequality", s0, params, th.lhs, th.rhs,
                           th.tolerance);
            }
            const double c = 0.5 + static_cast<double>(t);
            const MalliavinPair prop(p.f(), scale(c, p.f()));
            const PairAnalysis pa(prop);
            double worst = 0.0, sc = 1.0;
            for (std::size_t k = 1; k <= n; ++k) {
              const double s = det_scale(prop, k);
              if (std::abs(pa.expected_det(k)) / s >= worst / sc) {
                worst = std::abs(pa.expected_det(k));
                sc = s;
              }
            }
            log.compare(suite, "proportional_pair_degenerate", s0, params, worst, 0.0,
                        sc, 1e-12);
            const DensityReport dr = density_check(p);
            log.add({suite, "density_verdict_consistent", s0, params,
                     dr.consistent ? 1.0 : 0.0, 1.0, 0.0, dr.consistent});
          }
        }
}

/// Monte Carlo against the anchor pair and the isometry.
inline void run_mc_suite(const Config& cfg, Log& log) {
  const std::string suite = "mc";
  const std::size_t d = 2;
  const Tensor e1 = Tensor::basis(d, 0), e2 = Tensor::basis(d, 1);
  const MalliavinPair anchor(tensor_product(e1, e1), sym_contract(e1, e2, 0));
  const double target = PairAnalysis(anchor).expected_det(1);
  const Estimate est = estimate_expected_det(anchor, 1, cfg.samples, cfg.seed, cfg.workers);
  log.compare(suite, "anchor_expected_det_mc", cfg.seed, "d=2 n=2 m=2 k=1", est.mean,
              target, est.std_error, kDefaultBand);
  const Estimate single = estimate_expected_det(anchor, 1, 1000, cfg.seed, 1);
  const Estimate multi = estimate_expected_det(anchor, 1, 1000, cfg.seed, 3);
  log.add({suite, "worker_count_reproducible", cfg.seed, "samples=1000",
           multi.mean, single.mean, 0.0,
           single.mean == multi.mean && single.std_error == multi.std_error});
  // F^2 has heavy tails for n >= 2, so only a few instances at full sample size.
  for (std::size_t n = 1; n <= std::min<std::size_t>(cfg.max_order, 3); ++n)
    for (std::size_t t = 0; t < std::min<std::size_t>(cfg.trials, 3); ++t) {
      const std::uint64_t s0 = derive_seed(cfg.seed, 500 + n, t);
      const Tensor f = random_symmetric(cfg.dim, n, s0);
      const auto F = ChaosExpansion::integral(f);
      const Estimate m2 = estimate_moment(F, 2, cfg.samples, s0, cfg.workers);
      const double exact = to_double(factorial(static_cast<unsigned>(n))) * inner(f, f);
      log.compare(suite, "isometry_mc", s0,
                  "d=" + std::to_string(cfg.dim) + " n=" + std::to_string(n), m2.mean,
                  exact, m2.std_error, kDefaultBand + 1.0);
    }
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"tensor", "chaos", "malliavin", "mc"};
  return names;
}

inline void run_suite(const std::string& name, const Config& cfg, Log& log) {
  if (name == "tensor") return run_tensor_suite(cfg, log);
  if (name == "chaos") return run_chaos_suite(cfg, log);
  if (name == "malliavin") return run_malliavin_suite(cfg, log);
  if (name == "mc") return run_mc_suite(cfg, log);
  if (name == "all") {
    for (const auto& s : suite_names()) run_suite(s, cfg, log);
    return;
  }
  throw std::invalid_argument("unknown suite: " + name);
}

}  // namespace chaoskit::verify
