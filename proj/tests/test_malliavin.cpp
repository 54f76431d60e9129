#include <catch_amalgamated.hpp>

#include "chaoskit/malliavin.hpp"
#include "chaoskit/mc.hpp"
#include "oracles.hpp"

using namespace chaoskit;
using Catch::Approx;

namespace {
const Tensor e1 = Tensor::basis(2, 0);
const Tensor e2 = Tensor::basis(2, 1);
MalliavinPair anchor() {
  return MalliavinPair(tensor_product(e1, e1).verified_symmetric(),
                       symmetrize(tensor_product(e1, e2)));
}
MalliavinPair random_pair(std::size_t d, std::size_t n, std::size_t m, std::uint64_t s) {
  return MalliavinPair(random_symmetric(d, n, derive_seed(s, 0, 0)),
                       random_symmetric(d, m, derive_seed(s, 1, 0)));
}
}  // namespace

TEST_CASE("pair validation") {
  CHECK_THROWS_AS(MalliavinPair(Tensor::basis(2, 0), Tensor::basis(3, 0)), std::invalid_argument);
  CHECK_THROWS_AS(MalliavinPair(Tensor::scalar(1.0, 2), e1), std::invalid_argument);
  CHECK_THROWS_AS(MalliavinPair(Tensor(2, 2, {0, 1, 0, 0}), tensor_product(e1, e1)),
                  std::invalid_argument);
  const MalliavinPair p = anchor();
  CHECK_THROWS_AS(p.check_k(0), std::invalid_argument);
  CHECK_THROWS_AS(p.check_k(3), std::invalid_argument);
}

TEST_CASE("gram chaos expectations") {
  const GramChaos g = gram_chaos(MalliavinPair(tensor_product(e1, e1).verified_symmetric(), e1), 1);
  CHECK(expectation(g.ff) == 4.0);  // n n! |f|^2
  for (std::size_t n = 1; n <= 4; ++n) {
    const Tensor f = random_symmetric(3, n, n);
    const GramChaos gc = gram_chaos(MalliavinPair(f, f), 1);
    CHECK(expectation(gc.ff) == Approx(n * oracle::factorial(n) * inner(f, f)));
    CHECK(expectation(gc.fg) == Approx(expectation(gc.ff)));
    CHECK(expectation(gc.gg) == Approx(expectation(gc.ff)));
  }
  const GramChaos first = gram_chaos(MalliavinPair(random_symmetric(3, 1, 5), Tensor::basis(3, 0)), 1);
  CHECK(first.ff.max_order() == 0);
}

TEST_CASE("anchor pair values") {
  const MalliavinPair p = anchor();
  const PairAnalysis a(p);
  CHECK(expected_det_symbolic(p, 1) == Approx(12.0).epsilon(1e-14));
  CHECK(a.t0(1) == Approx(8.0).epsilon(1e-14));
  CHECK(a.tr(1, 1) == Approx(4.0).epsilon(1e-14));
  CHECK(tr_term_direct(p, 1, 1) == Approx(4.0).epsilon(1e-14));
  CHECK(a.expected_det(1) == Approx(12.0).epsilon(1e-14));
  CHECK(cov_det(p) == Approx(2.0).epsilon(1e-14));
  const auto b = expected_det_closed_form(p, 1);
  CHECK(b.t0 + b.remainder == Approx(b.closed_form));
  REQUIRE(b.symbolic.has_value());
  CHECK(*b.symbolic == Approx(12.0));
  // det Lambda = 4 xi1^4
  for (double x : {1.0, -0.5, 2.0}) {
    const std::vector<double> xi{x, 0.3};
    CHECK(sum_of_squares_eval(p, 1, xi) == Approx(4 * x * x * x * x).epsilon(1e-13));
  }
  CHECK(sum_of_squares_eval(p, 1, std::vector<double>{1.0, 0.0}) == Approx(4.0));
  const CovarianceBound th = covariance_bound_check(p);
  CHECK(th.lhs == Approx(12.0));
  CHECK(th.rhs == Approx(8.0));
  CHECK(th.holds);
  const DensityReport r = density_check(p);
  CHECK(r.verdict == DensityVerdict::AbsolutelyContinuous);
  CHECK(r.consistent);
}

TEST_CASE("first chaos pair is a constant Gram determinant") {
  const MalliavinPair p(random_symmetric(3, 1, 1), random_symmetric(3, 1, 2));
  const double gram = inner(p.f(), p.f()) * inner(p.g(), p.g()) - std::pow(inner(p.f(), p.g()), 2);
  const ChaosExpansion det = det_lambda_symbolic(p, 1);
  CHECK(det.max_order() == 0);
  CHECK(det.term(0).value() == Approx(gram));
  CHECK(expected_det_symbolic(p, 1) == Approx(gram));
  CHECK(PairAnalysis(p).expected_det(1) == Approx(gram));
  CHECK(cov_det(MalliavinPair(e1, e2)) == 1.0);
}

TEST_CASE("proportional pairs vanish") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const Tensor f = random_symmetric(2, n, 3 + n);
    const MalliavinPair p(f, scale(3.0, f));
    const PairAnalysis a(p);
    for (std::size_t k = 1; k <= n; ++k) {
      CHECK(std::abs(expected_det_symbolic(p, k)) <= 1e-12 * det_scale(p, k));
      CHECK(std::abs(a.expected_det(k)) <= 1e-12 * det_scale(p, k));
      for (std::size_t r = 1; k + r <= n; ++r) CHECK(std::abs(a.tr(k, r)) <= 1e-12 * det_scale(p, k));
    }
    const MalliavinPair same(f, f);
    const auto xi = sample_gaussian(2, 1, n);
    CHECK(sum_of_squares_eval(same, 1, xi) == 0.0);
    const DensityReport r = density_check(p);
    CHECK(r.verdict == DensityVerdict::Degenerate);
    CHECK(r.consistent);
    if (n >= 2) CHECK(covariance_bound_check(p).holds);
  }
  CHECK(PairAnalysis(MalliavinPair(e1, e1)).t0(1) == 0.0);
}

TEST_CASE("closed form against symbolic expectation and terms") {
  for (std::size_t d = 1; d <= 3; ++d)
    for (std::size_t n = 1; n <= 3; ++n)
      for (std::size_t m = 1; m <= 3; ++m) {
        const MalliavinPair p = random_pair(d, n, m, 100 * d + 10 * n + m);
        const PairAnalysis a(p);
        for (std::size_t k = 1; k <= std::min(n, m); ++k) {
          const double sym = expected_det_symbolic(p, k);
          CHECK(a.expected_det(k) == Approx(sym).epsilon(1e-10).margin(1e-10));
          CHECK(a.t0(k) >= -1e-10 * det_scale(p, k));
          CHECK(t0_term(p, k) == Approx(a.t0(k)));
          for (std::size_t r = 1; k + r <= std::min(n, m); ++r) {
            CHECK(a.tr(k, r) >= -1e-10 * det_scale(p, k));
            CHECK(tr_term(p, k, r) == Approx(tr_term_direct(p, k, r)).epsilon(1e-10).margin(1e-10));
          }
          CHECK(tr_term_direct(p, k, 0) == Approx(a.t0(k)).epsilon(1e-10).margin(1e-10));
        }
      }
}

TEST_CASE("top order equals covariance determinant") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const MalliavinPair p = random_pair(3, n, n, n);
    const double nf = oracle::factorial(n);
    const double ff = inner(p.f(), p.f()), gg = inner(p.g(), p.g()), fg = inner(p.f(), p.g());
    CHECK(cov_det(p) == Approx(nf * nf * (ff * gg - fg * fg)));
    CHECK(PairAnalysis(p).expected_det(n) == Approx(nf * nf * nf * nf * (ff * gg - fg * fg)));
  }
}

TEST_CASE("pointwise sum of squares against symbolic and brute determinant") {
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t m = 1; m <= 3; ++m) {
      const MalliavinPair p = random_pair(2, n, m, 7 * n + m);
      for (std::size_t k = 1; k <= std::min(n, m); ++k) {
        const ChaosExpansion det = det_lambda_symbolic(p, k);
        SumOfSquares ssq(p, k);
        for (std::size_t i = 0; i < 20; ++i) {
          const auto xi = sample_gaussian(2, 9, i);
          const double v = ssq(xi);
          const double brute = oracle::det_lambda(p.f(), p.g(), k, xi);
          const double scale = 1.0 + std::abs(brute) + std::abs(evaluate(gram_chaos(p, k).ff, xi)) *
                                                         std::abs(evaluate(gram_chaos(p, k).gg, xi));
          CHECK(v >= 0.0);
          CHECK(std::abs(v - brute) <= 1e-10 * scale);
          CHECK(std::abs(v - evaluate(det, xi)) <= 1e-10 * scale);
          CHECK(std::abs(v - ssq.determinant_form(xi)) <= 1e-10 * scale);
        }
      }
    }
}

TEST_CASE("covariance inequality and direct constants") {
  CHECK(direct_bound_constant(2).value() == 4.0);
  CHECK(direct_bound_constant(3).value() == 2.25);
  CHECK(direct_bound_constant(4).value() == Approx(16.0 / 9.0));
  CHECK_THROWS_AS(direct_bound_constant(5), std::invalid_argument);
  CHECK(covariance_weight(5, 2).value() == Approx(5.0 / 4.0));
  CHECK(covariance_weight(4, 2).value() == 0.0);
  for (std::size_t n = 2; n <= 6; ++n)
    for (std::uint64_t t = 0; t < 20; ++t) {
      const MalliavinPair p = random_pair(2, n, n, 1000 * n + t);
      const PairAnalysis a(p);
      const CovarianceBound th = covariance_bound_check(a);
      double lhs = (n - 1.0) * (n - 1.0) * a.expected_det(1);
      for (std::size_t s = 2; s <= (n - 1) / 2; ++s)
        lhs += n * (n - 2.0 * s) / std::pow(oracle::factorial(s), 2) * a.expected_det(s);
      // The proof form starts at s = 1 with coefficient n(n-2) plus one extra E det.
      double proof = a.expected_det(1);
      for (std::size_t s = 1; s <= (n - 1) / 2; ++s)
        proof += n * (n - 2.0 * s) / std::pow(oracle::factorial(s), 2) * a.expected_det(s);
      CHECK(th.lhs == Approx(lhs).epsilon(1e-12));
      CHECK(proof == Approx(lhs).epsilon(1e-12));
      CHECK(th.rhs == Approx(n * n * cov_det(p)).epsilon(1e-12));
      CHECK(th.holds);
      if (n <= 4)
        CHECK(a.expected_det(1) >= direct_bound_constant(static_cast<unsigned>(n)).value() * cov_det(p) - th.tolerance);
    }
  CHECK_THROWS_AS(covariance_bound_check(random_pair(2, 2, 3, 1)), std::invalid_argument);
  CHECK_THROWS_AS(covariance_bound_check(random_pair(2, 1, 1, 1)), std::invalid_argument);
}

TEST_CASE("density verdicts") {
  for (std::size_t n = 1; n <= 4; ++n) {
    Tensor f = Tensor::basis(2, 0), g = Tensor::basis(2, 1);
    for (std::size_t i = 1; i < n; ++i) {
      f = tensor_product(f, Tensor::basis(2, 0));
      g = tensor_product(g, Tensor::basis(2, 1));
    }
    const MalliavinPair p(f.verified_symmetric(), g.verified_symmetric());
    CHECK(cov_det(p) == Approx(std::pow(oracle::factorial(n), 2)));
    const DensityReport r = density_check(p);
    CHECK(r.verdict == DensityVerdict::AbsolutelyContinuous);
    CHECK(r.consistent);
    CHECK(r.edet.size() == n);
    const DensityReport loose = density_check(p, 10.0 * cov_det(p));
    CHECK(loose.verdict == DensityVerdict::Degenerate);
  }
  CHECK_THROWS_AS(density_check(random_pair(2, 2, 3, 4)), std::invalid_argument);
  CHECK_THROWS_AS(density_check(anchor(), 0.0), std::invalid_argument);
  CHECK(std::string(to_string(DensityVerdict::Degenerate)) == "DEGENERATE");
}
