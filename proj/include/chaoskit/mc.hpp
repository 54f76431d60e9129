#pragma once

// Monte Carlo checks over the d-dimensional isonormal process.
//
// Sample i under seed s is always the same Gaussian vector, so sharding the
// index range over any number of workers and reducing in index order gives
// bit-identical estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "chaoskit/chaos.hpp"
#include "chaoskit/malliavin.hpp"
#include "chaoskit/random.hpp"

namespace chaoskit {

inline constexpr std::size_t kDefaultSamples = 100000;
inline constexpr double kDefaultBand = 4.0;  // standard errors

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  // |mean - target| <= band * std_error
  [[nodiscard]] bool covers(double target, double band = kDefaultBand) const {
    return std::abs(mean - target) <= band * std_error;
  }
};

inline std::vector<double> sample_gaussian(std::size_t d, std::uint64_t seed,
                                           std::uint64_t index) {
  if (d == 0) throw std::invalid_argument("sample_gaussian: d must be >= 1");
  std::vector<double> xi(d);
  fill_normals(xi, seed, stream_id::kGaussianSample, index);
  return xi;
}

// Pairwise (cascade) summation; the split depends only on the length.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// values[i] = fn(xi_i) with xi_i = sample_gaussian(d, seed, i).
/// `fn` must be safe to call concurrently; `make_fn` builds one per worker.
template <typename MakeFn>
std::vector<double> sample_values(std::size_t d, std::size_t n_samples,
                                  std::uint64_t seed, MakeFn make_fn,
                                  unsigned workers = 0) {
  std::vector<double> values(n_samples);
  const unsigned w = std::min<std::size_t>(resolve_workers(workers),
                                           std::max<std::size_t>(1, n_samples));
  auto run = [&](std::size_t begin, std::size_t end) {
    auto fn = make_fn();
    std::vector<double> xi(d);
    for (std::size_t i = begin; i < end; ++i) {
      fill_normals(xi, seed, stream_id::kGaussianSample, i);
      values[i] = fn(std::span<const double>(xi));
    }
  };
  if (w == 1) {
    run(0, n_samples);
    return values;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_samples + w - 1) / w;
  for (unsigned t = 0; t < w; ++t) {
    const std::size_t begin = std::min(n_samples, t * chunk);
    const std::size_t end = std::min(n_samples, begin + chunk);
    pool.emplace_back(run, begin, end);
  }
  for (auto& th : pool) th.join();
  return values;
}

/// Mean and standard error (sample sd / sqrt(N)), computed on values shifted
/// by the first sample so constant data gives exactly that constant and 0.
inline Estimate summarize(std::span<const double> values, std::uint64_t seed) {
  if (values.size() < 2) throw std::invalid_argument("need at least 2 samples");
  const double shift = values[0];
  const auto n = static_cast<double>(values.size());
  std::vector<double> dev(values.begin(), values.end());
  for (double& x : dev) x -= shift;
  const double mean_shifted = pairwise_sum(dev) / n;
  for (double& x : dev) {
    x -= mean_shifted;
    x *= x;
  }
  const double var = pairwise_sum(dev) / (n - 1.0);
  return {shift + mean_shifted, std::sqrt(var / n), values.size(), seed};
}

/// MC mean of det Lambda^(k) using the pointwise sum-of-squares form.
inline Estimate estimate_expected_det(const MalliavinPair& p, std::size_t k,
                                      std::size_t n_samples, std::uint64_t seed,
                                      unsigned workers = 0) {
  p.check_k(k);
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  const SumOfSquares proto(p, k);
  const auto values = sample_values(
      p.dim(), n_samples, seed, [&] { return proto; }, workers);
  return summarize(values, seed);
}

inline std::vector<double> det_samples(const MalliavinPair& p, std::size_t k,
                                       std::size_t n_samples, std::uint64_t seed,
                                       unsigned workers = 0) {
  p.check_k(k);
  const SumOfSquares proto(p, k);
  return sample_values(p.dim(), n_samples, seed, [&] { return proto; }, workers);
}

/// MC mean of F^power, power in {1, 2}.
inline Estimate estimate_moment(const ChaosExpansion& F, int power,
                                std::size_t n_samples, std::uint64_t seed,
                                unsigned workers = 0) {
  if (power != 1 && power != 2)
    throw std::invalid_argument("estimate_moment: power must be 1 or 2");
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  const auto values = sample_values(
      F.dim(), n_samples, seed,
      [&] {
        return [&F, power](std::span<const double> xi) {
          const double v = evaluate(F, xi);
          return power == 1 ? v : v * v;
        };
      },
      workers);
  return summarize(values, seed);
}

}  // namespace chaoskit
