#pragma once

// Slow, direct reference implementations used only by the tests. Everything
// here loops over full index tuples and never calls the library's kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "chaoskit/tensor.hpp"

namespace oracle {

using Index = std::vector<std::size_t>;

inline std::size_t flat(const Index& idx, std::size_t dim) {
  std::size_t f = 0;
  for (std::size_t v : idx) f = f * dim + v;
  return f;
}

inline double get(const chaoskit::Tensor& t, const Index& idx) {
  return t[flat(idx, t.dim())];
}

// Calls visit(idx) for every tuple in [0,dim)^len, last slot fastest.
inline void for_each_tuple(std::size_t dim, std::size_t len,
                           const std::function<void(const Index&)>& visit) {
  Index idx(len, 0);
  while (true) {
    visit(idx);
    std::size_t pos = len;
    while (pos > 0) {
      if (++idx[pos - 1] < dim) break;
      idx[pos - 1] = 0;
      --pos;
    }
    if (pos == 0) return;
  }
}

inline Index cat(std::initializer_list<std::span<const std::size_t>> parts) {
  Index out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline std::span<const std::size_t> part(const Index& idx, std::size_t off,
                                         std::size_t len) {
  return std::span<const std::size_t>(idx).subspan(off, len);
}

inline chaoskit::Tensor make(std::size_t dim, std::size_t order,
                             const std::function<double(const Index&)>& entry) {
  std::vector<double> c(chaoskit::ipow(dim, order));
  for_each_tuple(dim, order, [&](const Index& idx) { c[flat(idx, dim)] = entry(idx); });
  return chaoskit::Tensor(dim, order, std::move(c));
}

// (f (x)_r g)[a, b] = sum_c f[c, a] g[c, b]
inline chaoskit::Tensor contract(const chaoskit::Tensor& f, const chaoskit::Tensor& g,
                                 std::size_t r) {
  const std::size_t d = f.dim(), n = f.order(), m = g.order();
  return make(d, n + m - 2 * r, [&](const Index& out) {
    double acc = 0.0;
    for_each_tuple(d, r, [&](const Index& c) {
      acc += get(f, cat({c, part(out, 0, n - r)})) *
             get(g, cat({c, part(out, n - r, m - r)}));
    });
    return acc;
  });
}

inline chaoskit::Tensor product(const chaoskit::Tensor& f, const chaoskit::Tensor& g) {
  return oracle::contract(f, g, 0);
}

// Average over all order! permutations of the slots.
inline chaoskit::Tensor symmetrize(const chaoskit::Tensor& f) {
  const std::size_t k = f.order();
  return make(f.dim(), k, [&](const Index& idx) {
    Index perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double acc = 0.0, count = 0.0;
    do {
      Index moved(k);
      for (std::size_t i = 0; i < k; ++i) moved[i] = idx[perm[i]];
      acc += get(f, moved);
      count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc / count;
  });
}

inline double inner(const chaoskit::Tensor& f, const chaoskit::Tensor& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return acc;
}

// sum f[i j k] g[i l p] ell[q j p] h[q l k]
//   |i| = |q| = r, |j| = |l| = s, |k| = n-r-s, |p| = m-r-s
inline double hat(const chaoskit::Tensor& f, const chaoskit::Tensor& g,
                  const chaoskit::Tensor& ell, const chaoskit::Tensor& h,
                  std::size_t r, std::size_t s) {
  const std::size_t n = f.order(), m = g.order(), d = f.dim();
  const std::size_t a = n - r - s, b = m - r - s;
  const std::size_t oi = 0, oj = r, ok = r + s, ol = r + s + a, op = ol + s,
                    oq = op + b, len = oq + r;
  double acc = 0.0;
  for_each_tuple(d, len, [&](const Index& x) {
    const auto i = part(x, oi, r), j = part(x, oj, s), k = part(x, ok, a),
               l = part(x, ol, s), p = part(x, op, b), q = part(x, oq, r);
    acc += get(f, cat({i, j, k})) * get(g, cat({i, l, p})) *
           get(ell, cat({q, j, p})) * get(h, cat({q, l, k}));
  });
  return acc;
}

inline double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

inline double choose(std::size_t n, std::size_t k) {
  return k > n ? 0.0 : factorial(n) / (factorial(k) * factorial(n - k));
}

// Explicit sum: He_n(x) = n! sum_j (-1)^j x^(n-2j) / (j! (n-2j)! 2^j)
inline double hermite(std::size_t n, double x) {
  double acc = 0.0;
  for (std::size_t j = 0; 2 * j <= n; ++j)
    acc += (j % 2 ? -1.0 : 1.0) * std::pow(x, static_cast<double>(n - 2 * j)) /
           (factorial(j) * factorial(n - 2 * j) * std::pow(2.0, static_cast<double>(j)));
  return factorial(n) * acc;
}

// I_n(f)(xi) = sum over every tuple of f[i] * prod_j He_{#j in i}(xi_j)
inline double integral(const chaoskit::Tensor& f, std::span<const double> xi) {
  const std::size_t d = f.dim();
  if (f.order() == 0) return f.value();
  double acc = 0.0;
  for_each_tuple(d, f.order(), [&](const Index& idx) {
    std::vector<std::size_t> mult(d, 0);
    for (std::size_t v : idx) ++mult[v];
    double prod = 1.0;
    for (std::size_t j = 0; j < d; ++j) prod *= hermite(mult[j], xi[j]);
    acc += get(f, idx) * prod;
  });
  return acc;
}

inline chaoskit::Tensor slice(const chaoskit::Tensor& f, const Index& head) {
  const std::size_t rest = f.order() - head.size();
  return make(f.dim(), rest, [&](const Index& tail) {
    return get(f, cat({head, tail}));
  });
}

// Coefficients of D^k I_n(f) at xi, one per k-tuple.
inline std::vector<double> derivative_at(const chaoskit::Tensor& f, std::size_t k,
                                         std::span<const double> xi) {
  const std::size_t n = f.order();
  const double c = factorial(n) / factorial(n - k);
  std::vector<double> out;
  for_each_tuple(f.dim(), k, [&](const Index& a) {
    out.push_back(c * oracle::integral(oracle::slice(f, a), xi));
  });
  return out;
}

// det of the 2x2 Gram matrix of D^k F and D^k G at xi.
inline double det_lambda(const chaoskit::Tensor& f, const chaoskit::Tensor& g,
                         std::size_t k, std::span<const double> xi) {
  const auto u = derivative_at(f, k, xi), v = derivative_at(g, k, xi);
  double uu = 0, uv = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    uv += u[i] * v[i];
    vv += v[i] * v[i];
  }
  return uu * vv - uv * uv;
}

// Gauss-Hermite rule for the standard normal: nodes are the roots of He_n,
// weights n! / (n He_{n-1}(x))^2. Exact for polynomials of degree < 2n.
struct Quadrature {
  std::vector<double> nodes, weights;
};

inline Quadrature gauss_hermite(std::size_t n) {
  Quadrature q;
  const double lim = 2.0 * std::sqrt(static_cast<double>(n)) + 1.0;
  const double step = 1e-3;
  double x0 = -lim, f0 = hermite(n, x0);
  for (double x1 = -lim + step; x1 <= lim; x1 += step) {
    const double f1 = hermite(n, x1);
    if (f0 == 0.0 || f0 * f1 < 0.0) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((hermite(n, lo) < 0.0) == (hermite(n, mid) < 0.0)) lo = mid; else hi = mid;
      }
      const double root = 0.5 * (lo + hi);
      const double h = hermite(n - 1, root);
      q.nodes.push_back(root);
      q.weights.push_back(factorial(n) / (static_cast<double>(n * n) * h * h));
    }
    x0 = x1;
    f0 = f1;
  }
  return q;
}

// E[fn(xi)] for xi ~ N(0, I_d), exact when fn is a polynomial of degree < 2 * q.size().
inline double gaussian_expectation(std::size_t d, const Quadrature& q,
                                   const std::function<double(std::span<const double>)>& fn) {
  double acc = 0.0;
  std::vector<double> xi(d);
  for_each_tuple(d == 0 ? 1 : q.nodes.size(), d, [&](const Index& idx) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      xi[j] = q.nodes[idx[j]];
      w *= q.weights[idx[j]];
    }
    acc += w * fn(xi);
  });
  return acc;
}

inline double rel_err(double observed, double expected) {
  return std::abs(observed - expected) / std::max(1.0, std::abs(expected));
}

inline double max_rel_err(const chaoskit::Tensor& a, const chaoskit::Tensor& b) {
  double scale = 1.0, diff = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) scale = std::max(scale, std::abs(b[i]));
  for (std::size_t i = 0; i < b.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? diff / scale : INFINITY;
}

}  // namespace oracle
