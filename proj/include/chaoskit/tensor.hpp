#pragma once

// Dense tensors over R^d with an orthonormal basis e_0, ..., e_{d-1}.
//
// An order-n tensor stores all d^n coefficients in row-major multi-index
// order, redundant symmetric copies included. Indices are 0-based: basis
// vector e_{j+1} in 1-based notation is index j here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaoskit/random.hpp"

namespace chaoskit {

inline constexpr double kSymmetryTolerance = 1e-12;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out *= base;
  return out;
}

/// A tuple of basis indices (j_1, ..., j_k), each in [0, d).
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<std::size_t> idx) : idx_(idx) {}
  explicit MultiIndex(std::vector<std::size_t> idx) : idx_(std::move(idx)) {}

  [[nodiscard]] std::size_t size() const { return idx_.size(); }
  [[nodiscard]] bool empty() const { return idx_.empty(); }
  [[nodiscard]] std::size_t operator[](std::size_t i) const { return idx_[i]; }
  [[nodiscard]] std::span<const std::size_t> values() const { return idx_; }

  [[nodiscard]] MultiIndex concat(const MultiIndex& tail) const {
    std::vector<std::size_t> out = idx_;
    out.insert(out.end(), tail.idx_.begin(), tail.idx_.end());
    return MultiIndex(std::move(out));
  }

  void check_dim(std::size_t dim) const {
    for (std::size_t v : idx_)
      if (v >= dim)
        throw std::out_of_range("multi-index entry " + std::to_string(v) +
                                " out of range for dim " + std::to_string(dim));
  }

  // Row-major position among the d^k tuples of the same length.
  [[nodiscard]] std::size_t flat(std::size_t dim) const {
    std::size_t out = 0;
    for (std::size_t v : idx_) out = out * dim + v;
    return out;
  }

  static MultiIndex from_flat(std::size_t flat, std::size_t dim,
                              std::size_t length) {
    std::vector<std::size_t> idx(length);
    for (std::size_t i = length; i-- > 0;) {
      idx[i] = flat % dim;
      flat /= dim;
    }
    return MultiIndex(std::move(idx));
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<std::size_t> idx_;
};

class Tensor {
 public:
  Tensor() : Tensor(1, 0) {}

  // Zero tensor.
  Tensor(std::size_t dim, std::size_t order)
      : dim_(dim), order_(order), coeffs_(ipow(dim, order), 0.0),
        symmetric_(true) {
    if (dim == 0) throw std::invalid_argument("tensor dim must be positive");
  }

  // Takes ownership of coefficients. Symmetry is not assumed unless the
  // order is at most 1; use verified_symmetric() to certify it.
  Tensor(std::size_t dim, std::size_t order, std::vector<double> coeffs)
      : dim_(dim), order_(order), coeffs_(std::move(coeffs)),
        symmetric_(order <= 1) {
    if (dim == 0) throw std::invalid_argument("tensor dim must be positive");
    if (coeffs_.size() != ipow(dim, order))
      throw std::invalid_argument("tensor needs dim^order = " +
                                  std::to_string(ipow(dim, order)) +
                                  " coefficients, got " +
                                  std::to_string(coeffs_.size()));
  }

  static Tensor scalar(double value, std::size_t dim) {
    return Tensor(dim, 0, std::vector<double>{value});
  }

  static Tensor basis(std::size_t dim, std::size_t j) {
    if (j >= dim) throw std::out_of_range("basis index out of range");
    std::vector<double> c(dim, 0.0);
    c[j] = 1.0;
    return Tensor(dim, 1, std::move(c));
  }

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t order() const { return order_; }
  [[nodiscard]] std::size_t size() const { return coeffs_.size(); }
  [[nodiscard]] std::span<const double> coeffs() const { return coeffs_; }
  [[nodiscard]] double operator[](std::size_t flat) const { return coeffs_[flat]; }

  [[nodiscard]] double at(const MultiIndex& idx) const {
    if (idx.size() != order_)
      throw std::invalid_argument("multi-index length does not match order");
    idx.check_dim(dim_);
    return coeffs_[idx.flat(dim_)];
  }

  // Scalar value of an order-0 tensor.
  [[nodiscard]] double value() const {
    if (order_ != 0) throw std::logic_error("value() on a non-scalar tensor");
    return coeffs_[0];
  }

  // True when symmetry is certified (by construction or verification).
  [[nodiscard]] bool known_symmetric() const { return symmetric_; }

  // Exhaustive check: every entry equals the entry at its sorted index.
  [[nodiscard]] bool is_symmetric(double tol = kSymmetryTolerance) const {
    if (order_ <= 1) return true;
    double scale = 1.0;
    for (double v : coeffs_) scale = std::max(scale, std::abs(v));
    std::vector<std::size_t> idx(order_, 0);
    for (std::size_t flat = 0; flat < coeffs_.size(); ++flat) {
      std::vector<std::size_t> sorted = idx;
      std::sort(sorted.begin(), sorted.end());
      const double other = coeffs_[MultiIndex(std::move(sorted)).flat(dim_)];
      if (std::abs(coeffs_[flat] - other) > tol * scale) return false;
      advance(idx);
    }
    return true;
  }

  // Copy flagged symmetric; throws std::invalid_argument if it is not.
  [[nodiscard]] Tensor verified_symmetric(double tol = kSymmetryTolerance) const {
    if (!symmetric_ && !is_symmetric(tol))
      throw std::invalid_argument("tensor is not symmetric");
    Tensor out = *this;
    out.symmetric_ = true;
    return out;
  }

  void require_symmetric(const char* what) const {
    if (symmetric_) return;
    if (!is_symmetric())
      throw std::invalid_argument(std::string(what) +
                                  ": operand must be symmetric");
  }

  // Odometer step over [0,dim)^order in row-major order.
  void advance(std::vector<std::size_t>& idx) const {
    for (std::size_t i = idx.size(); i-- > 0;) {
      if (++idx[i] < dim_) return;
      idx[i] = 0;
    }
  }

 private:
  friend Tensor with_symmetry(Tensor t, bool symmetric);

  std::size_t dim_;
  std::size_t order_;
  std::vector<double> coeffs_;
  bool symmetric_;
};

// Internal: attach a symmetry flag the caller has established by construction.
inline Tensor with_symmetry(Tensor t, bool symmetric) {
  t.symmetric_ = symmetric || t.order_ <= 1;
  return t;
}

namespace detail {

inline void check_same_dim(const Tensor& f, const Tensor& g, const char* what) {
  if (f.dim() != g.dim())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(f.dim()) + " vs " +
                                std::to_string(g.dim()) + ")");
}

inline void check_same_shape(const Tensor& f, const Tensor& g, const char* what) {
  check_same_dim(f, g, what);
  if (f.order() != g.order())
    throw std::invalid_argument(std::string(what) + ": order mismatch");
}

}  // namespace detail

inline Tensor add(const Tensor& f, const Tensor& g) {
  detail::check_same_shape(f, g, "add");
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += g[i];
  return with_symmetry(Tensor(f.dim(), f.order(), std::move(c)),
                       f.known_symmetric() && g.known_symmetric());
}

inline Tensor scale(double factor, const Tensor& f) {
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  for (double& v : c) v *= factor;
  return with_symmetry(Tensor(f.dim(), f.order(), std::move(c)),
                       f.known_symmetric());
}

/// Contraction of order r: sums the first r slots of f against the first r
/// slots of g. The result has f's remaining slots followed by g's.
///
/// For r > 0 both operands must be symmetric. The result is symmetric within
/// each block of free indices but generally not across them.
inline Tensor contract(const Tensor& f, const Tensor& g, std::size_t r) {
  detail::check_same_dim(f, g, "contract");
  if (r > std::min(f.order(), g.order()))
    throw std::invalid_argument("contract: r = " + std::to_string(r) +
                                " exceeds min(order f, order g)");
  if (r > 0) {
    f.require_symmetric("contract");
    g.require_symmetric("contract");
  }
  const std::size_t d = f.dim();
  const std::size_t shared = ipow(d, r);
  const std::size_t rows = ipow(d, f.order() - r);
  const std::size_t cols = ipow(d, g.order() - r);
  std::vector<double> out(rows * cols, 0.0);
  const auto fc = f.coeffs();
  const auto gc = g.coeffs();
  for (std::size_t i = 0; i < shared; ++i) {
    const double* frow = fc.data() + i * rows;
    const double* grow = gc.data() + i * cols;
    for (std::size_t j = 0; j < rows; ++j) {
      const double a = frow[j];
      if (a == 0.0) continue;
      double* orow = out.data() + j * cols;
      for (std::size_t k = 0; k < cols; ++k) orow[k] += a * grow[k];
    }
  }
  const bool sym = (f.order() == r && g.known_symmetric()) ||
                   (g.order() == r && f.known_symmetric());
  return with_symmetry(Tensor(d, f.order() + g.order() - 2 * r, std::move(out)),
                       sym);
}

inline Tensor tensor_product(const Tensor& f, const Tensor& g) {
  return contract(f, g, 0);
}

/// Average over all permutations of the index slots.
///
/// Entries sharing a sorted index form one orbit; each gets the orbit mean,
/// which equals (1/k!) sum_sigma f[sigma(j)].
inline Tensor symmetrize(const Tensor& f) {
  if (f.known_symmetric()) return f;
  const std::size_t d = f.dim();
  const std::size_t n = f.order();
  std::vector<double> sum(f.size(), 0.0);
  std::vector<std::uint32_t> count(f.size(), 0);
  std::vector<std::size_t> key(f.size());
  std::vector<std::size_t> idx(n, 0), sorted(n);
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = 0;
    for (std::size_t v : sorted) k = k * d + v;
    key[flat] = k;
    sum[k] += f[flat];
    ++count[k];
    f.advance(idx);
  }
  std::vector<double> out(f.size());
  for (std::size_t flat = 0; flat < f.size(); ++flat)
    out[flat] = sum[key[flat]] / count[key[flat]];
  return with_symmetry(Tensor(d, n, std::move(out)), true);
}

// Symmetrized contraction f (x)~_r g.
inline Tensor sym_contract(const Tensor& f, const Tensor& g, std::size_t r) {
  return symmetrize(contract(f, g, r));
}

inline double inner(const Tensor& f, const Tensor& g) {
  detail::check_same_shape(f, g, "inner");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return acc;
}

inline double norm(const Tensor& f) { return std::sqrt(inner(f, f)); }

/// Fixes the first k slots of a symmetric f at `idx`: the order-(n-k) tensor
/// f (x)_k (e_{j1} (x) ... (x) e_{jk}).
inline Tensor slice(const Tensor& f, const MultiIndex& idx) {
  f.require_symmetric("slice");
  if (idx.size() > f.order())
    throw std::invalid_argument("slice: index longer than tensor order");
  idx.check_dim(f.dim());
  const std::size_t rest = ipow(f.dim(), f.order() - idx.size());
  const std::size_t offset = idx.flat(f.dim()) * rest;
  const auto c = f.coeffs();
  std::vector<double> out(c.begin() + offset, c.begin() + offset + rest);
  return with_symmetry(Tensor(f.dim(), f.order() - idx.size(), std::move(out)),
                       true);
}

// Same as slice(f, MultiIndex::from_flat(flat, d, k)).
inline Tensor slice_flat(const Tensor& f, std::size_t flat, std::size_t k) {
  f.require_symmetric("slice");
  if (k > f.order()) throw std::invalid_argument("slice: k exceeds order");
  const std::size_t rest = ipow(f.dim(), f.order() - k);
  if (flat >= ipow(f.dim(), k)) throw std::out_of_range("slice: flat index");
  const auto c = f.coeffs();
  std::vector<double> out(c.begin() + flat * rest, c.begin() + (flat + 1) * rest);
  return with_symmetry(Tensor(f.dim(), f.order() - k, std::move(out)), true);
}

namespace detail {

// sum_x a[x] * b[y(x)] where axis `ax` of a maps to axis target[ax] of b.
inline double permuted_inner(const Tensor& a, const Tensor& b,
                             std::span<const std::size_t> target) {
  const std::size_t d = a.dim();
  const std::size_t n = a.order();
  std::vector<std::size_t> b_stride(n);
  for (std::size_t ax = 0; ax < n; ++ax)
    b_stride[ax] = ipow(d, n - 1 - target[ax]);
  std::vector<std::size_t> idx(n, 0);
  std::size_t b_off = 0;
  double acc = 0.0;
  const auto ac = a.coeffs();
  const auto bc = b.coeffs();
  for (std::size_t flat = 0; flat < ac.size(); ++flat) {
    acc += ac[flat] * bc[b_off];
    for (std::size_t i = n; i-- > 0;) {
      if (++idx[i] < d) {
        b_off += b_stride[i];
        break;
      }
      idx[i] = 0;
      b_off -= (d - 1) * b_stride[i];
    }
  }
  return acc;
}

}  // namespace detail

/// Hat pairing from precomputed fg = f (x)_r g and lh = ell (x)_r h, with
/// f, h of order n and g, ell of order m.
///
/// Free slots of fg are [j(s) k(n-r-s) | l(s) p(m-r-s)] and of lh are
/// [j(s) p(m-r-s) | l(s) k(n-r-s)]: j pairs f with ell, l pairs g with h,
/// k pairs f with h, p pairs g with ell.
inline double hat_pairing(const Tensor& fg, const Tensor& lh, std::size_t n,
                          std::size_t m, std::size_t r, std::size_t s) {
  if (r + s > std::min(n, m))
    throw std::invalid_argument("hat_contract: r + s exceeds min(n, m)");
  if (fg.order() != n + m - 2 * r || lh.order() != n + m - 2 * r)
    throw std::invalid_argument("hat_contract: contraction shape mismatch");
  const std::size_t kn = n - r - s;
  const std::size_t pm = m - r - s;
  // Axis offsets within lh.
  const std::size_t lj = 0, lp = s, ll = s + pm, lk = 2 * s + pm;
  std::vector<std::size_t> target;
  target.reserve(fg.order());
  for (std::size_t i = 0; i < s; ++i) target.push_back(lj + i);
  for (std::size_t i = 0; i < kn; ++i) target.push_back(lk + i);
  for (std::size_t i = 0; i < s; ++i) target.push_back(ll + i);
  for (std::size_t i = 0; i < pm; ++i) target.push_back(lp + i);
  return detail::permuted_inner(fg, lh, target);
}

/// (f (x)_r g) ^(x)_s (ell (x)_r h): contracts r slots f-g and ell-h, s slots
/// f-ell and g-h, n-r-s slots f-h and m-r-s slots g-ell.
inline double hat_contract(const Tensor& f, const Tensor& g, const Tensor& ell,
                           const Tensor& h, std::size_t r, std::size_t s) {
  detail::check_same_dim(f, g, "hat_contract");
  detail::check_same_dim(f, ell, "hat_contract");
  detail::check_same_dim(f, h, "hat_contract");
  const std::size_t n = f.order();
  const std::size_t m = g.order();
  if (h.order() != n || ell.order() != m)
    throw std::invalid_argument(
        "hat_contract: need order(h) = order(f) and order(ell) = order(g)");
  if (r + s > std::min(n, m))
    throw std::invalid_argument("hat_contract: r + s exceeds min(n, m)");
  for (const Tensor* t : {&f, &g, &ell, &h}) t->require_symmetric("hat_contract");
  return hat_pairing(contract(f, g, r), contract(ell, h, r), n, m, r, s);
}

/// iid standard-normal coefficients, then symmetrized. Deterministic in seed.
inline Tensor random_symmetric(std::size_t dim, std::size_t order,
                               std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("random_symmetric: dim must be >= 1");
  std::vector<double> c(ipow(dim, order));
  fill_normals(c, seed, stream_id::kTensorEntries, 0);
  return symmetrize(Tensor(dim, order, std::move(c)));
}

}  // namespace chaoskit
