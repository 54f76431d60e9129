#pragma once

// Random variables in a finite sum of Wiener chaoses over H = R^d.
//
// F = sum_k I_k(f_k) is stored as order -> symmetric tensor f_k. With
// xi_j = W(e_j) iid standard normal, I_k(f_k) is the polynomial
// sum_j f_k[j] prod_i He_{m_i(j)}(xi_i), He the probabilists' Hermite
// polynomials and m_i(j) the number of times i occurs in j.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaoskit/combinatorics.hpp"
#include "chaoskit/tensor.hpp"

namespace chaoskit {

/// Probabilists' Hermite polynomial: He_0 = 1, He_1 = x,
/// He_{k+1} = x He_k - k He_{k-1}.
inline double hermite(std::size_t n, double x) {
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = x;
  for (std::size_t k = 1; k < n; ++k) {
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// He_0(x), ..., He_n(x).
inline std::vector<double> hermite_table(std::size_t n, double x) {
  std::vector<double> out(n + 1);
  out[0] = 1.0;
  if (n >= 1) out[1] = x;
  for (std::size_t k = 1; k < n; ++k)
    out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
  return out;
}

class ChaosExpansion {
 public:
  explicit ChaosExpansion(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("chaos dim must be positive");
  }

  static ChaosExpansion constant(double c, std::size_t dim) {
    ChaosExpansion out(dim);
    out.set_term(Tensor::scalar(c, dim));
    return out;
  }

  // I_n(f) for a symmetric f.
  static ChaosExpansion integral(const Tensor& f) {
    ChaosExpansion out(f.dim());
    out.set_term(f);
    return out;
  }

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::map<std::size_t, Tensor>& terms() const { return terms_; }
  [[nodiscard]] bool has_order(std::size_t k) const { return terms_.contains(k); }

  // Tensor of order k; zero when absent.
  [[nodiscard]] Tensor term(std::size_t k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? Tensor(dim_, k) : it->second;
  }

  [[nodiscard]] std::size_t max_order() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first;
  }

  // Replaces the term of f.order(). f must be symmetric.
  void set_term(const Tensor& f) {
    if (f.dim() != dim_)
      throw std::invalid_argument("chaos term dimension mismatch");
    terms_.insert_or_assign(f.order(), f.verified_symmetric());
  }

  // Adds f (symmetric) into the term of its order.
  void accumulate(const Tensor& f) {
    auto it = terms_.find(f.order());
    if (it == terms_.end())
      set_term(f);
    else
      it->second = add(it->second, f.verified_symmetric());
  }

 private:
  std::size_t dim_;
  std::map<std::size_t, Tensor> terms_;
};

/// An H^{(x)k}-valued chaos element: one ChaosExpansion per multi-index of
/// length k, stored in row-major multi-index order.
class HValuedChaos {
 public:
  HValuedChaos(std::size_t dim, std::size_t tensor_order,
               std::vector<ChaosExpansion> entries)
      : dim_(dim), tensor_order_(tensor_order), entries_(std::move(entries)) {
    if (entries_.size() != ipow(dim, tensor_order))
      throw std::invalid_argument("HValuedChaos needs dim^k entries");
    for (const auto& e : entries_)
      if (e.dim() != dim) throw std::invalid_argument("HValuedChaos entry dim");
  }

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t tensor_order() const { return tensor_order_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const ChaosExpansion& entry(std::size_t flat) const {
    return entries_.at(flat);
  }
  [[nodiscard]] const ChaosExpansion& entry(const MultiIndex& idx) const {
    if (idx.size() != tensor_order_)
      throw std::invalid_argument("HValuedChaos: index length mismatch");
    idx.check_dim(dim_);
    return entries_[idx.flat(dim_)];
  }
  [[nodiscard]] std::span<const ChaosExpansion> entries() const { return entries_; }

 private:
  std::size_t dim_;
  std::size_t tensor_order_;
  std::vector<ChaosExpansion> entries_;
};

namespace detail {
inline void check_same_dim(const ChaosExpansion& a, const ChaosExpansion& b,
                           const char* what) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
}  // namespace detail

inline ChaosExpansion add(const ChaosExpansion& a, const ChaosExpansion& b) {
  detail::check_same_dim(a, b, "add");
  ChaosExpansion out = a;
  for (const auto& [k, t] : b.terms()) out.accumulate(t);
  return out;
}

inline ChaosExpansion scale(double c, const ChaosExpansion& a) {
  ChaosExpansion out(a.dim());
  if (c == 0.0) return out;
  for (const auto& [k, t] : a.terms()) out.set_term(scale(c, t));
  return out;
}

inline ChaosExpansion subtract(const ChaosExpansion& a, const ChaosExpansion& b) {
  return add(a, scale(-1.0, b));
}

/// Product via I_n(f) I_m(g) = sum_r r! C(m,r) C(n,r) I_{n+m-2r}(f (x)~_r g),
/// extended bilinearly. All orders up to n+m are kept.
inline ChaosExpansion multiply(const ChaosExpansion& a, const ChaosExpansion& b) {
  detail::check_same_dim(a, b, "multiply");
  const std::size_t d = a.dim();
  // Symmetrization is linear, so raw contractions are summed per output
  // order and symmetrized once.
  std::map<std::size_t, std::vector<double>> raw;
  for (const auto& [n, f] : a.terms()) {
    for (const auto& [m, g] : b.terms()) {
      for (std::size_t r = 0; r <= std::min(n, m); ++r) {
        const double coef =
            to_double(checked_mul(checked_mul(factorial(static_cast<unsigned>(r)),
                                              binomial(static_cast<unsigned>(m),
                                                       static_cast<unsigned>(r))),
                                  binomial(static_cast<unsigned>(n),
                                           static_cast<unsigned>(r))));
        const Tensor c = contract(f, g, r);
        auto& acc = raw[c.order()];
        if (acc.empty()) acc.assign(c.size(), 0.0);
        const auto cc = c.coeffs();
        for (std::size_t i = 0; i < cc.size(); ++i) acc[i] += coef * cc[i];
      }
    }
  }
  ChaosExpansion out(d);
  for (auto& [order, coeffs] : raw)
    out.set_term(symmetrize(Tensor(d, order, std::move(coeffs))));
  return out;
}

inline double expectation(const ChaosExpansion& a) {
  return a.has_order(0) ? a.term(0).value() : 0.0;
}

/// E[F G] = sum_k k! <f_k, g_k>.
inline double l2_inner(const ChaosExpansion& a, const ChaosExpansion& b) {
  detail::check_same_dim(a, b, "l2_inner");
  double acc = 0.0;
  for (const auto& [k, f] : a.terms()) {
    if (!b.has_order(k)) continue;
    acc += to_double(factorial(static_cast<unsigned>(k))) *
           inner(f, b.terms().at(k));
  }
  return acc;
}

/// D^(k) F: entry j equals sum_n n!/(n-k)! I_{n-k}(f_n sliced at j).
inline HValuedChaos derivative(const ChaosExpansion& a, std::size_t k) {
  if (k == 0) throw std::invalid_argument("derivative: k must be >= 1");
  const std::size_t d = a.dim();
  const std::size_t count = ipow(d, k);
  std::vector<ChaosExpansion> entries(count, ChaosExpansion(d));
  for (const auto& [n, f] : a.terms()) {
    if (n < k) continue;
    const double coef = to_double(
        falling_factorial(static_cast<unsigned>(n), static_cast<unsigned>(k)));
    for (std::size_t j = 0; j < count; ++j)
      entries[j].set_term(scale(coef, slice_flat(f, j, k)));
  }
  return HValuedChaos(d, k, std::move(entries));
}

/// Divergence of u = sum_j u_j e_j with u_j = sum_m I_m(g_j^(m)):
/// sum_m I_{m+1}(symmetrize(sum_j g_j^(m) (x) e_j)).
inline ChaosExpansion divergence(const HValuedChaos& u) {
  if (u.tensor_order() != 1)
    throw std::invalid_argument("divergence: only H-valued (order 1) fields");
  const std::size_t d = u.dim();
  std::map<std::size_t, std::vector<double>> raw;
  for (std::size_t j = 0; j < d; ++j) {
    for (const auto& [m, g] : u.entry(j).terms()) {
      auto& acc = raw[m + 1];
      if (acc.empty()) acc.assign(ipow(d, m + 1), 0.0);
      // (g (x) e_j)[a, j] = g[a]
      const auto gc = g.coeffs();
      for (std::size_t a = 0; a < gc.size(); ++a) acc[a * d + j] += gc[a];
    }
  }
  ChaosExpansion out(d);
  for (auto& [order, coeffs] : raw)
    out.set_term(symmetrize(Tensor(d, order, std::move(coeffs))));
  return out;
}

namespace detail {

// Calls visit(flat, multiplicities) once per sorted multi-index of length k,
// where multiplicities[i] counts occurrences of i.
template <typename Visit>
void for_each_sorted_index(std::size_t d, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> idx(k, 0);
  std::vector<std::size_t> mult(d, 0);
  while (true) {
    std::fill(mult.begin(), mult.end(), 0);
    std::size_t flat = 0;
    for (std::size_t v : idx) {
      flat = flat * d + v;
      ++mult[v];
    }
    visit(flat, std::span<const std::size_t>(mult));
    // next non-decreasing tuple
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == d - 1) --pos;
    if (pos == 0) return;
    const std::size_t v = idx[pos - 1] + 1;
    for (std::size_t i = pos - 1; i < k; ++i) idx[i] = v;
  }
}

}  // namespace detail

/// Evaluates F at xi = (W(e_0), ..., W(e_{d-1})) as a Hermite polynomial.
inline double evaluate(const ChaosExpansion& a, std::span<const double> xi) {
  if (xi.size() != a.dim())
    throw std::invalid_argument("evaluate: point has length " +
                                std::to_string(xi.size()) + ", expected " +
                                std::to_string(a.dim()));
  const std::size_t d = a.dim();
  const std::size_t top = a.max_order();
  std::vector<std::vector<double>> he(d);
  for (std::size_t i = 0; i < d; ++i) he[i] = hermite_table(top, xi[i]);
  double total = 0.0;
  for (const auto& [k, f] : a.terms()) {
    if (k == 0) {
      total += f.value();
      continue;
    }
    const exact_uint kfact = factorial(static_cast<unsigned>(k));
    double acc = 0.0;
    // Symmetric f: each orbit contributes (orbit size) * value * product.
    detail::for_each_sorted_index(d, k, [&](std::size_t flat,
                                            std::span<const std::size_t> mult) {
      const double v = f[flat];
      if (v == 0.0) return;
      exact_uint stabilizer = 1;
      double prod = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        if (mult[i] == 0) continue;
        stabilizer *= factorial(static_cast<unsigned>(mult[i]));
        prod *= he[i][mult[i]];
      }
      acc += to_double(kfact / stabilizer) * v * prod;
    });
    total += acc;
  }
  return total;
}

}  // namespace chaoskit
