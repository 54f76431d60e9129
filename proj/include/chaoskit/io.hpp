#pragma once

// JSON file formats.
//
//   tensor: {"dim", "order", "symmetric", "entries": [{"index": [...], "value"}]}
//           unlisted entries are zero.
//   chaos:  {"dim", "terms": [{"order", "tensor": <tensor>}]}
//   pair:   {"dim", "n", "m", "f": <tensor>, "g": <tensor>}
//
// Loaders raise SchemaError on any violation.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoskit/chaos.hpp"
#include "chaoskit/malliavin.hpp"
#include "chaoskit/mc.hpp"
#include "chaoskit/tensor.hpp"

namespace chaoskit {

using json = nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorLoadOptions {
  // Symmetrize tensors declared "symmetric": false instead of keeping them raw.
  bool symmetrize = false;
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw SchemaError(ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(ctx + ": missing field \"" + key + "\"");
  return *it;
}

inline std::size_t require_count(const json& j, const char* key,
                                 const std::string& ctx, std::size_t min) {
  const json& v = require(j, key, ctx);
  if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min))
    throw SchemaError(ctx + ": \"" + key + "\" must be an integer >= " +
                      std::to_string(min));
  return v.get<std::size_t>();
}

}  // namespace detail

inline json tensor_to_json(const Tensor& t) {
  json entries = json::array();
  std::vector<std::size_t> idx(t.order(), 0);
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    if (t[flat] != 0.0) entries.push_back({{"index", idx}, {"value", t[flat]}});
    t.advance(idx);
  }
  return {{"dim", t.dim()},
          {"order", t.order()},
          {"symmetric", t.known_symmetric() || t.is_symmetric()},
          {"entries", std::move(entries)}};
}

inline Tensor tensor_from_json(const json& j, TensorLoadOptions opt = {},
                               const std::string& ctx = "tensor") {
  const std::size_t dim = detail::require_count(j, "dim", ctx, 1);
  const std::size_t order = detail::require_count(j, "order", ctx, 0);
  bool symmetric = false;
  if (auto it = j.find("symmetric"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError(ctx + ": \"symmetric\" must be a bool");
    symmetric = it->get<bool>();
  }
  const json& entries = detail::require(j, "entries", ctx);
  if (!entries.is_array()) throw SchemaError(ctx + ": \"entries\" must be an array");
  if (order > 0 && ipow(dim, order) > (std::size_t{1} << 26))
    throw SchemaError(ctx + ": dim^order too large for dense storage");
  std::vector<double> coeffs(ipow(dim, order), 0.0);
  std::set<std::size_t> seen;
  for (const json& e : entries) {
    const json& index = detail::require(e, "index", ctx + " entry");
    const json& value = detail::require(e, "value", ctx + " entry");
    if (!index.is_array() || index.size() != order)
      throw SchemaError(ctx + ": entry index must have " + std::to_string(order) +
                        " components");
    if (!value.is_number()) throw SchemaError(ctx + ": entry value must be a number");
    std::size_t flat = 0;
    for (const json& c : index) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 0 ||
          c.get<std::size_t>() >= dim)
        throw SchemaError(ctx + ": index component out of range [0, " +
                          std::to_string(dim) + ")");
      flat = flat * dim + c.get<std::size_t>();
    }
    if (!seen.insert(flat).second)
      throw SchemaError(ctx + ": duplicate entry " + index.dump());
    coeffs[flat] = value.get<double>();
  }
  Tensor t(dim, order, std::move(coeffs));
  if (symmetric) {
    if (!t.is_symmetric())
      throw SchemaError(ctx + ": declared symmetric but entries are not");
    return t.verified_symmetric();
  }
  return opt.symmetrize ? symmetrize(t) : t;
}

inline json chaos_to_json(const ChaosExpansion& F) {
  json terms = json::array();
  for (const auto& [k, t] : F.terms())
    terms.push_back({{"order", k}, {"tensor", tensor_to_json(t)}});
  return {{"dim", F.dim()}, {"terms", std::move(terms)}};
}

inline ChaosExpansion chaos_from_json(const json& j, TensorLoadOptions opt = {}) {
  const std::string ctx = "chaos";
  const std::size_t dim = detail::require_count(j, "dim", ctx, 1);
  const json& terms = detail::require(j, "terms", ctx);
  if (!terms.is_array()) throw SchemaError(ctx + ": \"terms\" must be an array");
  ChaosExpansion out(dim);
  std::set<std::size_t> seen;
  for (const json& term : terms) {
    const std::size_t order = detail::require_count(term, "order", ctx + " term", 0);
    const Tensor t = tensor_from_json(detail::require(term, "tensor", ctx + " term"),
                                      opt, ctx + " term tensor");
    if (t.order() != order || t.dim() != dim)
      throw SchemaError(ctx + ": term tensor shape disagrees with order/dim");
    if (!seen.insert(order).second)
      throw SchemaError(ctx + ": duplicate order " + std::to_string(order));
    if (!t.known_symmetric())
      throw SchemaError(ctx + ": chaos terms must be symmetric tensors");
    out.set_term(t);
  }
  return out;
}

inline json pair_to_json(const MalliavinPair& p,
                         std::optional<std::uint64_t> seed = std::nullopt) {
  json out = {{"dim", p.dim()},
              {"n", p.n()},
              {"m", p.m()},
              {"f", tensor_to_json(p.f())},
              {"g", tensor_to_json(p.g())}};
  if (seed) out["seed"] = *seed;
  return out;
}

inline MalliavinPair pair_from_json(const json& j, TensorLoadOptions opt = {}) {
  const std::string ctx = "pair";
  const std::size_t dim = detail::require_count(j, "dim", ctx, 1);
  const std::size_t n = detail::require_count(j, "n", ctx, 1);
  const std::size_t m = detail::require_count(j, "m", ctx, 1);
  const Tensor f = tensor_from_json(detail::require(j, "f", ctx), opt, "pair.f");
  const Tensor g = tensor_from_json(detail::require(j, "g", ctx), opt, "pair.g");
  if (f.dim() != dim || g.dim() != dim)
    throw SchemaError(ctx + ": tensor dim disagrees with \"dim\"");
  if (f.order() != n || g.order() != m)
    throw SchemaError(ctx + ": tensor orders disagree with \"n\"/\"m\"");
  if (!f.known_symmetric() || !g.known_symmetric())
    throw SchemaError(ctx + ": f and g must be symmetric (or load with symmetrize)");
  return MalliavinPair(f, g);
}

inline json estimate_to_json(const Estimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"samples", e.samples},
          {"seed", e.seed}};
}

inline json breakdown_to_json(const DetBreakdown& b,
                              const std::optional<Estimate>& mc = std::nullopt) {
  json out = {{"k", b.k},
              {"t0", b.t0},
              {"tr", b.tr},
              {"remainder", b.remainder},
              {"closed_form", b.closed_form}};
  out["symbolic"] = b.symbolic ? json(*b.symbolic) : json(nullptr);
  out["mc"] = mc ? estimate_to_json(*mc) : json(nullptr);
  return out;
}

inline json density_to_json(const DensityReport& r) {
  json table = json::array();
  for (std::size_t i = 0; i < r.edet.size(); ++i)
    table.push_back({{"k", i + 1},
                     {"expected_det", r.edet[i]},
                     {"zero_threshold", r.zero_threshold[i]}});
  return {{"verdict", to_string(r.verdict)},
          {"cov_det", r.cov_det},
          {"tol_abs", r.tol_abs},
          {"consistent", r.consistent},
          {"expected_det", std::move(table)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace chaoskit
