// chaoskit: command-line front end.
//
//   chaoskit verify  --suite all|tensor|chaos|malliavin|mc [--dim --max-order --trials --samples]
//   chaoskit edet    --pair FILE [--k 1,2] [--samples N]
//   chaoskit density --pair FILE [--tol-abs X]
//   chaoskit mc      --pair FILE [--k LIST] [--samples N]
//   chaoskit sweep   --order N [--dim D --trials T]
//   chaoskit gen     --dim D --order N [--order-g M] [--pair] [--proportional C] -o FILE
//
// Exit codes: 0 success, 1 a check failed, 2 invalid input or configuration.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chaoskit/chaoskit.hpp"

namespace {

using chaoskit::json;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitInvalid = 2;

struct RunConfig {
  std::string suite = "all";
  std::size_t dim = 3;
  std::size_t max_order = 4;
  std::size_t order = 2;
  std::optional<std::size_t> order_g;
  std::size_t trials = 10;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  double tol_rel = 1e-9;
  std::optional<double> tol_abs;
  std::string output = "json";
  std::string out_path;
  std::string pair_path;
  std::vector<std::size_t> ks;
  bool symmetrize = false;
  bool make_pair = false;
  std::optional<double> proportional;
  unsigned workers = 0;
};

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    chaoskit::write_text_file(cfg.out_path, text);
  }
}

void emit_json(const RunConfig& cfg, const json& j) { emit(cfg, j.dump(2) + "\n"); }

chaoskit::MalliavinPair load_pair(const RunConfig& cfg) {
  if (cfg.pair_path.empty()) throw InvalidConfig("--pair FILE is required");
  return chaoskit::pair_from_json(chaoskit::read_json_file(cfg.pair_path),
                                  {.symmetrize = cfg.symmetrize});
}

std::vector<std::size_t> resolve_ks(const RunConfig& cfg,
                                    const chaoskit::MalliavinPair& p) {
  std::vector<std::size_t> ks = cfg.ks;
  if (ks.empty())
    for (std::size_t k = 1; k <= p.min_order(); ++k) ks.push_back(k);
  for (std::size_t k : ks)
    if (k < 1 || k > p.min_order())
      throw InvalidConfig("k = " + std::to_string(k) + " out of range [1, " +
                          std::to_string(p.min_order()) + "]");
  return ks;
}

void check_common(const RunConfig& cfg) {
  if (cfg.output != "json" && cfg.output != "csv")
    throw InvalidConfig("--output must be json or csv");
  if (!(cfg.tol_rel > 0.0)) throw InvalidConfig("--tol-rel must be > 0");
  if (cfg.tol_abs && !(*cfg.tol_abs > 0.0)) throw InvalidConfig("--tol-abs must be > 0");
}

int cmd_verify(const RunConfig& cfg) {
  if (cfg.dim < 1 || cfg.max_order < 1 || cfg.trials < 1)
    throw InvalidConfig("--dim, --max-order and --trials must be positive");
  const auto& names = chaoskit::verify::suite_names();
  if (cfg.suite != "all" && std::find(names.begin(), names.end(), cfg.suite) == names.end())
    throw InvalidConfig("unknown suite " + cfg.suite);
  chaoskit::verify::Config vc;
  vc.dim = cfg.dim;
  vc.max_order = cfg.max_order;
  vc.trials = cfg.trials;
  vc.samples = cfg.samples == 0 ? chaoskit::kDefaultSamples : cfg.samples;
  vc.seed = cfg.seed;
  vc.tol_rel = cfg.tol_rel;
  vc.workers = cfg.workers;
  chaoskit::verify::Log log;
  chaoskit::verify::run_suite(cfg.suite, vc, log);
  if (cfg.output == "csv") {
    std::ostringstream out;
    out << "suite,check,seed,params,observed,expected,tolerance,passed\n";
    for (const auto& c : log.checks())
      out << c.suite << ',' << c.name << ',' << c.seed << ",\"" << c.params << "\","
          << num(c.observed) << ',' << num(c.expected) << ',' << num(c.tolerance)
          << ',' << (c.passed ? "true" : "false") << '\n';
    emit(cfg, out.str());
  } else {
    json report = log.to_json();
    report["suite"] = cfg.suite;
    report["replay"] = "chaoskit verify --suite " + cfg.suite + " --dim " +
                       std::to_string(cfg.dim) + " --max-order " +
                       std::to_string(cfg.max_order) + " --trials " +
                       std::to_string(cfg.trials) + " --samples " +
                       std::to_string(vc.samples) + " --seed " +
                       std::to_string(cfg.seed) + " --tol-rel " + num(cfg.tol_rel);
    emit_json(cfg, report);
  }
  return log.failures() == 0 ? kExitOk : kExitFailed;
}

int cmd_edet(const RunConfig& cfg) {
  const chaoskit::MalliavinPair p = load_pair(cfg);
  const auto ks = resolve_ks(cfg, p);
  const chaoskit::PairAnalysis analysis(p);
  json rows = json::array();
  std::ostringstream csv;
  csv << "k,t0,remainder,closed_form,symbolic,mc_mean,mc_stderr,mc_samples\n";
  for (std::size_t k : ks) {
    chaoskit::DetBreakdown b = analysis.breakdown(k);
    b.symbolic = chaoskit::expected_det_symbolic(p, k);
    std::optional<chaoskit::Estimate> mc;
    if (cfg.samples > 0)
      mc = chaoskit::estimate_expected_det(p, k, cfg.samples, cfg.seed, cfg.workers);
    rows.push_back(chaoskit::breakdown_to_json(b, mc));
    csv << k << ',' << num(b.t0) << ',' << num(b.remainder) << ','
        << num(b.closed_form) << ',' << num(*b.symbolic) << ','
        << (mc ? num(mc->mean) : "") << ',' << (mc ? num(mc->std_error) : "") << ','
        << (mc ? std::to_string(mc->samples) : "") << '\n';
  }
  if (cfg.output == "csv")
    emit(cfg, csv.str());
  else
    emit_json(cfg, {{"n", p.n()}, {"m", p.m()}, {"dim", p.dim()}, {"breakdown", rows}});
  return kExitOk;
}

int cmd_density(const RunConfig& cfg) {
  const chaoskit::MalliavinPair p = load_pair(cfg);
  if (p.n() != p.m()) throw InvalidConfig("density requires n = m in the pair file");
  const chaoskit::DensityReport r = chaoskit::density_check(p, cfg.tol_abs);
  if (cfg.output == "csv") {
    std::ostringstream out;
    out << "verdict,cov_det,tol_abs,k,expected_det,zero_threshold\n";
    for (std::size_t i = 0; i < r.edet.size(); ++i)
      out << chaoskit::to_string(r.verdict) << ',' << num(r.cov_det) << ','
          << num(r.tol_abs) << ',' << i + 1 << ',' << num(r.edet[i]) << ','
          << num(r.zero_threshold[i]) << '\n';
    emit(cfg, out.str());
  } else {
    emit_json(cfg, chaoskit::density_to_json(r));
  }
  return kExitOk;
}

int cmd_mc(const RunConfig& cfg) {
  const chaoskit::MalliavinPair p = load_pair(cfg);
  const auto ks = resolve_ks(cfg, p);
  const std::size_t samples = cfg.samples == 0 ? chaoskit::kDefaultSamples : cfg.samples;
  if (samples < 2) throw InvalidConfig("--samples must be >= 2");
  if (cfg.output == "csv") {
    std::ostringstream out;
    out << (ks.size() == 1 ? "index,value\n" : "k,index,value\n");
    for (std::size_t k : ks) {
      const auto values = chaoskit::det_samples(p, k, samples, cfg.seed, cfg.workers);
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (ks.size() != 1) out << k << ',';
        out << i << ',' << num(values[i]) << '\n';
      }
    }
    emit(cfg, out.str());
    return kExitOk;
  }
  const chaoskit::PairAnalysis analysis(p);
  json rows = json::array();
  for (std::size_t k : ks) {
    const auto est = chaoskit::estimate_expected_det(p, k, samples, cfg.seed, cfg.workers);
    const double closed = analysis.expected_det(k);
    json row = chaoskit::estimate_to_json(est);
    row["k"] = k;
    row["closed_form"] = closed;
    row["within_band"] = est.covers(closed);
    rows.push_back(row);
  }
  emit_json(cfg, {{"band_stderr", chaoskit::kDefaultBand}, {"estimates", rows}});
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  const std::size_t n = cfg.order;
  if (n < 2) throw InvalidConfig("sweep requires --order >= 2");
  if (cfg.dim < 1 || cfg.trials < 1) throw InvalidConfig("--dim and --trials must be positive");
  json rows = json::array();
  std::ostringstream csv;
  csv << "trial,seed,lhs,rhs,ratio,holds,direct_bound_holds\n";
  std::size_t violations = 0;
  double min_ratio = INFINITY;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t s = chaoskit::derive_seed(cfg.seed, 600 + n, t);
    const chaoskit::MalliavinPair p(
        chaoskit::random_symmetric(cfg.dim, n, chaoskit::derive_seed(s, 0, 0)),
        chaoskit::random_symmetric(cfg.dim, n, chaoskit::derive_seed(s, 1, 0)));
    const chaoskit::PairAnalysis a(p);
    const chaoskit::CovarianceBound th = chaoskit::covariance_bound_check(a, cfg.tol_rel);
    std::optional<bool> direct;
    if (n <= 4) {
      const double c = chaoskit::direct_bound_constant(static_cast<unsigned>(n)).value();
      direct = th.edet[0] >= c * chaoskit::cov_det(p) - th.tolerance;
    }
    const bool ok = th.holds && direct.value_or(true);
    if (!ok) ++violations;
    min_ratio = std::min(min_ratio, th.ratio());
    json row = {{"trial", t}, {"seed", s}, {"lhs", th.lhs}, {"rhs", th.rhs},
                {"ratio", th.ratio()}, {"holds", th.holds}};
    row["direct_bound_holds"] = direct ? json(*direct) : json(nullptr);
    rows.push_back(row);
    csv << t << ',' << s << ',' << num(th.lhs) << ',' << num(th.rhs) << ','
        << num(th.ratio()) << ',' << (th.holds ? "true" : "false") << ','
        << (direct ? (*direct ? "true" : "false") : "") << '\n';
  }
  if (cfg.output == "csv") {
    emit(cfg, csv.str());
  } else {
    json report = {{"n", n}, {"dim", cfg.dim}, {"trials", cfg.trials},
                   {"seed", cfg.seed}, {"violations", violations},
                   {"min_ratio", min_ratio}, {"rows", rows}};
    if (n <= 4)
      report["direct_bound_constant"] =
          chaoskit::direct_bound_constant(static_cast<unsigned>(n)).value();
    emit_json(cfg, report);
  }
  return violations == 0 ? kExitOk : kExitFailed;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.dim < 1) throw InvalidConfig("--dim must be positive");
  const bool pair = cfg.make_pair || cfg.proportional || cfg.order_g;
  const chaoskit::Tensor f = chaoskit::random_symmetric(
      cfg.dim, cfg.order, chaoskit::derive_seed(cfg.seed, 700, 0));
  if (!pair) {
    json out = chaoskit::tensor_to_json(f);
    out["seed"] = cfg.seed;
    emit_json(cfg, out);
    return kExitOk;
  }
  if (cfg.order < 1) throw InvalidConfig("pair orders must be >= 1");
  chaoskit::Tensor g;
  if (cfg.proportional) {
    if (cfg.order_g && *cfg.order_g != cfg.order)
      throw InvalidConfig("--proportional needs equal orders");
    g = chaoskit::scale(*cfg.proportional, f);
  } else {
    g = chaoskit::random_symmetric(cfg.dim, cfg.order_g.value_or(cfg.order),
                                   chaoskit::derive_seed(cfg.seed, 700, 1));
  }
  json out = chaoskit::pair_to_json(chaoskit::MalliavinPair(f, g), cfg.seed);
  if (cfg.proportional) out["proportional"] = *cfg.proportional;
  emit_json(cfg, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wiener chaos tensor algebra and iterated Malliavin matrix checks"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Base seed (default from CHAOSKIT_SEED, else 1)")
        ->envname("CHAOSKIT_SEED");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--output", cfg.output, "Report format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("-o", cfg.out_path, "Write the report to PATH instead of stdout");
  };
  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--pair", cfg.pair_path, "Pair file (JSON)")->required();
    sub->add_flag("--symmetrize", cfg.symmetrize,
                  "Symmetrize tensors declared non-symmetric instead of rejecting");
  };
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", cfg.workers, "Worker threads (0 = hardware)");
  };

  auto* verify = app.add_subcommand("verify", "Run identity suites");
  verify->add_option("--suite", cfg.suite, "Suite to run")
      ->check(CLI::IsMember({"all", "tensor", "chaos", "malliavin", "mc"}));
  verify->add_option("--dim", cfg.dim, "Largest basis dimension");
  verify->add_option("--max-order", cfg.max_order, "Largest tensor order");
  verify->add_option("--trials", cfg.trials, "Random instances per shape");
  verify->add_option("--samples", cfg.samples, "Monte Carlo samples");
  verify->add_option("--tol-rel", cfg.tol_rel, "Relative tolerance");
  add_seed(verify);
  add_output(verify);
  add_workers(verify);

  auto* edet = app.add_subcommand("edet", "E det Lambda^(k) breakdown for a pair");
  add_pair(edet);
  edet->add_option("--k", cfg.ks, "Comma-separated k values")->delimiter(',');
  edet->add_option("--samples", cfg.samples, "Monte Carlo samples (0 = none)");
  add_seed(edet);
  add_output(edet);
  add_workers(edet);

  auto* density = app.add_subcommand("density", "Density verdict for an equal-order pair");
  add_pair(density);
  density->add_option("--tol-abs", cfg.tol_abs, "Absolute zero threshold for det C");
  add_output(density);

  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of E det Lambda^(k)");
  add_pair(mc);
  mc->add_option("--k", cfg.ks, "Comma-separated k values")->delimiter(',');
  mc->add_option("--samples", cfg.samples, "Monte Carlo samples (default 100000)");
  add_seed(mc);
  add_output(mc);
  add_workers(mc);

  auto* sweep = app.add_subcommand("sweep", "Covariance inequality over random pairs");
  sweep->add_option("--order", cfg.order, "Chaos order n = m")->required();
  sweep->add_option("--dim", cfg.dim, "Basis dimension (default 2)");
  sweep->add_option("--trials", cfg.trials, "Random pairs (default 1000)");
  sweep->add_option("--tol-rel", cfg.tol_rel, "Relative tolerance");
  add_seed(sweep);
  add_output(sweep);

  auto* gen = app.add_subcommand("gen", "Write a random symmetric tensor or pair");
  gen->add_option("--dim", cfg.dim, "Basis dimension (default 2)");
  gen->add_option("--order", cfg.order, "Order of f (default 2)");
  gen->add_option("--order-g", cfg.order_g, "Order of g (implies --pair)");
  gen->add_flag("--pair", cfg.make_pair, "Write a pair file");
  gen->add_option("--proportional", cfg.proportional, "Write g = C * f (implies --pair)");
  add_seed(gen);
  gen->add_option("-o", cfg.out_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (*sweep || *gen) {
    CLI::App* sub = *sweep ? sweep : gen;
    if (sub->count("--dim") == 0) cfg.dim = 2;
    if (*sweep && sweep->count("--trials") == 0) cfg.trials = 1000;
  }

  try {
    check_common(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*edet) return cmd_edet(cfg);
    if (*density) return cmd_density(cfg);
    if (*mc) return cmd_mc(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*gen) return cmd_gen(cfg);
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const chaoskit::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const chaoskit::CoefficientOverflow& e) {
    std::cerr << "coefficient cap: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
