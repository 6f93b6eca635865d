// mdist: command-line front end. Every subcommand prints JSON (or writes it
// with --output). Exit codes: 0 ok, 1 usage or input error, 2 a checked
// property failed.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mdist/composite.hpp"
#include "mdist/distortion.hpp"
#include "mdist/generators.hpp"
#include "mdist/io.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/quasi_kernel.hpp"
#include "mdist/repapx.hpp"
#include "mdist/sweep.hpp"

using namespace mdist;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct Output {
  std::string path;

  void emit(const Json& j) const {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
      std::cout << text;
    } else {
      write_text_file(path, text);
    }
  }
};

int solve_ml(const std::string& election_path, const Output& out) {
  const auto e = read_election(election_path);
  const auto d = maximal_lottery(e);
  const auto s = margin_matrix(e);
  Rational worst = 1;
  for (Candidate a = 0; a < e.num_candidates(); ++a) worst = std::min(worst, margin_lottery_vs_lottery(s, d, point_mass(e.num_candidates(), a)));
  out.emit(Json{{"lottery", to_json(e, d)}, {"min_margin_vs_candidates", to_json(worst)}, {"equilibrium_ok", worst >= make_rational(1, 2)}});
  return worst >= make_rational(1, 2) ? kExitOk : kExitViolation;
}

int solve_sl(const std::string& election_path, unsigned k, const StableLotteryOptions& opt, const Output& out) {
  const auto e = read_election(election_path);
  try {
    const auto pair = stable_k_lottery(e, k, opt);
    out.emit(to_json(e, pair));
    return kExitOk;
  } catch (const NonConvergence& ex) {
    out.emit(Json{{"error", ex.what()}, {"best_iterate", to_json(e, ex.best_iterate)}, {"best_value", ex.best_value}});
    return kExitViolation;
  }
}

Lottery base_lottery(const Election& e, const std::string& base, unsigned k, const std::string& lottery_path,
                     std::uint64_t seed) {
  if (!lottery_path.empty()) return lottery_from_json(e, read_json_file(lottery_path));
  if (base == "ml") return maximal_lottery(e);
  StableLotteryOptions opt;
  opt.seed = seed;
  return stable_k_lottery(e, k, opt).attacker;
}

int sample(const std::string& election_path, const std::string& base, const std::string& lottery_path, unsigned k,
           double epsilon, const SampleUntilOptions& opt, const Output& out) {
  const auto e = read_election(election_path);
  const auto d = base_lottery(e, base, k, lottery_path, opt.seed);
  try {
    out.emit(to_json(e, sample_until_repapx(e, d, k, epsilon, opt)));
    return kExitOk;
  } catch (const RepApxExhausted& ex) {
    out.emit(Json{{"error", ex.what()}, {"best_attempt", to_json(e, ex.best_attempt)}});
    return kExitViolation;
  }
}

int prune(const std::string& election_path, const std::string& theta, double epsilon, unsigned k,
          const PrunedLotteryOptions& opt, bool graph_only, const Output& out) {
  const auto e = read_election(election_path);
  const Rational th = parse_rational(theta);
  if (graph_only) {
    const auto g = build_threshold_digraph(e, th);
    const auto kernel = quasi_kernel(g);
    Json names = Json::array();
    for (Candidate c : kernel) names.push_back(e.name(c));
    out.emit(Json{{"graph", to_json(g)}, {"edge_list", g.edge_list()}, {"quasi_kernel", names},
                  {"theta_regular", is_theta_regular(e.restricted_to(kernel), th)}});
    return kExitOk;
  }
  try {
    out.emit(to_json(e, repapx_pruned_lottery(e, epsilon, k, th, opt)));
    return kExitOk;
  } catch (const RepApxExhausted& ex) {
    out.emit(Json{{"error", ex.what()}});
    return kExitViolation;
  }
}

int distortion(const std::string& election_path, const std::string& lottery_path, const std::string& mode,
               const std::string& method, const std::string& spec_path, const std::string& reference,
               const std::string& formulation, const Output& out) {
  const auto e = read_election(election_path);
  const Json lot = read_json_file(lottery_path);
  if (method == "biased") {
    if (spec_path.empty()) throw CLI::ValidationError("--spec", "the biased method needs --spec");
    const auto spec = biased_spec_from_json(e, read_json_file(spec_path));
    const auto d = lottery_from_json(e, lot);
    const auto r = biased_distortion(e, spec, d);
    const auto table = biased_metric_distances(e, spec);
    DistortionReport<Rational> report;
    report.method = "biased";
    report.reference_candidate = spec.i_star;
    report.witness_metric = table;
    report.per_reference.assign(e.num_candidates(), std::nullopt);
    report.infinite = r.degenerate;
    if (r.ratio) report.value = *r.ratio;
    Json j = to_json(e, report);
    j["degenerate"] = r.degenerate;
    j["L"] = to_json(r.L);
    j["R"] = to_json(r.R);
    j["spec"] = to_json(e, spec);
    j.erase("per_reference");
    j["infinite"] = false;
    out.emit(j);
    return kExitOk;
  }
  LpDistortionOptions opt;
  if (formulation == "lifted") opt.formulation = LpFormulation::lifted;
  if (formulation == "four-point") opt.formulation = LpFormulation::four_point;
  if (!reference.empty()) opt.only_reference = e.index_of(reference);
  if (mode == "exact") {
    out.emit(to_json(e, lp_distortion(e, lottery_from_json(e, lot), opt)));
  } else {
    out.emit(to_json(e, lp_distortion(e, lottery_f_from_json(e, lot), opt)));
  }
  return kExitOk;
}

int mix(const std::string& election_path, unsigned k, const MixOptions& opt, const Output& out) {
  const auto e = read_election(election_path);
  const auto r = mixing_rule(e, mix_params(k), opt);
  Json j = to_json(e, r);
  if (r.lottery) {
    const auto report = lp_distortion(e, to_float(*r.lottery));
    j["distortion"] = report.infinite ? Json(nullptr) : Json(report.value);
  }
  out.emit(j);
  return kExitOk;
}

int search(const std::string& election_path, double epsilon, std::uint64_t max_size, const Output& out) {
  const auto e = read_election(election_path);
  const auto r = multiset_search(e, epsilon, max_size);
  if (!r) {
    out.emit(Json{{"found", false}, {"epsilon", epsilon}, {"max_size", max_size}});
    return kExitOk;
  }
  Json roster = Json::array();
  for (Candidate c = 0; c < e.num_candidates(); ++c) {
    for (std::uint64_t i = 0; i < r->roster.roster.counts[c]; ++i) roster.push_back(e.name(c));
  }
  out.emit(Json{{"found", true},
                {"epsilon", epsilon},
                {"roster", roster},
                {"size", r->roster.roster.total()},
                {"lottery", to_json(e, r->roster.induced)},
                {"distortion", r->distortion},
                {"examined", r->examined}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximal / stable lotteries, RepApx sampling, pruning, mixing and metric distortion."};
  app.require_subcommand(1);
  app.fallthrough();
  Output out;
  app.add_option("-o,--output", out.path, "Write the JSON here instead of stdout");

  std::string election_path;
  auto add_election = [&](CLI::App* sub) {
    sub->add_option("-e,--election", election_path, "Election JSON file")->required()->check(CLI::ExistingFile);
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate an election");
  std::string family = "uniform-random";
  std::size_t gen_n = 5, gen_m = 4;
  std::uint64_t seed = 0;
  gen->add_option("--family", family)->check(CLI::IsMember(generator_families()));
  gen->add_option("-n,--voters", gen_n)->check(CLI::PositiveNumber);
  gen->add_option("-m,--candidates", gen_m)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);

  auto* ml = app.add_subcommand("solve-ml", "Maximal lottery (exact)");
  add_election(ml);

  auto* sl = app.add_subcommand("solve-sl", "Stable k-lottery");
  add_election(sl);
  unsigned k = 1;
  StableLotteryOptions sl_opt;
  sl->add_option("-k", k)->check(CLI::PositiveNumber);
  sl->add_option("--tol-eq", sl_opt.tol_eq);
  sl->add_option("--max-iterations", sl_opt.max_iterations);
  sl->add_option("--seed", sl_opt.seed);

  auto* smp = app.add_subcommand("sample", "Sample until the uniform sample is a RepApx lottery");
  add_election(smp);
  std::string base = "sl", lottery_path;
  double epsilon = 0.3;
  SampleUntilOptions sample_opt;
  std::optional<std::uint64_t> q;
  smp->add_option("--base", base, "Base lottery when --lottery is absent")->check(CLI::IsMember({"ml", "sl"}));
  smp->add_option("--lottery", lottery_path)->check(CLI::ExistingFile);
  smp->add_option("-k", k)->check(CLI::PositiveNumber);
  smp->add_option("--epsilon", epsilon);
  smp->add_option("--gamma", sample_opt.gamma);
  smp->add_option("--seed", sample_opt.seed);
  smp->add_option("--max-attempts", sample_opt.max_attempts);
  smp->add_option("-q,--samples", q, "Samples per attempt (default: ceil(pi/2 k^2 eps^-2))");

  auto* prn = app.add_subcommand("prune", "Threshold pruning and the RepApx pruned lottery");
  add_election(prn);
  std::string theta = "3/5";
  bool graph_only = false;
  PrunedLotteryOptions prune_opt;
  prn->add_option("--theta", theta, "Threshold in (1/2, 1], e.g. 3/5 or 0.6");
  prn->add_option("--epsilon", epsilon);
  prn->add_option("-k", k)->check(CLI::PositiveNumber);
  prn->add_option("--seed", seed);
  prn->add_option("--gamma", prune_opt.sampling.gamma);
  prn->add_option("--max-attempts", prune_opt.sampling.max_attempts);
  prn->add_flag("--graph-only", graph_only, "Only the digraph and its quasi-kernel");

  auto* mx = app.add_subcommand("mix", "Mixing rule");
  add_election(mx);
  unsigned mix_k = 7;
  MixOptions mix_opt;
  std::optional<double> eps1, eps2;
  bool paper_exact = false;
  mx->add_option("-k,--k", mix_k)->check(CLI::Range(7u, 1000000u));
  mx->add_option("--practical-eps1", eps1);
  mx->add_option("--practical-eps2", eps2);
  mx->add_option("--seed", seed);
  mx->add_option("--gamma", mix_opt.gamma);
  mx->add_flag("--paper-exact", paper_exact, "Report the closed-form parameters and required sample sizes; never sample");

  auto* dst = app.add_subcommand("distortion", "Worst-case metric distortion of a lottery");
  add_election(dst);
  std::string mode = "float", method = "lp", spec_path, reference, formulation = "auto";
  dst->add_option("--lottery", lottery_path)->required()->check(CLI::ExistingFile);
  dst->add_option("--mode", mode)->check(CLI::IsMember({"exact", "float"}));
  dst->add_option("--method", method)->check(CLI::IsMember({"lp", "biased"}));
  dst->add_option("--spec", spec_path, "Biased metric spec JSON (method biased)")->check(CLI::ExistingFile);
  dst->add_option("--reference", reference, "Only this reference candidate");
  dst->add_option("--formulation", formulation)->check(CLI::IsMember({"auto", "four-point", "lifted"}));

  auto* srch = app.add_subcommand("search-multiset", "Smallest uniform multiset with distortion < 3 - eps");
  add_election(srch);
  double search_eps = 0.05;
  std::uint64_t max_size = 8;
  srch->add_option("--epsilon", search_eps);
  srch->add_option("--max-size", max_size)->check(CLI::PositiveNumber);

  auto* apx = app.add_subcommand("appendix-check", "Mixing-parameter inequalities over a range of k");
  unsigned k_min = 7, k_max = 200;
  apx->add_option("--k-min", k_min)->check(CLI::Range(7u, 100000000u));
  apx->add_option("--k-max", k_max);

  auto* swp = app.add_subcommand("sweep", "Batch distortion experiments");
  SweepConfig cfg;
  std::string csv_path;
  swp->add_option("--generator", cfg.generator);
  swp->add_option("--corpus", cfg.corpus, "Election files (generator file-corpus)");
  swp->add_option("--n-min", cfg.n_min);
  swp->add_option("--n-max", cfg.n_max);
  swp->add_option("--m-min", cfg.m_min);
  swp->add_option("--m-max", cfg.m_max);
  swp->add_option("--trials", cfg.trials);
  swp->add_option("--seed", cfg.seed);
  swp->add_option("--rule", cfg.rule)->check(CLI::IsMember(sweep_rules()));
  swp->add_option("--method", cfg.method)->check(CLI::IsMember({"lp-float", "lp-exact"}));
  swp->add_option("-k", cfg.k);
  swp->add_option("--epsilon", cfg.epsilon);
  swp->add_option("--theta", cfg.theta);
  swp->add_option("--jobs", cfg.jobs);
  swp->add_option("--csv", csv_path, "Also write the per-trial CSV here");
  swp->add_flag("--record-timings", cfg.record_timings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      out.emit(to_json(generate_election(family, gen_n, gen_m, seed)));
      return kExitOk;
    }
    if (*ml) return solve_ml(election_path, out);
    if (*sl) return solve_sl(election_path, k, sl_opt, out);
    if (*smp) {
      sample_opt.q = q;
      return sample(election_path, base, lottery_path, k, epsilon, sample_opt, out);
    }
    if (*prn) {
      prune_opt.sampling.seed = seed;
      prune_opt.stable.seed = seed;
      return prune(election_path, theta, epsilon, k, prune_opt, graph_only, out);
    }
    if (*mx) {
      mix_opt.eps1 = eps1;
      mix_opt.eps2 = eps2;
      mix_opt.seed = seed;
      mix_opt.mode = paper_exact ? MixMode::paper_exact : MixMode::practical;
      return mix(election_path, mix_k, mix_opt, out);
    }
    if (*dst) return distortion(election_path, lottery_path, mode, method, spec_path, reference, formulation, out);
    if (*srch) return search(election_path, search_eps, max_size, out);
    if (*apx) {
      const auto rep = appendix_b_checks(k_min, k_max);
      out.emit(to_json(rep));
      return rep.all_ok ? kExitOk : kExitViolation;
    }
    if (*swp) {
      const auto result = run_sweep(cfg);
      if (!csv_path.empty()) write_text_file(csv_path, sweep_csv(result));
      out.emit(sweep_json(result));
      return result.violations == 0 ? kExitOk : kExitViolation;
    }
  } catch (const CLI::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "failure: " << ex.what() << "\n";
    return kExitViolation;
  }
  return kExitUsage;
}
