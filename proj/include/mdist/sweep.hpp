#pragma once

// Batch experiments: generate (or load) elections, run a rule, measure LP
// distortion, and aggregate per (n, m).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mdist/composite.hpp"
#include "mdist/distortion.hpp"
#include "mdist/generators.hpp"
#include "mdist/io.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/quasi_kernel.hpp"

namespace mdist {

inline const std::vector<std::string>& sweep_rules() {
  static const std::vector<std::string> names{"maximal-lottery", "ml-support-point-mass", "stable-lottery",
                                              "pruned-lottery",  "mixing",                "uniform"};
  return names;
}

struct SweepConfig {
  std::string generator = "uniform-random";  // or "file-corpus"
  std::vector<std::string> corpus;           // election files for file-corpus
  std::size_t n_min = 3, n_max = 7;
  std::size_t m_min = 3, m_max = 6;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string rule = "maximal-lottery";
  std::string method = "lp-float";  // or lp-exact
  unsigned k = 7;                   // stable / pruned / mixing rules
  double epsilon = 0.1;             // pruned: eps; mixing: eps1 and eps2
  std::string theta = "3/5";        // pruned-lottery threshold
  unsigned jobs = 1;
  bool record_timings = false;  // runtime_ms in the JSON (breaks byte-identical reruns)

  void validate() const {
    if (generator == "file-corpus") {
      if (corpus.empty()) throw std::invalid_argument("file-corpus needs at least one election file");
    } else {
      (void)generate_election(generator, 1, 1, 0);
    }
    if (trials == 0) throw std::invalid_argument("trials must be at least 1");
    if (n_min == 0 || m_min == 0 || n_min > n_max || m_min > m_max) throw std::invalid_argument("empty n or m range");
    if (std::find(sweep_rules().begin(), sweep_rules().end(), rule) == sweep_rules().end()) {
      throw std::invalid_argument("unknown rule: " + rule);
    }
    if (method != "lp-float" && method != "lp-exact") throw std::invalid_argument("unknown method: " + method);
    if (jobs == 0) throw std::invalid_argument("jobs must be at least 1");
  }
};

struct SweepRow {
  std::size_t trial = 0;
  std::size_t n = 0, m = 0;
  std::uint64_t seed = 0;
  std::optional<double> distortion;  // nullopt with infinite or failed
  bool infinite = false;
  std::string status = "ok";
  double runtime_ms = 0;
  std::size_t support_size = 0;
  bool violation = false;  // above the rule's proven bound
  Json detail;             // rule output and certificates
};

struct SweepAggregate {
  std::size_t n = 0, m = 0, trials = 0, failures = 0, infinite = 0;
  double max_distortion = 0, mean_distortion = 0;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
  std::size_t violations = 0;
};

// Proven distortion bound for a rule, if any.
inline std::optional<double> rule_bound(const std::string& rule) {
  if (rule == "maximal-lottery" || rule == "mixing") return 3.0;
  if (rule == "ml-support-point-mass") return supp_ml_bound();
  return std::nullopt;
}

namespace detail {

inline Json candidate_names(const Election& e, const std::vector<Candidate>& set) {
  Json out = Json::array();
  for (Candidate c : set) out.push_back(e.name(c));
  return out;
}

inline double lottery_distortion(const Election& e, const Lottery& d, const std::string& method, bool& infinite) {
  if (method == "lp-exact") {
    const auto r = lp_distortion(e, d);
    infinite = r.infinite;
    return r.infinite ? 0 : r.value.get_d();
  }
  const auto r = lp_distortion(e, to_float(d));
  infinite = r.infinite;
  return r.infinite ? 0 : r.value;
}

inline void run_trial(const SweepConfig& cfg, const Election& e, SweepRow& row) {
  const auto start = std::chrono::steady_clock::now();
  try {
    Lottery d;
    Json detail = Json::object();
    if (cfg.rule == "maximal-lottery" || cfg.rule == "ml-support-point-mass") {
      d = maximal_lottery(e);
    } else if (cfg.rule == "stable-lottery") {
      StableLotteryOptions opt;
      opt.seed = row.seed;
      d = stable_k_lottery(e, cfg.k, opt).attacker;
    } else if (cfg.rule == "pruned-lottery") {
      PrunedLotteryOptions opt;
      opt.stable.seed = row.seed;
      opt.sampling.seed = row.seed;
      auto r = repapx_pruned_lottery(e, cfg.epsilon, cfg.k, parse_rational(cfg.theta), opt);
      detail["certificate"] = to_json(r.restricted, r.cert);
      detail["quasi_kernel"] = detail::candidate_names(e, r.pruned);
      d = std::move(r.lottery);
    } else if (cfg.rule == "mixing") {
      MixOptions opt;
      opt.eps1 = cfg.epsilon;
      opt.eps2 = cfg.epsilon;
      opt.seed = row.seed;
      opt.stable.seed = row.seed;
      auto r = mixing_rule(e, mix_params(cfg.k), opt);
      detail["ml_certificate"] = to_json(e, *r.ml_component);
      detail["pruned_certificate"] = to_json(r.pruned_component->restricted, r.pruned_component->cert);
      detail["quasi_kernel"] = detail::candidate_names(e, r.pruned_component->pruned);
      detail["roster_size"] = flatten_mixture(r).roster.total();
      d = std::move(*r.lottery);
    } else {
      d = uniform_lottery(e.num_candidates());
    }
    detail["lottery"] = to_json(e, d);
    row.support_size = d.support().size();

    if (cfg.rule == "ml-support-point-mass") {
      // Worst point mass over the support.
      double worst = 0;
      for (Candidate j : d.support()) {
        bool inf = false;
        const double v = lottery_distortion(e, point_mass(e.num_candidates(), j), cfg.method, inf);
        if (inf) row.infinite = true;
        worst = std::max(worst, v);
      }
      if (!row.infinite) row.distortion = worst;
    } else {
      bool inf = false;
      const double v = lottery_distortion(e, d, cfg.method, inf);
      row.infinite = inf;
      if (!inf) row.distortion = v;
    }
    if (const auto bound = rule_bound(cfg.rule)) {
      row.violation = row.infinite || (row.distortion && *row.distortion > *bound + 1e-9);
    }
    row.detail = std::move(detail);
  } catch (const std::exception& ex) {
    row.status = std::string("error: ") + ex.what();
  }
  row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// Trials may run on several threads; rows stay in trial order and every trial
// depends only on its own seed.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult out;
  out.config = cfg;
  const std::size_t trials = cfg.generator == "file-corpus" ? cfg.corpus.size() : cfg.trials;
  out.rows.resize(trials);
  std::vector<std::optional<Election>> elections(trials);
  std::mt19937_64 master(cfg.seed);
  for (std::size_t t = 0; t < trials; ++t) {
    SweepRow& row = out.rows[t];
    row.trial = t;
    row.seed = master();
    try {
      if (cfg.generator == "file-corpus") {
        elections[t] = read_election(cfg.corpus[t]);
      } else {
        std::mt19937_64 sizes(row.seed);
        const std::size_t n = cfg.n_min + sizes() % (cfg.n_max - cfg.n_min + 1);
        const std::size_t m = cfg.m_min + sizes() % (cfg.m_max - cfg.m_min + 1);
        elections[t] = generate_election(cfg.generator, n, m, row.seed);
      }
      row.n = elections[t]->total_weight();
      row.m = elections[t]->num_candidates();
    } catch (const std::exception& ex) {
      row.status = std::string("error: ") + ex.what();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      if (elections[t]) detail::run_trial(cfg, *elections[t], out.rows[t]);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < std::min<std::size_t>(cfg.jobs, trials); ++j) pool.emplace_back(worker);
    worker();
  }

  std::map<std::pair<std::size_t, std::size_t>, SweepAggregate> agg;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> finite;
  for (const auto& row : out.rows) {
    auto& a = agg[{row.n, row.m}];
    a.n = row.n;
    a.m = row.m;
    ++a.trials;
    out.violations += row.violation;
    if (row.status != "ok") {
      ++a.failures;
    } else if (row.infinite) {
      ++a.infinite;
    } else {
      a.max_distortion = std::max(a.max_distortion, *row.distortion);
      a.mean_distortion += *row.distortion;
      ++finite[{row.n, row.m}];
    }
  }
  for (auto& [key, a] : agg) {
    if (finite[key] > 0) a.mean_distortion /= static_cast<double>(finite[key]);
    out.aggregates.push_back(a);
  }
  return out;
}

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline std::string sweep_csv(const SweepResult& r) {
  std::ostringstream out;
  out << "trial,n,m,seed,rule,distortion,method,runtime_ms,status,support_size,violation\n";
  for (const auto& row : r.rows) {
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << row.trial << ',' << row.n << ',' << row.m << ',' << row.seed << ',' << r.config.rule << ','
        << (row.infinite ? "inf" : row.distortion ? detail::format_double(*row.distortion) : "") << ','
        << r.config.method << ',' << detail::format_double(row.runtime_ms) << ',' << status << ','
        << row.support_size << ',' << (row.violation ? 1 : 0) << '\n';
  }
  return out.str();
}

// Byte-identical across reruns except for "timestamp" (and runtime_ms when
// record_timings is set).
inline Json sweep_json(const SweepResult& r) {
  const auto& c = r.config;
  Json config{{"generator", c.generator}, {"n_min", c.n_min}, {"n_max", c.n_max}, {"m_min", c.m_min},
              {"m_max", c.m_max},         {"trials", c.trials}, {"seed", c.seed}, {"rule", c.rule},
              {"method", c.method},       {"k", c.k},           {"epsilon", c.epsilon}, {"theta", c.theta}};
  if (c.generator == "file-corpus") config["corpus"] = c.corpus;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"trial", row.trial}, {"n", row.n},           {"m", row.m},
           {"seed", row.seed},   {"status", row.status}, {"infinite", row.infinite}};
    j["distortion"] = row.distortion ? Json(*row.distortion) : Json(nullptr);
    j["support_size"] = row.support_size;
    j["violation"] = row.violation;
    if (c.record_timings) j["runtime_ms"] = row.runtime_ms;
    j["detail"] = row.detail;
    rows.push_back(std::move(j));
  }
  Json aggs = Json::array();
  for (const auto& a : r.aggregates) {
    aggs.push_back(Json{{"n", a.n},
                        {"m", a.m},
                        {"trials", a.trials},
                        {"failures", a.failures},
                        {"infinite", a.infinite},
                        {"max_distortion", a.max_distortion},
                        {"mean_distortion", a.mean_distortion}});
  }
  const auto bound = rule_bound(c.rule);
  return Json{{"timestamp", detail::utc_timestamp()},
              {"config", config},
              {"bound", bound ? Json(*bound) : Json(nullptr)},
              {"violations", r.violations},
              {"aggregates", aggs},
              {"rows", rows}};
}

}  // namespace mdist
