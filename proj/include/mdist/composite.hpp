#pragma once

// The mixing rule (RepApx ML mixed with a RepApx Pruned Lottery), flattening
// rational lotteries to one uniform list, the constant-support multiset
// search, and the numeric checks of the mixing parameters.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/distortion.hpp"
#include "mdist/election.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/quasi_kernel.hpp"
#include "mdist/repapx.hpp"

namespace mdist {

// ---------------------------------------------------------------------------
// Parameters

struct MixParams {
  unsigned k = 7;
  double L = 0;  // ln(k/4)/k
  double alpha = 0;
  double beta_tilde = 0;
  double eps1 = 0;
  double eps2 = 0;
  double mu = 0;

  double theta() const { return 0.5 + beta_tilde; }
};

inline MixParams mix_params(unsigned k) {
  if (k < 7) throw std::invalid_argument("mixing parameters need k >= 7");
  MixParams p;
  p.k = k;
  const double kk = static_cast<double>(k);
  p.L = std::log(kk / 4) / kk;
  p.alpha = p.L / 24;
  p.beta_tilde = p.L / 9;
  p.eps1 = p.L * p.L * p.L / 150000;
  p.eps2 = 1 / kk;
  p.mu = 1 - p.L * p.L / 2000;
  for (double x : {p.alpha, p.beta_tilde, p.eps1, p.eps2, p.mu}) {
    if (!(x > 0 && x < 1)) throw std::logic_error("mixing parameter outside (0, 1)");
  }
  if (1 / (kk + 1) + p.eps2 > 2 / kk) throw std::logic_error("1/(k+1) + eps2 <= 2/k fails");
  return p;
}

// ---------------------------------------------------------------------------
// Flattening

struct UniformMultiset {
  Multiset roster;
  Lottery induced;
};

// Roster size = lcm of the weight denominators.
inline UniformMultiset flatten_to_uniform(const Lottery& d) {
  validate_lottery(d, d.size());
  Integer size = 1;
  for (const auto& w : d.weights) size = lcm(size, w.get_den());
  if (!size.fits_ulong_p()) throw std::overflow_error("flattened roster does not fit in 64 bits");
  UniformMultiset out;
  out.roster.counts.resize(d.size());
  for (Candidate c = 0; c < d.size(); ++c) {
    const Integer count = d.weights[c].get_num() * (size / d.weights[c].get_den());
    out.roster.counts[c] = count.get_ui();
  }
  out.induced = out.roster.uniform_lottery();
  if (out.induced.weights != d.weights) throw std::logic_error("flattened roster changes the lottery");
  return out;
}

// ---------------------------------------------------------------------------
// Mixing rule

enum class MixMode {
  practical,    // sample with the (possibly overridden) eps values
  paper_exact,  // the parameters as stated: report sample sizes, never sample
};

struct MixOptions {
  MixMode mode = MixMode::practical;
  std::optional<double> eps1;    // overrides params.eps1
  std::optional<double> eps2;    // overrides params.eps2
  std::optional<Rational> mu;    // overrides the rounded params.mu
  std::uint64_t seed = 0;
  double gamma = 1.0;
  std::uint64_t max_attempts = 1000;
  StableLotteryOptions stable;
};

inline constexpr long kMuDenominator = 1'000'000;

struct MixResult {
  MixParams params;
  MixMode mode = MixMode::practical;
  double eps1_used = 0;
  double eps2_used = 0;
  Rational mu_used;
  Rational theta_used;  // pruning threshold 1/2 + beta_tilde, rounded
  // Sample counts; (pi/8) eps1^-4 and (pi/2) k^2 eps2^-2 as reals, since the
  // paper-exact values overflow any integer type.
  double q_ml = 0;
  double q_pruned = 0;
  // Practical mode only.
  std::optional<Lottery> lottery;
  std::optional<RepApxCertificate> ml_component;
  std::optional<PrunedLotteryResult> pruned_component;
};

// With probability mu an eps1^2-RepApx Maximal Lottery, otherwise an
// (eps2, k, 1/2 + beta_tilde)-RepApx Pruned Lottery; returns the exact mixture.
inline MixResult mixing_rule(const Election& e, const MixParams& params, const MixOptions& opt = {}) {
  MixResult out;
  out.params = params;
  out.mode = opt.mode;
  out.eps1_used = opt.eps1.value_or(params.eps1);
  out.eps2_used = opt.eps2.value_or(params.eps2);
  if (!(out.eps1_used > 0 && out.eps1_used < 1)) throw std::invalid_argument("eps1 must lie in (0, 1)");
  if (!(out.eps2_used > 0 && out.eps2_used < 1)) throw std::invalid_argument("eps2 must lie in (0, 1)");
  out.mu_used = opt.mu ? *opt.mu : best_rational_approximation(params.mu, kMuDenominator);
  if (out.mu_used < 0 || out.mu_used > 1) throw std::invalid_argument("mu must lie in [0, 1]");
  out.theta_used = best_rational_approximation(params.theta(), kMuDenominator);
  const double ml_eps = out.eps1_used * out.eps1_used;
  const double kk = params.k;
  out.q_ml = std::ceil(std::numbers::pi / 8.0 / (ml_eps * ml_eps));
  out.q_pruned = std::ceil(std::numbers::pi / 2.0 * kk * kk / (out.eps2_used * out.eps2_used));
  if (opt.mode == MixMode::paper_exact) return out;

  const Lottery ml = maximal_lottery(e);
  SampleUntilOptions ml_opt;
  ml_opt.gamma = opt.gamma;
  ml_opt.seed = opt.seed;
  ml_opt.max_attempts = opt.max_attempts;
  ml_opt.q = sample_size_ml(ml_eps);
  auto ml_cert = sample_until_repapx(e, ml, 1, ml_eps, ml_opt);

  PrunedLotteryOptions pruned_opt;
  pruned_opt.stable = opt.stable;
  pruned_opt.sampling.gamma = opt.gamma;
  pruned_opt.sampling.seed = opt.seed + 1;
  pruned_opt.sampling.max_attempts = opt.max_attempts;
  auto pruned = repapx_pruned_lottery(e, out.eps2_used, params.k, out.theta_used, pruned_opt);

  Lottery mix{std::vector<Rational>(e.num_candidates())};
  for (Candidate c = 0; c < e.num_candidates(); ++c) {
    mix.weights[c] = out.mu_used * ml_cert.distribution.weights[c] + (1 - out.mu_used) * pruned.lottery.weights[c];
  }
  validate_lottery(mix, e.num_candidates());
  out.lottery = std::move(mix);
  out.ml_component = std::move(ml_cert);
  out.pruned_component = std::move(pruned);
  return out;
}

// Flattens a practical-mode mixture over its nominal denominators: the roster
// size lcm(den(mu/q_ml), den((1-mu)/q_pruned)) depends on mu and the sample
// counts only, never on the profile or on which candidates were drawn.
inline UniformMultiset flatten_mixture(const MixResult& r) {
  if (!r.lottery || !r.ml_component || !r.pruned_component) {
    throw std::invalid_argument("flatten_mixture needs a practical-mode result");
  }
  const Integer q1 = r.ml_component->q, q2 = r.pruned_component->cert.q;
  const Rational a = r.mu_used / Rational(q1), b = (1 - r.mu_used) / Rational(q2);
  const Integer size = lcm(a.get_den(), b.get_den());
  if (!size.fits_ulong_p()) throw std::overflow_error("flattened roster does not fit in 64 bits");
  const Rational per1 = a * Rational(size), per2 = b * Rational(size);  // copies per sample
  UniformMultiset out;
  const auto& d1 = r.ml_component->distribution.weights;
  const auto& d2 = r.pruned_component->lottery.weights;
  out.roster.counts.resize(d1.size());
  for (Candidate c = 0; c < d1.size(); ++c) {
    const Rational count = per1 * d1[c] * Rational(q1) + per2 * d2[c] * Rational(q2);
    if (count.get_den() != 1) throw std::logic_error("mixture component is not a q-sample");
    out.roster.counts[c] = count.get_num().get_ui();
  }
  out.induced = out.roster.uniform_lottery();
  if (out.induced.weights != r.lottery->weights) throw std::logic_error("flattened roster changes the lottery");
  return out;
}

// ---------------------------------------------------------------------------
// Multiset search

// Multisets of a fixed total size in descending lexicographic order of the
// multiplicity vector: (s,0,..,0), (s-1,1,0,..), ..., (0,..,0,s).
class MultisetEnumerator {
 public:
  MultisetEnumerator(std::size_t m, std::uint64_t size) : counts_(m, 0) {
    if (m == 0) throw std::invalid_argument("no candidates");
    counts_[0] = size;
  }

  const std::vector<std::uint64_t>& current() const { return counts_; }

  bool next() {
    const std::size_t m = counts_.size();
    // Rightmost position (excluding the last) holding mass moves one unit
    // right; everything after it collapses onto the following slot.
    for (std::size_t i = m - 1; i-- > 0;) {
      if (counts_[i] == 0) continue;
      std::uint64_t rest = 0;
      for (std::size_t j = i + 1; j < m; ++j) {
        rest += counts_[j];
        counts_[j] = 0;
      }
      counts_[i] -= 1;
      counts_[i + 1] = rest + 1;
      return true;
    }
    return false;
  }

 private:
  std::vector<std::uint64_t> counts_;
};

struct MultisetSearchResult {
  UniformMultiset roster;
  double distortion = 0;
  std::uint64_t examined = 0;  // multisets evaluated, including the hit
};

// First multiset (by size, then enumeration order) whose uniform lottery has
// float LP distortion below 3 - epsilon.
inline std::optional<MultisetSearchResult> multiset_search(const Election& e, double epsilon, std::uint64_t max_size) {
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be nonnegative");
  if (max_size == 0) throw std::invalid_argument("max_size must be positive");
  const std::size_t m = e.num_candidates();
  std::uint64_t examined = 0;
  for (std::uint64_t size = 1; size <= max_size; ++size) {
    MultisetEnumerator it(m, size);
    do {
      ++examined;
      const Multiset roster{it.current()};
      const auto report = lp_distortion(e, to_float(roster.uniform_lottery()));
      if (!report.infinite && report.value < 3 - epsilon) {
        return MultisetSearchResult{UniformMultiset{roster, roster.uniform_lottery()}, report.value, examined};
      }
    } while (it.next());
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parameter inequalities behind the mixing theorem

struct MixingCheckRow {
  unsigned k = 0;
  long double L = 0;
  long double lambda = 0;  // lambda(1/2 + beta_tilde, k, eps2)
  long double lambda_lhs = 0, lambda_rhs = 0;  // 1 + 2 lambda  vs  3 - L + L^2
  long double claim1_lhs = 0;                  // (1 + 2 lambda)(4/theta - 3)  vs  15
  long double claim2_lhs = 0, claim2_rhs = 0;  // (1 + 2 lambda)(1 + 4 alpha)  vs  3 - L/2 + L^2
  long double cond1_lhs = 0;                   // consistent case, vs 3
  long double cond2_lhs = 0;                   // inconsistent case, vs 3

  bool lambda_ok() const { return lambda_lhs <= lambda_rhs && lambda_rhs <= 3; }
  bool claim1_ok() const { return claim1_lhs <= 15; }
  bool claim2_ok() const { return claim2_lhs <= claim2_rhs; }
  bool cond1_ok() const { return cond1_lhs < 3; }
  bool cond2_ok() const { return cond2_lhs < 3; }
  bool ok() const { return lambda_ok() && claim1_ok() && claim2_ok() && cond1_ok() && cond2_ok(); }
};

struct MixingCheckReport {
  std::vector<MixingCheckRow> rows;
  bool all_ok = true;
  // Smallest slack of each inequality over the range.
  long double min_lambda_margin = 0, min_claim1_margin = 0, min_claim2_margin = 0;
  long double min_cond1_margin = 0, min_cond2_margin = 0;
};

// Evaluated in long double straight from the parameter formulas.
inline MixingCheckRow mixing_check_row(unsigned k) {
  if (k < 7) throw std::invalid_argument("mixing checks need k >= 7");
  using F = long double;
  const F kk = k;
  MixingCheckRow row;
  row.k = k;
  const F L = std::log(kk / 4) / kk;
  const F alpha = L / 24, beta = L / 9, eps1 = L * L * L / 150000, eps2 = 1 / kk, mu = 1 - L * L / 2000;
  const F theta = F(0.5) + beta;
  row.L = L;
  row.lambda = lambda_bound(theta, k, eps2);
  const F a = 1 + 2 * row.lambda;
  row.lambda_lhs = a;
  row.lambda_rhs = 3 - L + L * L;
  row.claim1_lhs = a * (4 / theta - 3);
  row.claim2_lhs = a * (1 + 4 * alpha);
  row.claim2_rhs = 3 - L / 2 + L * L;
  row.cond1_lhs = mu * (3 + 28 * eps1) + (1 - mu) * a * (1 + 4 * alpha);
  row.cond2_lhs = mu * (3 + 28 * eps1 - 2 * alpha * beta) + (1 - mu) * a * (4 / theta - 3);
  return row;
}

inline MixingCheckReport appendix_b_checks(unsigned k_min, unsigned k_max) {
  if (k_min < 7) throw std::invalid_argument("mixing checks need k >= 7");
  if (k_max < k_min) throw std::invalid_argument("empty k range");
  MixingCheckReport rep;
  for (unsigned k = k_min; k <= k_max; ++k) {
    const auto row = mixing_check_row(k);
    const long double margins[] = {std::min(row.lambda_rhs - row.lambda_lhs, 3 - row.lambda_rhs), 15 - row.claim1_lhs,
                                   row.claim2_rhs - row.claim2_lhs, 3 - row.cond1_lhs, 3 - row.cond2_lhs};
    long double* mins[] = {&rep.min_lambda_margin, &rep.min_claim1_margin, &rep.min_claim2_margin,
                           &rep.min_cond1_margin, &rep.min_cond2_margin};
    for (std::size_t i = 0; i < 5; ++i) {
      if (k == k_min || margins[i] < *mins[i]) *mins[i] = margins[i];
    }
    rep.all_ok = rep.all_ok && row.ok();
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace mdist
