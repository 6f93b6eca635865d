#pragma once

// Empirical sampling boxes and the epsilon-RepApx checks for sampled
// Maximal / Stable k-Lotteries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/election.hpp"

namespace mdist {

using Rng = std::mt19937_64;

// ceil((pi/8) eps^-2); the (1 + o(1)) factor of the existence theorem is
// dropped.
inline std::uint64_t sample_size_ml(double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return static_cast<std::uint64_t>(std::ceil(std::numbers::pi / 8.0 / (epsilon * epsilon)));
}

// ceil((pi/2) k^2 eps^-2).
inline std::uint64_t sample_size_sl(double epsilon, unsigned k) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const double kk = static_cast<double>(k);
  return static_cast<std::uint64_t>(std::ceil(std::numbers::pi / 2.0 * kk * kk / (epsilon * epsilon)));
}

// Draws candidates i.i.d. from an exact lottery. A uniform 53-bit integer is
// compared against floor(cumulative mass * 2^53), so the law depends only on
// the exact weights.
class LotterySampler {
 public:
  explicit LotterySampler(const Lottery& base) {
    const Integer scale = Integer(1) << 53;
    Rational cum = 0;
    for (Candidate c = 0; c < base.size(); ++c) {
      if (sgn(base.weights[c]) < 0) throw std::invalid_argument("negative lottery weight");
      cum += base.weights[c];
      const Integer t = floor_of(cum * scale);
      thresholds_.push_back(t.get_ui());
    }
    if (cum != 1) throw std::invalid_argument("lottery weights must sum to exactly 1");
  }

  Candidate operator()(Rng& rng) const {
    const std::uint64_t u = rng() >> 11;
    for (Candidate c = 0; c < thresholds_.size(); ++c) {
      if (u < thresholds_[c]) return c;
    }
    return thresholds_.size() - 1;  // unreachable: the last threshold is 2^53
  }

  std::size_t size() const { return thresholds_.size(); }

 private:
  std::vector<std::uint64_t> thresholds_;
};

inline Multiset empirical_sampling(const LotterySampler& sampler, std::uint64_t q, Rng& rng) {
  if (q == 0) throw std::invalid_argument("sample count q must be positive");
  Multiset out{std::vector<std::uint64_t>(sampler.size(), 0)};
  for (std::uint64_t i = 0; i < q; ++i) out.counts[sampler(rng)] += 1;
  return out;
}

// q i.i.d. draws from base, deterministic given the seed.
inline Multiset empirical_sampling(const Election& e, const Lottery& base, std::uint64_t q, std::uint64_t seed) {
  validate_lottery(base, e.num_candidates());
  Rng rng(seed);
  return empirical_sampling(LotterySampler(base), q, rng);
}

// Float bases are sampled through the exact value of their serialized doubles.
inline Multiset empirical_sampling(const Election& e, const LotteryF& base, std::uint64_t q, std::uint64_t seed) {
  return empirical_sampling(e, to_exact(base), q, seed);
}

struct RepApxCertificate {
  Lottery distribution;
  Lottery base;
  double epsilon = 0;
  unsigned k = 1;
  double achieved = 0;        // max_a Pr[a >_v distribution^k]
  Rational achieved_exact = 0;
  Candidate worst_candidate = 0;
  bool support_ok = false;
  bool valid = false;
  std::uint64_t attempts = 0;
  std::uint64_t q = 0;  // samples per attempt (0 when not sampled)
};

// Support containment plus max_a Pr[a >_v D^k] <= 1/(k+1) + eps, exactly.
// At k = 1 the value is s_{a>D}.
inline RepApxCertificate check_repapx(const Election& e, const Lottery& d, const Lottery& base, unsigned k,
                                      double epsilon) {
  const std::size_t m = e.num_candidates();
  validate_lottery(d, m);
  validate_lottery(base, m);
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be nonnegative");
  RepApxCertificate cert;
  cert.distribution = d;
  cert.base = base;
  cert.epsilon = epsilon;
  cert.k = k;
  cert.support_ok = true;
  for (Candidate c = 0; c < m; ++c) {
    if (d.in_support(c) && !base.in_support(c)) cert.support_ok = false;
  }
  for (Candidate a = 0; a < m; ++a) {
    Rational v = candidate_beats_power(e, a, d, k);
    if (a == 0 || v > cert.achieved_exact) {
      cert.achieved_exact = std::move(v);
      cert.worst_candidate = a;
    }
  }
  cert.achieved = cert.achieved_exact.get_d();
  const Rational bound = make_rational(1, static_cast<long>(k) + 1) + exact_from_double(epsilon);
  cert.valid = cert.support_ok && cert.achieved_exact <= bound;
  return cert;
}

class RepApxExhausted : public std::runtime_error {
 public:
  RepApxExhausted(const std::string& what, RepApxCertificate best)
      : std::runtime_error(what), best_attempt(std::move(best)) {}
  RepApxCertificate best_attempt;
};

struct SampleUntilOptions {
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t max_attempts = 1000;
  std::optional<std::uint64_t> q;  // defaults to sample_size_sl(eps, k)
};

// Repeats q-empirical sampling until the uniform lottery over the sample is a
// (1+gamma)eps-RepApx lottery for `base`. All attempts share one RNG stream.
inline RepApxCertificate sample_until_repapx(const Election& e, const Lottery& base, unsigned k, double epsilon,
                                             const SampleUntilOptions& opt = {}) {
  if (!(opt.gamma > 0)) throw std::invalid_argument("gamma must be positive");
  if (opt.max_attempts == 0) throw std::invalid_argument("max_attempts must be positive");
  validate_lottery(base, e.num_candidates());
  const std::uint64_t q = opt.q ? *opt.q : sample_size_sl(epsilon, k);
  if (q == 0) throw std::invalid_argument("sample count q must be positive");
  const double tolerance = (1.0 + opt.gamma) * epsilon;
  const LotterySampler sampler(base);
  Rng rng(opt.seed);
  std::optional<RepApxCertificate> best;
  for (std::uint64_t attempt = 1; attempt <= opt.max_attempts; ++attempt) {
    const Multiset sample = empirical_sampling(sampler, q, rng);
    auto cert = check_repapx(e, sample.uniform_lottery(), base, k, tolerance);
    cert.attempts = attempt;
    cert.q = q;
    if (cert.valid) return cert;
    if (!best || cert.achieved_exact < best->achieved_exact) best = std::move(cert);
  }
  throw RepApxExhausted("no RepApx sample within max_attempts", *best);
}

}  // namespace mdist
