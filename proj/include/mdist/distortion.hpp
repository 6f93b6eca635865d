#pragma once

// Metric distortion: the exact LP over candidate-voter pseudometrics, the
// biased-metric calculus (l, r, L, R), the subset sufficient condition,
// strong consistency, and the tournament-ratio certificates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/election.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/simplex.hpp"

namespace mdist {

// distances[c][v]: candidate c to ballot v.
template <Scalar T>
using DistanceTable = std::vector<std::vector<T>>;

// SC(c) = (1/n) sum_v w_v d(c, v).
template <Scalar T>
T social_cost(const Election& e, const DistanceTable<T>& d, Candidate c) {
  T sum = 0;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) sum += scalar_from_int<T>(static_cast<std::int64_t>(e.ballot(v).weight)) * d[c][v];
  return sum / scalar_from_int<T>(static_cast<std::int64_t>(e.total_weight()));
}

template <Scalar T>
T expected_social_cost(const Election& e, const DistanceTable<T>& d, const BasicLottery<T>& lottery) {
  T sum = 0;
  for (Candidate c = 0; c < e.num_candidates(); ++c) {
    if (lottery.weights[c] != 0) sum += lottery.weights[c] * social_cost(e, d, c);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Biased metrics

template <Scalar T>
struct BiasedMetricSpec {
  std::vector<T> x;
  Candidate i_star = 0;

  void validate(std::size_t m) const {
    if (x.size() != m) throw std::invalid_argument("biased metric vector has wrong length");
    if (i_star >= m) throw std::invalid_argument("biased metric reference outside candidate range");
    for (const T& xi : x) {
      if (xi < 0) throw std::invalid_argument("biased metric vector must be nonnegative");
    }
    if (x[i_star] != 0) throw std::invalid_argument("biased metric needs x[i*] = 0");
  }
};

namespace detail {

// 2 d(i*, v) = max over i ranked at or above j of x_i - x_j.
template <Scalar T>
T twice_reference_distance(const Ballot& b, const std::vector<T>& x) {
  T best = 0, top = x[b.ranking[0]];
  for (Candidate c : b.ranking) {
    if (x[c] > top) top = x[c];
    if (top - x[c] > best) best = top - x[c];
  }
  return best;
}

}  // namespace detail

template <Scalar T>
DistanceTable<T> biased_metric_distances(const Election& e, const BiasedMetricSpec<T>& spec) {
  const std::size_t m = e.num_candidates();
  spec.validate(m);
  DistanceTable<T> d(m, std::vector<T>(e.num_ballots()));
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    const Ballot& b = e.ballot(v);
    const T base = detail::twice_reference_distance(b, spec.x) / 2;
    // Walk upwards so `low` is the minimum x over j and everything below it.
    T low = 0;
    for (std::size_t p = m; p-- > 0;) {
      const Candidate c = b.ranking[p];
      if (p == m - 1 || spec.x[c] < low) low = spec.x[c];
      d[c][v] = base + low;
    }
  }
  return d;
}

// Nonincreasing right-continuous step function on [0, inf): value values[i]
// on [breakpoints[i], breakpoints[i+1]) and 0 from breakpoints.back() on.
template <Scalar T>
struct StepFunction {
  std::vector<T> breakpoints{T(0)};
  std::vector<T> values;

  T operator()(const T& t) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (t < breakpoints[i + 1]) return t >= breakpoints[i] ? values[i] : T(0);
    }
    return 0;
  }

  T integral() const {
    T sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * (breakpoints[i + 1] - breakpoints[i]);
    return sum;
  }
};

// l(D, t) = sum_{j not in I_t} s_{I_t > j} p_j with I_t = {k : x_k <= t}.
template <Scalar T>
StepFunction<T> ell_function(const Election& e, const BiasedMetricSpec<T>& spec, const BasicLottery<T>& d) {
  const std::size_t m = e.num_candidates();
  spec.validate(m);
  validate_lottery(d, m);
  std::vector<T> levels(spec.x);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  StepFunction<T> f;
  f.breakpoints = levels;
  for (std::size_t r = 0; r + 1 < levels.size(); ++r) {
    std::vector<Candidate> in;
    for (Candidate c = 0; c < m; ++c) {
      if (spec.x[c] <= levels[r]) in.push_back(c);
    }
    T value = 0;
    for (Candidate j = 0; j < m; ++j) {
      if (spec.x[j] <= levels[r] || d.weights[j] == 0) continue;
      value += scalar_cast<T>(margin_set_vs_candidate(e, in, j)) * d.weights[j];
    }
    f.values.push_back(value);
  }
  return f;
}

// r(t) = 1 - s_{for all i >_v j: x_i - x_j <= t} = Pr_v[2 d(i*, v) > t].
template <Scalar T>
StepFunction<T> r_function(const Election& e, const BiasedMetricSpec<T>& spec) {
  const std::size_t m = e.num_candidates();
  spec.validate(m);
  std::vector<T> diffs{T(0)};
  for (Candidate i = 0; i < m; ++i) {
    for (Candidate j = 0; j < m; ++j) {
      if (spec.x[i] > spec.x[j]) diffs.push_back(spec.x[i] - spec.x[j]);
    }
  }
  std::sort(diffs.begin(), diffs.end());
  diffs.erase(std::unique(diffs.begin(), diffs.end()), diffs.end());
  std::vector<T> twice(e.num_ballots());
  for (std::size_t v = 0; v < e.num_ballots(); ++v) twice[v] = detail::twice_reference_distance(e.ballot(v), spec.x);
  const T n = scalar_from_int<T>(static_cast<std::int64_t>(e.total_weight()));
  StepFunction<T> f;
  f.breakpoints = diffs;
  for (std::size_t r = 0; r + 1 < diffs.size(); ++r) {
    T mass = 0;
    for (std::size_t v = 0; v < e.num_ballots(); ++v) {
      if (twice[v] > diffs[r]) mass += scalar_from_int<T>(static_cast<std::int64_t>(e.ballot(v).weight));
    }
    f.values.push_back(mass / n);
  }
  return f;
}

template <Scalar T>
struct BiasedDistortion {
  T L = 0;  // sum_j p_j (SC(j) - SC(i*))
  T R = 0;  // 2 SC(i*)
  std::optional<T> ratio;  // 1 + 2L/R; empty when R = 0
  bool degenerate = false;
};

template <Scalar T>
BiasedDistortion<T> biased_distortion(const Election& e, const BiasedMetricSpec<T>& spec, const BasicLottery<T>& d) {
  BiasedDistortion<T> out;
  out.L = ell_function(e, spec, d).integral();
  out.R = r_function(e, spec).integral();
  if (out.R == 0) {
    out.degenerate = true;
  } else {
    out.ratio = T(1) + T(2) * out.L / out.R;
  }
  return out;
}

// sum_j p_j SC(j) / SC(i*) straight from the distance table.
template <Scalar T>
std::optional<T> direct_cost_ratio(const Election& e, const DistanceTable<T>& table, const BasicLottery<T>& d,
                                   Candidate ref) {
  const T denom = social_cost(e, table, ref);
  if (denom == 0) return std::nullopt;
  return expected_social_cost(e, table, d) / denom;
}

// ---------------------------------------------------------------------------
// Pseudometric validity

namespace detail {

template <Scalar T>
bool leq_tol(const T& a, const T& b, double tol) {
  if constexpr (ScalarTraits<T>::exact) {
    (void)tol;
    return a <= b;
  } else {
    return a <= b + tol;
  }
}

}  // namespace detail

// Nonnegativity, consistency with every ballot, and the four-point cycle
// inequalities d(i,v) <= d(i,v') + d(j,v') + d(j,v). The tolerance only
// applies to floating tables.
template <Scalar T>
bool is_consistent_pseudometric(const Election& e, const DistanceTable<T>& d, double tol = 1e-7) {
  const std::size_t m = e.num_candidates(), nb = e.num_ballots();
  if (d.size() != m) return false;
  for (const auto& row : d) {
    if (row.size() != nb) return false;
    for (const T& x : row) {
      if (!detail::leq_tol(T(0), x, tol)) return false;
    }
  }
  for (std::size_t v = 0; v < nb; ++v) {
    const auto& r = e.ballot(v).ranking;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      if (!detail::leq_tol(d[r[p]][v], d[r[p + 1]][v], tol)) return false;
    }
  }
  for (Candidate i = 0; i < m; ++i) {
    for (Candidate j = 0; j < m; ++j) {
      if (i == j) continue;
      // max_v (d(i,v) - d(j,v)) <= min_v' (d(i,v') + d(j,v'))
      T gap = d[i][0] - d[j][0], reach = d[i][0] + d[j][0];
      for (std::size_t v = 1; v < nb; ++v) {
        if (d[i][v] - d[j][v] > gap) gap = d[i][v] - d[j][v];
        if (d[i][v] + d[j][v] < reach) reach = d[i][v] + d[j][v];
      }
      if (!detail::leq_tol(gap, reach, tol)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// LP distortion

enum class LpFormulation {
  // d(i,v) <= d(i,v') + d(j,v') + d(j,v) for every i, j, v, v'.
  four_point,
  // Explicit candidate-candidate distances e_ij with
  // max_v |d(i,v) - d(j,v)| <= e_ij <= min_v (d(i,v) + d(j,v)); same optimum,
  // fewer rows when there are many distinct ballots.
  lifted,
  // four_point while it has at most kFourPointRowLimit cycle rows, else lifted.
  automatic,
};

inline constexpr std::size_t kFourPointRowLimit = 2000;

template <Scalar T>
struct DistortionReport {
  T value = 0;  // meaningless when infinite
  bool infinite = false;
  Candidate reference_candidate = 0;
  DistanceTable<T> witness_metric;  // empty when infinite
  std::vector<std::optional<T>> per_reference;  // nullopt = unbounded
  std::string method = "lp";
};

// Ballots times candidates above which exact mode refuses to run.
inline constexpr std::size_t kExactLpGuard = 400;

namespace detail {

// LP in the variables d(c, v) over distinct rankings (plus e_ij when lifted).
template <Scalar T>
class DistortionLp {
 public:
  DistortionLp(const Election& e, LpFormulation form) : e_(e), m_(e.num_candidates()) {
    std::map<std::vector<Candidate>, std::size_t> seen;
    for (std::size_t v = 0; v < e.num_ballots(); ++v) {
      const Ballot& b = e.ballot(v);
      auto [it, fresh] = seen.emplace(b.ranking, rankings_.size());
      if (fresh) {
        rankings_.push_back(b.ranking);
        weights_.push_back(0);
      }
      weights_[it->second] += b.weight;
      ballot_group_.push_back(it->second);
    }
    const std::size_t g = rankings_.size();
    if (form == LpFormulation::automatic) {
      form = m_ * (m_ - 1) / 2 * g * (g - 1) <= kFourPointRowLimit ? LpFormulation::four_point : LpFormulation::lifted;
    }
    pos_.assign(g, std::vector<std::size_t>(m_));
    for (std::size_t v = 0; v < g; ++v) {
      for (std::size_t p = 0; p < m_; ++p) pos_[v][rankings_[v][p]] = p;
    }
    const std::size_t npairs = form == LpFormulation::lifted ? m_ * (m_ - 1) / 2 : 0;
    nvars_ = m_ * g + npairs;
    base_ = LinearProgram<T>(nvars_, Sense::maximize);

    for (std::size_t v = 0; v < g; ++v) {
      for (std::size_t p = 0; p + 1 < m_; ++p) {
        auto row = zero();
        row[var(rankings_[v][p], v)] = 1;
        row[var(rankings_[v][p + 1], v)] = -1;
        base_.add_row(std::move(row), Relation::leq, T(0));
      }
    }
    if (form == LpFormulation::lifted) {
      std::size_t pair = m_ * g;
      for (Candidate i = 0; i < m_; ++i) {
        for (Candidate j = i + 1; j < m_; ++j, ++pair) {
          for (std::size_t v = 0; v < g; ++v) {
            auto up = zero();
            up[pair] = 1;
            up[var(i, v)] = -1;
            up[var(j, v)] = -1;
            base_.add_row(std::move(up), Relation::leq, T(0));
            // Only the worse-ranked side can exceed the other.
            const Candidate worse = pos_[v][i] > pos_[v][j] ? i : j;
            const Candidate better = worse == i ? j : i;
            auto low = zero();
            low[var(worse, v)] = 1;
            low[var(better, v)] = -1;
            low[pair] = -1;
            base_.add_row(std::move(low), Relation::leq, T(0));
          }
        }
      }
    } else {
      for (Candidate i = 0; i < m_; ++i) {
        for (Candidate j = 0; j < m_; ++j) {
          if (i == j) continue;
          for (std::size_t v = 0; v < g; ++v) {
            if (pos_[v][i] < pos_[v][j]) continue;  // implied by consistency
            for (std::size_t w = 0; w < g; ++w) {
              if (w == v) continue;
              auto row = zero();
              row[var(i, v)] += 1;
              row[var(j, v)] -= 1;
              row[var(i, w)] -= 1;
              row[var(j, w)] -= 1;
              base_.add_row(std::move(row), Relation::leq, T(0));
            }
          }
        }
      }
    }
  }

  // max sum_j p_j sum_v w_v d(j,v) s.t. sum_v w_v d(ref,v) = n; the optimum
  // divided by n is the worst ratio against ref.
  LpSolution<T> solve(const BasicLottery<T>& d, Candidate ref) const {
    LinearProgram<T> lp = base_;
    for (Candidate c = 0; c < m_; ++c) {
      if (d.weights[c] == 0) continue;
      for (std::size_t v = 0; v < rankings_.size(); ++v) lp.objective[var(c, v)] = d.weights[c] * weight(v);
    }
    auto norm = zero();
    for (std::size_t v = 0; v < rankings_.size(); ++v) norm[var(ref, v)] = weight(v);
    lp.add_row(std::move(norm), Relation::eq, scalar_from_int<T>(static_cast<std::int64_t>(e_.total_weight())));
    return solve_lp(lp);
  }

  // Distance table over the original ballots.
  DistanceTable<T> table(const std::vector<T>& values) const {
    DistanceTable<T> d(m_, std::vector<T>(e_.num_ballots()));
    for (Candidate c = 0; c < m_; ++c) {
      for (std::size_t v = 0; v < e_.num_ballots(); ++v) {
        T x = values[var(c, ballot_group_[v])];
        if constexpr (!ScalarTraits<T>::exact) x = std::max(x, 0.0);
        d[c][v] = x;
      }
    }
    return d;
  }

 private:
  std::vector<T> zero() const { return std::vector<T>(nvars_, T(0)); }
  std::size_t var(Candidate c, std::size_t v) const { return v * m_ + c; }
  T weight(std::size_t v) const { return scalar_from_int<T>(static_cast<std::int64_t>(weights_[v])); }

  const Election& e_;
  std::size_t m_;
  std::vector<std::vector<Candidate>> rankings_;
  std::vector<std::uint64_t> weights_;
  std::vector<std::size_t> ballot_group_;
  std::vector<std::vector<std::size_t>> pos_;
  std::size_t nvars_ = 0;
  LinearProgram<T> base_;
};

}  // namespace detail

struct LpDistortionOptions {
  LpFormulation formulation = LpFormulation::automatic;
  std::optional<Candidate> only_reference;  // default: maximize over all
};

// Worst-case ratio sum_j p_j SC(j) / SC(o) over consistent pseudometrics,
// maximized over every reference candidate o. Exact for T = Rational.
template <Scalar T>
DistortionReport<T> lp_distortion(const Election& e, const BasicLottery<T>& d, const LpDistortionOptions& opt = {}) {
  const std::size_t m = e.num_candidates();
  validate_lottery(d, m);
  if constexpr (ScalarTraits<T>::exact) {
    if (e.num_ballots() * m > kExactLpGuard) {
      throw std::invalid_argument("exact LP distortion needs ballots * candidates <= 400");
    }
  }
  if (opt.only_reference && *opt.only_reference >= m) throw std::invalid_argument("reference outside candidate range");
  const detail::DistortionLp<T> lp(e, opt.formulation);
  const T n = scalar_from_int<T>(static_cast<std::int64_t>(e.total_weight()));

  DistortionReport<T> report;
  report.per_reference.assign(m, std::nullopt);
  bool have = false;
  for (Candidate ref = 0; ref < m; ++ref) {
    if (opt.only_reference && ref != *opt.only_reference) continue;
    const auto sol = lp.solve(d, ref);
    if (sol.status == LpStatus::infeasible) throw LpError("distortion LP reported infeasible");
    if (sol.status == LpStatus::unbounded) {
      if (!report.infinite) {
        report.infinite = true;
        report.reference_candidate = ref;
        report.witness_metric.clear();
      }
      continue;
    }
    const T value = sol.objective / n;
    report.per_reference[ref] = value;
    if (report.infinite) continue;
    if (!have || value > report.value) {
      have = true;
      report.value = value;
      report.reference_candidate = ref;
      report.witness_metric = lp.table(sol.values);
    }
  }
  if (!report.infinite) {
    // The witness must be a consistent pseudometric reproducing the value.
    if (!is_consistent_pseudometric(e, report.witness_metric)) throw LpError("LP witness violates the metric constraints");
    const auto again = direct_cost_ratio(e, report.witness_metric, d, report.reference_candidate);
    if (!again) throw LpError("LP witness has zero reference cost");
    if constexpr (ScalarTraits<T>::exact) {
      if (*again != report.value) throw LpError("LP witness does not reproduce the optimum");
    } else {
      if (std::abs(*again - report.value) > 1e-9 * std::max(1.0, std::abs(report.value))) {
        throw LpError("LP witness does not reproduce the optimum");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Subset sufficient condition

template <Scalar T>
struct SufficientConditionResult {
  bool ok = true;
  std::vector<Candidate> violating_set;
};

namespace detail {

inline constexpr std::size_t kSubsetGuard = 22;

// For each ballot, the candidates ranked below `top`, as a bitmask.
inline std::vector<std::uint32_t> below_masks(const Election& e, Candidate top) {
  std::vector<std::uint32_t> out;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    std::uint32_t mask = 0;
    const auto& r = e.ballot(v).ranking;
    for (std::size_t p = e.position(v, top) + 1; p < r.size(); ++p) mask |= 1u << r[p];
    out.push_back(mask);
  }
  return out;
}

// Visits every nonempty J within C \ {i*} with (LHS, 1 - s_{i* > J}).
template <Scalar T, class F>
void for_each_subset(const Election& e, const BasicLottery<T>& d, Candidate i_star, F&& visit) {
  const std::size_t m = e.num_candidates();
  if (m > kSubsetGuard) throw std::invalid_argument("subset scan needs at most 22 candidates");
  e.check_candidate(i_star);
  validate_lottery(d, m);
  const auto s = margin_matrix(e);
  std::vector<T> coeff(m);
  for (Candidate j = 0; j < m; ++j) coeff[j] = scalar_cast<T>(s(i_star, j)) * d.weights[j];
  const auto masks = below_masks(e, i_star);
  const T n = scalar_from_int<T>(static_cast<std::int64_t>(e.total_weight()));
  const std::uint32_t others = ((m == 32 ? 0u : (1u << m)) - 1u) & ~(1u << i_star);
  for (std::uint32_t set = others; set != 0; set = (set - 1) & others) {
    T lhs = 0;
    for (Candidate j = 0; j < m; ++j) {
      if ((set >> j) & 1u) lhs += coeff[j];
    }
    std::uint64_t beaten = 0;
    for (std::size_t v = 0; v < masks.size(); ++v) {
      if ((masks[v] & set) == set) beaten += e.ballot(v).weight;
    }
    const T rest = T(1) - scalar_from_int<T>(static_cast<std::int64_t>(beaten)) / n;
    visit(set, lhs, rest);
  }
}

inline std::vector<Candidate> members(std::uint32_t set) {
  std::vector<Candidate> out;
  for (Candidate c = 0; set != 0; ++c, set >>= 1) {
    if (set & 1u) out.push_back(c);
  }
  return out;
}

}  // namespace detail

// sum_{j in J} s_{i*>j} p_j <= lambda (1 - s_{i*>J}) for all J in C \ {i*}.
template <Scalar T>
SufficientConditionResult<T> check_sufficient_condition(const Election& e, const BasicLottery<T>& d, Candidate i_star,
                                                        const T& lambda) {
  SufficientConditionResult<T> out;
  detail::for_each_subset(e, d, i_star, [&](std::uint32_t set, const T& lhs, const T& rest) {
    if (out.ok && !detail::leq_tol(lhs, T(lambda * rest), 1e-12)) {
      out.ok = false;
      out.violating_set = detail::members(set);
    }
  });
  return out;
}

// Smallest lambda passing check_sufficient_condition; nullopt if none does.
template <Scalar T>
std::optional<T> minimal_sufficient_lambda(const Election& e, const BasicLottery<T>& d, Candidate i_star) {
  T best = 0;
  bool finite = true;
  detail::for_each_subset(e, d, i_star, [&](std::uint32_t, const T& lhs, const T& rest) {
    if (lhs == 0) return;
    if (rest == 0) {
      finite = false;
      return;
    }
    const T need = lhs / rest;
    if (need > best) best = need;
  });
  if (!finite) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Strong (alpha, beta)-consistency

// Whenever s_{a>b} >= beta, x_a - x_b <= alpha R.
template <Scalar T>
bool strong_consistency(const Election& e, const BiasedMetricSpec<T>& spec, const T& alpha, const T& beta, const T& R) {
  spec.validate(e.num_candidates());
  const auto s = margin_matrix(e);
  for (Candidate a = 0; a < e.num_candidates(); ++a) {
    for (Candidate b = 0; b < e.num_candidates(); ++b) {
      if (a == b) continue;
      if (scalar_cast<T>(s(a, b)) >= beta && spec.x[a] - spec.x[b] > alpha * R) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tournament-ratio certificates: each bound caps SC(j) / SC(ref) over all
// consistent metrics.

struct RatioCertificate {
  std::string lemma;  // one-hop | two-hop-var | two-hop-balance | supp-ml
  double theta = 0;
  std::optional<Candidate> via;  // intermediate candidate, if any
  double bound = 0;
};

inline double one_hop_bound(double theta) { return 2.0 / theta - 1.0; }
inline double two_hop_var_bound(double theta) { return 4.0 / theta - 3.0; }
inline double two_hop_balance_bound(double theta) {
  return 1.0 + 2.0 * std::max(1.0 / (0.5 - theta), (1.0 - theta) / theta);
}
// argmin of two_hop_balance_bound over (0, 1/2); the bound there is 4 + sqrt(17).
inline double balanced_theta() { return (5.0 - std::sqrt(17.0)) / 4.0; }
inline double supp_ml_bound() { return 4.0 + std::sqrt(17.0); }

inline std::vector<RatioCertificate> ratio_certificates(const Election& e, Candidate j, Candidate ref) {
  e.check_candidate(j);
  e.check_candidate(ref);
  if (j == ref) throw std::invalid_argument("ratio certificates need j != ref");
  const auto s = margin_matrix(e);
  const std::size_t m = e.num_candidates();
  std::vector<RatioCertificate> out;

  const double direct = s(j, ref).get_d();
  if (direct > 0) out.push_back({"one-hop", direct, std::nullopt, one_hop_bound(direct)});

  std::optional<Candidate> best_c;
  Rational best_theta = 0;
  for (Candidate c = 0; c < m; ++c) {
    if (c == j || c == ref) continue;
    const Rational t = std::min(s(j, c), s(c, ref));
    if (t > best_theta) {
      best_theta = t;
      best_c = c;
    }
  }
  if (best_c) out.push_back({"two-hop-var", best_theta.get_d(), best_c, two_hop_var_bound(best_theta.get_d())});

  // For each intermediate c the admissible thetas form the interval
  // [1/2 - s_{c>ref}, s_{j>c}] within (0, 1/2); the bound is quasi-convex in
  // theta, so its best value there is at the clamp of the balanced theta.
  std::optional<RatioCertificate> balance;
  for (Candidate c = 0; c < m; ++c) {
    if (c == j) continue;
    const double lo = std::max(0.5 - s(c, ref).get_d(), 0.0);
    const double hi = std::min(s(j, c).get_d(), 0.5);
    if (hi <= 0 || lo >= 0.5 || lo > hi) continue;
    double theta = std::clamp(balanced_theta(), lo, hi);
    if (theta <= 0 || theta >= 0.5) continue;
    const double bound = two_hop_balance_bound(theta);
    if (!balance || bound < balance->bound) balance = RatioCertificate{"two-hop-balance", theta, c, bound};
  }
  if (balance) out.push_back(*balance);

  if (maximal_lottery(e).in_support(j)) out.push_back({"supp-ml", balanced_theta(), std::nullopt, supp_ml_bound()});
  return out;
}

// s_{ref>j} <= lambda s_{k>ref}, and for every partition I u J of C with
// ref, k in I and j in J: min_{i in I} s_{i>j} <= lambda max_{l in J}
// max(s_{l>ref}, s_{l>k}). True certifies SC(j) <= (1 + 2 lambda) SC(ref).
inline bool check_two_hop_general(const Election& e, Candidate j, Candidate k, Candidate ref, const Rational& lambda) {
  const std::size_t m = e.num_candidates();
  if (m > detail::kSubsetGuard) throw std::invalid_argument("partition scan needs at most 22 candidates");
  e.check_candidate(j);
  e.check_candidate(k);
  e.check_candidate(ref);
  if (j == ref || j == k) throw std::invalid_argument("two-hop check needs j distinct from k and ref");
  const auto s = margin_matrix(e);
  if (s(ref, j) > lambda * s(k, ref)) return false;
  std::vector<Candidate> free;
  for (Candidate c = 0; c < m; ++c) {
    if (c != j && c != k && c != ref) free.push_back(c);
  }
  for (std::uint32_t mask = 0; mask < (1u << free.size()); ++mask) {
    std::vector<bool> in_i(m, false);
    in_i[ref] = in_i[k] = true;
    for (std::size_t b = 0; b < free.size(); ++b) {
      if ((mask >> b) & 1u) in_i[free[b]] = true;
    }
    Rational lhs = 2, rhs = 0;
    for (Candidate c = 0; c < m; ++c) {
      if (in_i[c]) {
        lhs = std::min(lhs, s(c, j));
      } else {
        rhs = std::max(rhs, std::max(s(c, ref), s(c, k)));
      }
    }
    if (lhs > lambda * rhs) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Adversarial search over biased metrics (lower-bound witnesses only)

struct BiasedSearchResult {
  BiasedMetricSpec<double> spec;
  double ratio = 1;
};

// Coordinate ascent on x over a multiplicative grid, started from the
// x_j = mean_v (d(j,v) - d(i*,v))^+ of a seed distance table.
inline BiasedSearchResult adversarial_biased_search(const Election& e, const LotteryF& d, Candidate i_star,
                                                    const DistanceTable<double>* seed_table = nullptr,
                                                    std::size_t rounds = 50) {
  const std::size_t m = e.num_candidates();
  BiasedMetricSpec<double> spec{std::vector<double>(m, 1.0), i_star};
  spec.x[i_star] = 0;
  if (seed_table) {
    const double n = static_cast<double>(e.total_weight());
    for (Candidate j = 0; j < m; ++j) {
      double sum = 0;
      for (std::size_t v = 0; v < e.num_ballots(); ++v) {
        sum += static_cast<double>(e.ballot(v).weight) * ((*seed_table)[j][v] - (*seed_table)[i_star][v]);
      }
      spec.x[j] = j == i_star ? 0.0 : std::max(0.0, sum / n);
    }
  }
  auto score = [&](const BiasedMetricSpec<double>& sp) {
    const auto r = biased_distortion(e, sp, d);
    return r.ratio ? *r.ratio : 1.0;
  };
  BiasedSearchResult best{spec, score(spec)};
  static constexpr double kFactors[] = {0.0, 0.25, 0.5, 0.8, 0.9, 0.97, 1.03, 1.1, 1.25, 2.0, 4.0};
  for (std::size_t round = 0; round < rounds; ++round) {
    bool improved = false;
    for (Candidate j = 0; j < m; ++j) {
      if (j == i_star) continue;
      std::vector<double> options;
      for (double f : kFactors) options.push_back(best.spec.x[j] * f);
      for (Candidate c = 0; c < m; ++c) options.push_back(best.spec.x[c]);
      options.push_back(1.0);
      for (double xj : options) {
        auto trial = best.spec;
        trial.x[j] = xj;
        const double sc = score(trial);
        if (sc > best.ratio + 1e-12) {
          best = {trial, sc};
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return best;
}

}  // namespace mdist
