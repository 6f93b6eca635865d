#pragma once

// Maximal Lotteries (exact equilibrium of the Condorcet game) and Stable
// k-Lotteries (attacker side of the k-vs-1 game), with exact verifiers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/election.hpp"
#include "mdist/simplex.hpp"

namespace mdist {

// Symmetric equilibrium of the game with payoff s_{i>j}: the returned D has
// s_{D>a} >= 1/2 for every candidate a, checked exactly before returning.
inline Lottery maximal_lottery(const Election& e) {
  const auto s = margin_matrix(e);
  const std::size_t m = e.num_candidates();
  Matrix<Rational> payoff(m, std::vector<Rational>(m));
  for (Candidate i = 0; i < m; ++i) {
    for (Candidate j = 0; j < m; ++j) payoff[i][j] = s(i, j);
  }
  const auto game = solve_zero_sum(payoff);
  Lottery d{game.row_strategy};
  validate_lottery(d, m);
  const Rational half = make_rational(1, 2);
  for (Candidate a = 0; a < m; ++a) {
    if (margin_lottery_vs_lottery(s, d, point_mass(m, a)) < half) {
      throw std::logic_error("maximal lottery failed its equilibrium check");
    }
  }
  return d;
}

struct StabilityCheck {
  Candidate max_violator = 0;
  Rational max_value = 0;
};

// max_a Pr[a >_v D^k], exactly. D is stable iff max_value <= 1/(k+1).
inline StabilityCheck verify_stability(const Election& e, const Lottery& d, unsigned k) {
  validate_lottery(d, e.num_candidates());
  StabilityCheck out;
  for (Candidate a = 0; a < e.num_candidates(); ++a) {
    Rational v = candidate_beats_power(e, a, d, k);
    if (a == 0 || v > out.max_value) {
      out.max_value = std::move(v);
      out.max_violator = a;
    }
  }
  return out;
}

struct StableLotteryPair {
  Lottery attacker;     // D_SL
  Lottery defender;     // best response to the attacker (point mass)
  unsigned k = 1;
  double achieved_value = 0;  // max_a Pr[a >_v attacker^k]
  Rational exact_value = 0;
};

struct StableLotteryOptions {
  double tol_eq = 1e-6;
  std::size_t max_iterations = 100'000;
  std::size_t random_restarts = 2;
  std::uint64_t seed = 0;
  // Kelley cutting-plane refinement when the subgradient phase stalls.
  std::size_t max_cuts_rounds = 400;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, LotteryF best, double value)
      : std::runtime_error(what), best_iterate(std::move(best)), best_value(value) {}
  LotteryF best_iterate;
  double best_value;
};

namespace detail {

// E_{U~[0,1]}[U (w + tU)^{k-1}], expanded binomially.
inline double weighted_power_mean(double w, double t, unsigned k) {
  double sum = 0, binom = 1;
  for (unsigned j = 0; j < k; ++j) {
    sum += binom * std::pow(w, static_cast<double>(k - 1 - j)) * std::pow(t, static_cast<double>(j)) / (j + 2.0);
    binom = binom * (k - 1 - j) / (j + 1.0);
  }
  return sum;
}

// Values f_a(D) and gradients for every candidate a. f_a is convex in D.
class PowerObjective {
 public:
  PowerObjective(const Election& e, unsigned k) : e_(e), k_(k), m_(e.num_candidates()) {}

  void evaluate(const std::vector<double>& d, std::vector<double>& values,
                std::vector<std::vector<double>>* grads) const {
    values.assign(m_, 0.0);
    if (grads) grads->assign(m_, std::vector<double>(m_, 0.0));
    const double n = static_cast<double>(e_.total_weight());
    for (std::size_t v = 0; v < e_.num_ballots(); ++v) {
      const Ballot& b = e_.ballot(v);
      const double wv = static_cast<double>(b.weight) / n;
      // Walk from the bottom so `below` accumulates the mass ranked under a.
      double below = 0;
      for (std::size_t p = m_; p-- > 0;) {
        const Candidate a = b.ranking[p];
        const double t = d[a];
        values[a] += wv * interval_power_mean<double>(below, t, k_);
        if (grads) {
          const double dw = k_ * interval_power_mean<double>(below, t, k_ - 1);
          const double dt = k_ * weighted_power_mean(below, t, k_);
          auto& g = (*grads)[a];
          g[a] += wv * dt;
          for (std::size_t q = p + 1; q < m_; ++q) g[b.ranking[q]] += wv * dw;
        }
        below += t;
      }
    }
  }

  double max_value(const std::vector<double>& d) const {
    std::vector<double> vals;
    evaluate(d, vals, nullptr);
    return *std::max_element(vals.begin(), vals.end());
  }

 private:
  const Election& e_;
  unsigned k_;
  std::size_t m_;
};

// Euclidean projection onto the probability simplex.
inline void project_to_simplex(std::vector<double>& x) {
  std::vector<double> u(x);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double cand = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - cand > 0) theta = cand;
  }
  for (double& xi : x) xi = std::max(0.0, xi - theta);
}

// Polyak-step projected subgradient on max_a f_a with known optimum f_star.
inline void polyak_descent(const PowerObjective& obj, std::vector<double> x, double f_star, std::size_t iters,
                           double stop_at, std::vector<double>& best, double& best_val) {
  std::vector<double> vals;
  std::vector<std::vector<double>> grads;
  for (std::size_t it = 0; it < iters; ++it) {
    obj.evaluate(x, vals, &grads);
    const auto top = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    const double f = vals[top];
    if (f < best_val) {
      best_val = f;
      best = x;
    }
    if (best_val <= stop_at) return;
    const auto& g = grads[top];
    // Only the component of g tangent to the simplex moves the iterate.
    double mean = 0;
    for (double gi : g) mean += gi;
    mean /= static_cast<double>(g.size());
    double norm2 = 0;
    for (double gi : g) norm2 += (gi - mean) * (gi - mean);
    if (norm2 <= 0) return;
    const double step = (f - f_star) / norm2;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * (g[i] - mean);
    project_to_simplex(x);
  }
}

// Kelley cutting planes: min z s.t. z >= f_a(x_i) + g_a(x_i).(x - x_i) over
// the simplex. Each round adds one cut per candidate at the model minimizer.
inline void kelley_refine(const PowerObjective& obj, std::size_t m, std::size_t rounds, double stop_at,
                          std::vector<double>& best, double& best_val) {
  LinearProgram<double> lp(m + 1, Sense::minimize);
  lp.objective[m] = 1;
  lp.set_free(m);
  std::vector<double> ones(m + 1, 1.0);
  ones[m] = 0;
  lp.add_row(ones, Relation::eq, 1.0);
  std::vector<double> vals;
  std::vector<std::vector<double>> grads;
  auto add_cuts = [&](const std::vector<double>& x) {
    obj.evaluate(x, vals, &grads);
    for (std::size_t a = 0; a < m; ++a) {
      std::vector<double> row(m + 1);
      double rhs = -vals[a];
      for (std::size_t i = 0; i < m; ++i) {
        row[i] = grads[a][i];
        rhs += grads[a][i] * x[i];
      }
      row[m] = -1;
      lp.add_row(std::move(row), Relation::leq, rhs);
    }
  };
  add_cuts(best);
  for (std::size_t r = 0; r < rounds && best_val > stop_at; ++r) {
    auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) return;
    std::vector<double> x(sol.values.begin(), sol.values.begin() + static_cast<std::ptrdiff_t>(m));
    project_to_simplex(x);
    const double f = obj.max_value(x);
    if (f < best_val) {
      best_val = f;
      best = x;
    }
    add_cuts(x);
  }
}

// Drop weights below the float support threshold and renormalize.
inline std::vector<double> clean_weights(std::vector<double> x) {
  double sum = 0;
  for (double& xi : x) {
    if (xi < LotteryF::kFloatSupportThreshold) xi = 0;
    sum += xi;
  }
  for (double& xi : x) xi /= sum;
  return x;
}

}  // namespace detail

// Attacker strategy D of the k-vs-1 game with max_a Pr[a >_v D^k] <= 1/(k+1)
// + tol_eq, verified exactly on the exact image of the float iterate.
inline StableLotteryPair stable_k_lottery(const Election& e, unsigned k, const StableLotteryOptions& opt = {}) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (!(opt.tol_eq > 0)) throw std::invalid_argument("tol_eq must be positive");
  const std::size_t m = e.num_candidates();
  const Rational target = make_rational(1, static_cast<long>(k) + 1) + exact_from_double(opt.tol_eq);

  auto finish = [&](const std::vector<double>& x) -> std::optional<StableLotteryPair> {
    const Lottery d = to_exact(LotteryF{detail::clean_weights(x)});
    const auto check = verify_stability(e, d, k);
    if (check.max_value > target) return std::nullopt;
    StableLotteryPair out;
    out.attacker = d;
    out.defender = point_mass(m, check.max_violator);
    out.k = k;
    out.exact_value = check.max_value;
    out.achieved_value = check.max_value.get_d();
    return out;
  };

  const double f_star = 1.0 / (k + 1.0);
  // Aim below the acceptance level so the exact re-check has slack.
  const double stop_at = f_star + 0.25 * opt.tol_eq;
  const detail::PowerObjective obj(e, k);

  std::vector<std::vector<double>> starts;
  if (k == 1) {
    starts.push_back(to_float(maximal_lottery(e)).weights);
  } else {
    // The ML is a good warm start for small k.
    starts.push_back(to_float(maximal_lottery(e)).weights);
    starts.push_back(uniform_lottery<double>(m).weights);
  }
  std::mt19937_64 rng(opt.seed);
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t r = 0; r < opt.random_restarts; ++r) {
    std::vector<double> x(m);
    for (double& xi : x) xi = expo(rng);
    detail::project_to_simplex(x);
    starts.push_back(x);
  }

  std::vector<double> best = starts.front();
  double best_val = obj.max_value(best);
  const std::size_t per_start = std::max<std::size_t>(1, opt.max_iterations / starts.size());
  for (const auto& x0 : starts) {
    if (best_val <= stop_at) {
      if (auto done = finish(best)) return *done;
    }
    detail::polyak_descent(obj, x0, f_star, per_start, stop_at, best, best_val);
  }
  if (auto done = finish(best)) return *done;
  detail::kelley_refine(obj, m, opt.max_cuts_rounds, stop_at, best, best_val);
  if (auto done = finish(best)) return *done;
  throw NonConvergence("stable lottery solver did not reach 1/(k+1) + tol_eq within the iteration budget",
                       LotteryF{best}, best_val);
}

}  // namespace mdist
