#pragma once

// theta-threshold tournament digraph, quasi-kernels, theta-pruning and the
// RepApx Pruned Lottery pipeline.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/election.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/repapx.hpp"

namespace mdist {

// Edge a -> b iff s_{a>b} >= theta. With theta > 1/2 at most one direction
// per pair survives.
struct ThresholdDigraph {
  std::size_t m = 0;
  Rational theta;
  std::vector<std::vector<bool>> adj;
  std::vector<std::string> names;
  std::vector<std::vector<Rational>> weight;  // s_{a>b}, kept for dumps

  bool edge(Candidate a, Candidate b) const { return adj[a][b]; }

  std::size_t num_edges() const {
    std::size_t count = 0;
    for (const auto& row : adj) {
      for (bool x : row) count += x;
    }
    return count;
  }

  // One edge per line: "a -> b  s=2/3".
  std::string edge_list() const {
    std::ostringstream out;
    for (Candidate a = 0; a < m; ++a) {
      for (Candidate b = 0; b < m; ++b) {
        if (adj[a][b]) out << names[a] << " -> " << names[b] << "  s=" << weight[a][b].get_str() << "\n";
      }
    }
    return out.str();
  }
};

inline void check_threshold(const Rational& theta) {
  if (theta <= make_rational(1, 2) || theta > 1) throw std::invalid_argument("theta must lie in (1/2, 1]");
}

inline ThresholdDigraph build_threshold_digraph(const Election& e, const Rational& theta) {
  check_threshold(theta);
  const auto s = margin_matrix(e);
  ThresholdDigraph g;
  g.m = e.num_candidates();
  g.theta = theta;
  g.adj.assign(g.m, std::vector<bool>(g.m, false));
  g.weight.assign(g.m, std::vector<Rational>(g.m));
  for (Candidate a = 0; a < g.m; ++a) {
    g.names.push_back(e.name(a));
    for (Candidate b = 0; b < g.m; ++b) {
      g.weight[a][b] = s(a, b);
      if (a != b && s(a, b) >= theta) g.adj[a][b] = true;
    }
  }
  return g;
}

// Independent, and every non-member is reached from a member in <= 2 steps.
inline bool verify_quasi_kernel(const ThresholdDigraph& g, const std::vector<Candidate>& set) {
  std::vector<bool> in(g.m, false);
  for (Candidate c : set) {
    if (c >= g.m) return false;
    in[c] = true;
  }
  for (Candidate a : set) {
    for (Candidate b : set) {
      if (g.edge(a, b)) return false;
    }
  }
  std::vector<bool> covered(in);
  for (Candidate a : set) {
    for (Candidate b = 0; b < g.m; ++b) {
      if (!g.edge(a, b)) continue;
      covered[b] = true;
      for (Candidate c = 0; c < g.m; ++c) {
        if (g.edge(b, c)) covered[c] = true;
      }
    }
  }
  for (bool c : covered) {
    if (!c) return false;
  }
  return true;
}

// Chvatal-Lovasz induction: take the last remaining vertex v, solve the
// subgraph without v and its out-neighbours, then add v unless some chosen
// vertex already points at v (in which case v and N+(v) are within 2 steps).
inline std::vector<Candidate> quasi_kernel(const ThresholdDigraph& g) {
  std::vector<bool> alive(g.m, true);
  std::vector<Candidate> order;  // vertices picked, outermost first
  for (std::size_t left = g.m; left > 0;) {
    Candidate v = g.m;
    for (Candidate c = g.m; c-- > 0;) {
      if (alive[c]) {
        v = c;
        break;
      }
    }
    order.push_back(v);
    alive[v] = false;
    --left;
    for (Candidate w = 0; w < g.m; ++w) {
      if (alive[w] && g.edge(v, w)) {
        alive[w] = false;
        --left;
      }
    }
  }
  // Unwind the recursion from the innermost call outwards.
  std::vector<Candidate> kernel;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Candidate v = *it;
    bool dominated = false;
    for (Candidate u : kernel) dominated = dominated || g.edge(u, v);
    if (!dominated) kernel.push_back(v);
  }
  std::sort(kernel.begin(), kernel.end());
  if (!verify_quasi_kernel(g, kernel)) throw std::logic_error("constructed set is not a quasi-kernel");
  return kernel;
}

// Every off-diagonal margin is strictly below theta.
inline bool is_theta_regular(const Election& e, const Rational& theta) {
  const auto s = margin_matrix(e);
  for (Candidate i = 0; i < e.num_candidates(); ++i) {
    for (Candidate j = 0; j < e.num_candidates(); ++j) {
      if (i != j && s(i, j) >= theta) return false;
    }
  }
  return true;
}

// lambda(theta, k, eps) = theta/(1-theta) * (1/(theta(k+1)) + eps/theta)^{1/k},
// the smallest lambda with p <= max{(lambda/theta)(1-theta),
// (lambda/theta)(1 - (1/(k+1)+eps) p^{-k})} on [0, 1].
namespace detail {

template <std::floating_point F>
F lambda_bound_impl(F theta, unsigned k, F epsilon) {
  if (!(theta > F(0.5) && theta < 1)) throw std::invalid_argument("lambda_bound needs 1/2 < theta < 1");
  if (k < 7) throw std::invalid_argument("lambda_bound needs integer k >= 7");
  if (!(epsilon >= 0)) throw std::invalid_argument("lambda_bound needs epsilon >= 0");
  const F kk = static_cast<F>(k);
  if (1 / (kk + 1) + epsilon > 2 / kk) throw std::invalid_argument("lambda_bound needs 1/(k+1) + epsilon <= 2/k");
  return theta / (1 - theta) * std::pow(1 / (theta * (kk + 1)) + epsilon / theta, 1 / kk);
}

}  // namespace detail

inline double lambda_bound(double theta, unsigned k, double epsilon) {
  return detail::lambda_bound_impl(theta, k, epsilon);
}

inline long double lambda_bound(long double theta, unsigned k, long double epsilon) {
  return detail::lambda_bound_impl(theta, k, epsilon);
}

struct PrunedLotteryResult {
  std::vector<Candidate> pruned;       // quasi-kernel, in candidate order
  Election restricted;                 // profile over the pruned candidates
  Lottery lottery;                     // the sampled lottery, over all candidates
  RepApxCertificate cert;              // over the restricted profile
  ThresholdDigraph graph;
};

struct PrunedLotteryOptions {
  StableLotteryOptions stable;
  SampleUntilOptions sampling;
};

// theta-pruning to a quasi-kernel, then an eps-RepApx Stable k-Lottery over
// the survivors.
inline PrunedLotteryResult repapx_pruned_lottery(const Election& e, double epsilon, unsigned k, const Rational& theta,
                                                 const PrunedLotteryOptions& opt = {}) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  auto graph = build_threshold_digraph(e, theta);
  auto pruned = quasi_kernel(graph);
  Election restricted = e.restricted_to(pruned);
  if (!is_theta_regular(restricted, theta)) throw std::logic_error("pruned profile is not theta-regular");
  const auto base = stable_k_lottery(restricted, k, opt.stable).attacker;
  auto cert = sample_until_repapx(restricted, base, k, epsilon, opt.sampling);
  Lottery lifted{std::vector<Rational>(e.num_candidates(), 0)};
  for (std::size_t i = 0; i < pruned.size(); ++i) lifted.weights[pruned[i]] = cert.distribution.weights[i];
  return PrunedLotteryResult{std::move(pruned), std::move(restricted), std::move(lifted), std::move(cert),
                             std::move(graph)};
}

}  // namespace mdist
