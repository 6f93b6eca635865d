#pragma once

// Shared fixtures and random generators for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mdist/election.hpp"

namespace mdist::testing {

inline std::vector<std::string> letters(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m; ++i) out.emplace_back(1, static_cast<char>('a' + i));
  return out;
}

// a>b>c, b>c>a, c>a>b
inline Election cycle3() {
  return Election::from_names({"a", "b", "c"}, {{{"a", "b", "c"}, 1}, {{"b", "c", "a"}, 1}, {{"c", "a", "b"}, 1}});
}

// Two voters a>b and b>a.
inline Election split2() { return Election::from_names({"a", "b"}, {{{"a", "b"}, 1}, {{"b", "a"}, 1}}); }

inline Election random_election(std::mt19937_64& rng, std::size_t n, std::size_t m, std::uint64_t max_weight = 1) {
  std::vector<Ballot> ballots;
  std::uniform_int_distribution<std::uint64_t> wdist(1, max_weight);
  for (std::size_t v = 0; v < n; ++v) {
    Ballot b;
    b.ranking.resize(m);
    std::iota(b.ranking.begin(), b.ranking.end(), Candidate{0});
    std::shuffle(b.ranking.begin(), b.ranking.end(), rng);
    b.weight = wdist(rng);
    ballots.push_back(std::move(b));
  }
  return Election(letters(m), std::move(ballots));
}

// Random exact lottery with denominators up to `den`, optionally restricted to
// a random nonempty support.
inline Lottery random_lottery(std::mt19937_64& rng, std::size_t m, long den = 12, bool sparse = true) {
  std::uniform_int_distribution<long> wd(0, den);
  std::bernoulli_distribution keep(0.6);
  std::vector<long> raw(m, 0);
  long total = 0;
  while (total == 0) {
    for (std::size_t c = 0; c < m; ++c) {
      raw[c] = (!sparse || keep(rng)) ? wd(rng) : 0;
      total += raw[c];
    }
  }
  Lottery d{std::vector<Rational>(m)};
  for (std::size_t c = 0; c < m; ++c) d.weights[c] = make_rational(raw[c], total);
  return d;
}

// Grid check of p <= max{(lambda/theta)(1-theta), (lambda/theta)(1 - (1/(k+1)+eps) p^{-k})}
// at p = i/points, i = 1..points.
inline bool lambda_grid_feasible(double lambda, double theta, unsigned k, double eps, int points = 10'000) {
  const double c = 1.0 / (k + 1.0) + eps;
  for (int i = 1; i <= points; ++i) {
    const double p = static_cast<double>(i) / points;
    const double f1 = lambda / theta * (1 - theta);
    const double f2 = lambda / theta * (1 - c * std::pow(p, -static_cast<double>(k)));
    if (p > std::max(f1, f2) + 1e-12) return false;
  }
  return true;
}

}  // namespace mdist::testing
