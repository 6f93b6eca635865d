#pragma once

// Seeded instance families for sweeps and tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/election.hpp"

namespace mdist {

// "a".."z", then "c26", "c27", ...
inline std::vector<std::string> default_names(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < m; ++c) {
    out.push_back(c < 26 ? std::string(1, static_cast<char>('a' + c)) : "c" + std::to_string(c));
  }
  return out;
}

namespace detail {

inline std::vector<Candidate> random_ranking(std::mt19937_64& rng, std::size_t m) {
  std::vector<Candidate> r(m);
  std::iota(r.begin(), r.end(), Candidate{0});
  std::shuffle(r.begin(), r.end(), rng);
  return r;
}

inline void check_sizes(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw std::invalid_argument("need n >= 1 and m >= 1");
}

}  // namespace detail

// n i.i.d. uniformly random rankings.
inline Election uniform_random_election(std::size_t n, std::size_t m, std::uint64_t seed) {
  detail::check_sizes(n, m);
  std::mt19937_64 rng(seed);
  std::vector<Ballot> ballots;
  for (std::size_t v = 0; v < n; ++v) ballots.push_back({detail::random_ranking(rng, m), 1});
  return Election(default_names(m), std::move(ballots));
}

// Voters rank candidates by distance on a line; ties go to the earlier
// candidate.
inline Election single_peaked_from_positions(const std::vector<double>& candidates, const std::vector<double>& voters) {
  detail::check_sizes(voters.size(), candidates.size());
  std::vector<Ballot> ballots;
  for (double x : voters) {
    Ballot b;
    b.ranking.resize(candidates.size());
    std::iota(b.ranking.begin(), b.ranking.end(), Candidate{0});
    std::stable_sort(b.ranking.begin(), b.ranking.end(),
                     [&](Candidate i, Candidate j) { return std::abs(candidates[i] - x) < std::abs(candidates[j] - x); });
    ballots.push_back(std::move(b));
  }
  return Election(default_names(candidates.size()), std::move(ballots));
}

// Candidates and voters uniform on [0, 1].
inline Election single_peaked_line_election(std::size_t n, std::size_t m, std::uint64_t seed) {
  detail::check_sizes(n, m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0, 1);
  std::vector<double> cand(m), vot(n);
  for (auto& x : cand) x = unit(rng);
  for (auto& x : vot) x = unit(rng);
  return single_peaked_from_positions(cand, vot);
}

// Voter v ranks v, v+1, ..., v-1 (mod m): the m-candidate Condorcet cycle.
inline Election cycle_family_election(std::size_t n, std::size_t m) {
  detail::check_sizes(n, m);
  std::vector<Ballot> ballots;
  for (std::size_t v = 0; v < n; ++v) {
    Ballot b;
    for (std::size_t p = 0; p < m; ++p) b.ranking.push_back((v + p) % m);
    ballots.push_back(std::move(b));
  }
  return Election(default_names(m), std::move(ballots));
}

// Random rankings paired with their reversals (every pairwise margin 1/2),
// plus one unpaired random ranking when n is odd. Maximal lotteries are then
// far from unique and the bound of 3 can be attained.
inline Election near_tie_election(std::size_t n, std::size_t m, std::uint64_t seed) {
  detail::check_sizes(n, m);
  std::mt19937_64 rng(seed);
  std::vector<Ballot> ballots;
  for (std::size_t v = 0; v + 1 < n; v += 2) {
    auto r = detail::random_ranking(rng, m);
    ballots.push_back({r, 1});
    std::reverse(r.begin(), r.end());
    ballots.push_back({r, 1});
  }
  if (n % 2 == 1) ballots.push_back({detail::random_ranking(rng, m), 1});
  return Election(default_names(m), std::move(ballots));
}

inline const std::vector<std::string>& generator_families() {
  static const std::vector<std::string> names{"uniform-random", "single-peaked-line", "cycle-family", "near-tie"};
  return names;
}

inline Election generate_election(const std::string& family, std::size_t n, std::size_t m, std::uint64_t seed) {
  if (family == "uniform-random") return uniform_random_election(n, m, seed);
  if (family == "single-peaked-line") return single_peaked_line_election(n, m, seed);
  if (family == "cycle-family") return cycle_family_election(n, m);
  if (family == "near-tie") return near_tie_election(n, m, seed);
  throw std::invalid_argument("unknown generator family: " + family);
}

}  // namespace mdist
