#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mdist/election.hpp"
#include "test_support.hpp"

using namespace mdist;
using mdist::testing::cycle3;
using mdist::testing::random_election;
using mdist::testing::random_lottery;

namespace {

Rational q(long n, long d) { return make_rational(n, d); }

// Brute force: enumerate every k-tuple drawn from Supp(D) and average the
// multiset comparison {a} vs tuple, weighted by the tuple's probability.
Rational beats_power_by_enumeration(const Election& e, Candidate a, const Lottery& d, unsigned k) {
  const auto supp = d.support();
  const std::size_t m = e.num_candidates();
  std::vector<std::size_t> idx(k, 0);
  Rational total = 0;
  while (true) {
    Multiset tuple{std::vector<std::uint64_t>(m, 0)};
    Rational prob = 1;
    for (std::size_t i : idx) {
      tuple.counts[supp[i]] += 1;
      prob *= d.weights[supp[i]];
    }
    total += prob * multiset_beats(e, Multiset::of(m, {a}), tuple);
    std::size_t pos = 0;
    while (pos < k && ++idx[pos] == supp.size()) idx[pos++] = 0;
    if (pos == k) break;
  }
  return total;
}

}  // namespace

TEST_CASE("election validation rejects malformed profiles", "[election]") {
  CHECK_THROWS_AS(Election::from_names({"a", "a"}, {{{"a", "a"}, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Election::from_names({"a", "b"}, {{{"a"}, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Election::from_names({"a", "b"}, {{{"a", "a"}, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Election::from_names({"a", "b"}, {{{"a", "b"}, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Election::from_names({"a", "b"}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Election::from_names({"a", "b"}, {{{"a", "z"}, 1}}), std::invalid_argument);
}

TEST_CASE("margin matrix", "[election]") {
  SECTION("three-voter cycle") {
    const auto s = margin_matrix(cycle3());
    CHECK(s(0, 1) == q(2, 3));
    CHECK(s(1, 2) == q(2, 3));
    CHECK(s(2, 0) == q(2, 3));
    CHECK(s(1, 0) == q(1, 3));
    for (Candidate j = 0; j < 3; ++j) CHECK(s(j, j) == q(1, 2));
  }
  SECTION("single voter") {
    const auto s = margin_matrix(Election::from_names({"a", "b"}, {{{"a", "b"}, 1}}));
    CHECK(s(0, 1) == 1);
    CHECK(s(1, 0) == 0);
  }
  SECTION("weights count as repeated voters") {
    const auto e = Election::from_names({"a", "b"}, {{{"a", "b"}, 3}, {{"b", "a"}, 1}});
    CHECK(margin_matrix(e)(0, 1) == q(3, 4));
  }
}

TEST_CASE("set-versus-candidate margins", "[election]") {
  const auto e = cycle3();
  const std::vector<Candidate> ab{0, 1};
  CHECK(margin_set_vs_candidate(e, ab, 2) == q(1, 3));
  const std::vector<Candidate> c_only{2};
  CHECK(margin_set_vs_candidate(e, c_only, 2) == 0);
  const std::vector<Candidate> a_only{0};
  CHECK(margin_set_vs_candidate(e, a_only, 1) == margin_matrix(e)(0, 1));
  const std::vector<Candidate> bad{7};
  CHECK_THROWS_AS(margin_set_vs_candidate(e, bad, 1), std::invalid_argument);
}

TEST_CASE("lottery-versus-lottery margins", "[election]") {
  const auto e = cycle3();
  const auto s = margin_matrix(e);
  const auto u = uniform_lottery(3);
  CHECK(margin_lottery_vs_lottery(s, u, u) == q(1, 2));
  CHECK(margin_lottery_vs_lottery(s, u, point_mass(3, 0)) == q(1, 2));
  CHECK(margin_lottery_vs_lottery(s, point_mass(3, 0), point_mass(3, 1)) == s(0, 1));
}

TEST_CASE("multiset comparison", "[election]") {
  const auto e = Election::from_names({"a", "b"}, {{{"a", "b"}, 1}});
  CHECK(multiset_beats(e, Multiset::of(2, {0}), Multiset::of(2, {1})) == 1);
  CHECK(multiset_beats(e, Multiset::of(2, {0}), Multiset::of(2, {0})) == q(1, 2));
  CHECK(multiset_beats(e, Multiset::of(2, {0, 0}), Multiset::of(2, {0, 1})) == q(2, 3));
  CHECK_THROWS_AS(multiset_beats(e, Multiset{{0, 0}}, Multiset::of(2, {0})), std::invalid_argument);
}

TEST_CASE("candidate versus k draws, closed form", "[election]") {
  const auto e = Election::from_names({"a", "b"}, {{{"a", "b"}, 1}});
  const auto ab = uniform_lottery(2);
  CHECK(candidate_beats_power(e, 0, ab, 1) == q(3, 4));
  CHECK(candidate_beats_power(e, 0, ab, 1) == beats_power_by_enumeration(e, 0, ab, 1));
  for (unsigned k = 1; k <= 6; ++k) {
    CHECK(candidate_beats_power(e, 0, point_mass(2, 0), k) == q(1, static_cast<long>(k) + 1));
    CHECK(candidate_beats_power(e, 1, point_mass(2, 0), k) == 0);
  }
}

TEST_CASE("closed form agrees with k-tuple enumeration", "[election][property]") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + rng() % 4;
    const auto e = random_election(rng, 1 + rng() % 6, m, 3);
    const auto d = random_lottery(rng, m);
    const unsigned k = 1 + static_cast<unsigned>(rng() % 3);
    for (Candidate a = 0; a < m; ++a) {
      REQUIRE(candidate_beats_power(e, a, d, k) == beats_power_by_enumeration(e, a, d, k));
    }
    // k = 1 collapses to the lottery margin.
    const auto s = margin_matrix(e);
    for (Candidate a = 0; a < m; ++a) {
      REQUIRE(candidate_beats_power(e, a, d, 1) == margin_lottery_vs_lottery(s, point_mass(m, a), d));
    }
    // Floating path tracks the exact one.
    const auto df = to_float(d);
    for (Candidate a = 0; a < m; ++a) {
      REQUIRE(std::abs(candidate_beats_power(e, a, df, k) - candidate_beats_power(e, a, d, k).get_d()) < 1e-12);
    }
  }
}

TEST_CASE("margin identities", "[election][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t m = 2 + rng() % 5;
    const auto e = random_election(rng, 1 + rng() % 7, m, 4);
    const auto s = margin_matrix(e);
    for (Candidate i = 0; i < m; ++i) {
      REQUIRE(s(i, i) == q(1, 2));
      for (Candidate j = 0; j < m; ++j) {
        if (i != j) REQUIRE(s(i, j) + s(j, i) == 1);
        REQUIRE(s(i, j) >= 0);
        REQUIRE(s(i, j) <= 1);
        if (i != j) {
          Rational scaled = s(i, j) * static_cast<long>(e.total_weight());
          REQUIRE(scaled.get_den() == 1);
        }
      }
    }

    // s_{I>j} <= min_i s_{i>j} <= s_{D>j} <= max_i s_{i>j} for D supported on I, j outside I.
    std::vector<Candidate> set;
    for (Candidate c = 0; c + 1 < m; ++c) {
      if (rng() % 2) set.push_back(c);
    }
    if (set.empty()) set.push_back(0);
    const Candidate j = m - 1;
    Lottery d{std::vector<Rational>(m, 0)};
    for (Candidate c : set) d.weights[c] = make_rational(1 + static_cast<long>(rng() % 5), 1);
    Rational tot = 0;
    for (const auto& w : d.weights) tot += w;
    for (auto& w : d.weights) w /= tot;
    Rational lo = 2, hi = -1;
    for (Candidate c : set) {
      lo = std::min(lo, s(c, j));
      hi = std::max(hi, s(c, j));
    }
    const Rational dj = margin_lottery_vs_lottery(s, d, point_mass(m, j));
    REQUIRE(margin_set_vs_candidate(e, set, j) <= lo);
    REQUIRE(lo <= dj);
    REQUIRE(dj <= hi);

    // Triangle inequality over lottery triples.
    const auto x = random_lottery(rng, m), y = random_lottery(rng, m), z = random_lottery(rng, m);
    REQUIRE(margin_lottery_vs_lottery(s, x, y) <= margin_lottery_vs_lottery(s, x, z) + margin_lottery_vs_lottery(s, z, y));
  }
}

TEST_CASE("restriction keeps relative order and weights", "[election]") {
  const auto e = Election::from_names({"a", "b", "c"}, {{{"c", "a", "b"}, 2}, {{"b", "c", "a"}, 1}});
  const std::vector<Candidate> keep{0, 2};
  const auto r = e.restricted_to(keep);
  REQUIRE(r.num_candidates() == 2);
  CHECK(r.name(1) == "c");
  CHECK(margin_matrix(r)(1, 0) == 1);
  CHECK(r.total_weight() == 3);
}

TEST_CASE("float lotteries convert exactly", "[election]") {
  LotteryF f{{0.1, 0.2, 0.7}};
  const auto x = to_exact(f);
  Rational sum = 0;
  for (const auto& w : x.weights) sum += w;
  CHECK(sum == 1);
  CHECK(std::abs(x.weights[2].get_d() - 0.7) < 1e-15);
  CHECK_THROWS_AS(validate_lottery(Lottery{{q(1, 2), q(1, 3)}}, 2), std::invalid_argument);
  CHECK_NOTHROW(validate_lottery(Lottery{{q(1, 2), q(1, 2)}}, 2));
}
