#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mdist/quasi_kernel.hpp"
#include "test_support.hpp"

using namespace mdist;
using mdist::testing::cycle3;
using mdist::testing::lambda_grid_feasible;
using mdist::testing::random_election;

namespace {

Rational q(long n, long d) { return make_rational(n, d); }

ThresholdDigraph digraph(std::size_t m, std::initializer_list<std::pair<Candidate, Candidate>> edges) {
  ThresholdDigraph g;
  g.m = m;
  g.theta = q(3, 5);
  g.adj.assign(m, std::vector<bool>(m, false));
  g.weight.assign(m, std::vector<Rational>(m, q(1, 2)));
  g.names = testing::letters(m);
  for (auto [a, b] : edges) g.adj[a][b] = true;
  return g;
}

}  // namespace

TEST_CASE("threshold digraph", "[quasi_kernel]") {
  const auto e = cycle3();
  const auto g = build_threshold_digraph(e, q(3, 5));
  CHECK(g.num_edges() == 3);
  CHECK(g.edge(0, 1));
  CHECK(g.edge(1, 2));
  CHECK(g.edge(2, 0));
  CHECK(g.edge_list() == "a -> b  s=2/3\nb -> c  s=2/3\nc -> a  s=2/3\n");
  CHECK(build_threshold_digraph(e, 1).num_edges() == 0);

  const auto two = Election::from_names({"a", "b"}, {{{"a", "b"}, 2}, {{"b", "a"}, 1}});
  const auto g2 = build_threshold_digraph(two, q(3, 5));
  CHECK(g2.num_edges() == 1);
  CHECK(g2.edge(0, 1));

  CHECK_THROWS_AS(build_threshold_digraph(e, q(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(build_threshold_digraph(e, q(11, 10)), std::invalid_argument);
}

TEST_CASE("quasi-kernel construction and verification", "[quasi_kernel]") {
  const auto path = digraph(3, {{0, 1}, {1, 2}});
  CHECK(verify_quasi_kernel(path, {0}));
  CHECK(verify_quasi_kernel(path, {0, 2}));
  CHECK_FALSE(verify_quasi_kernel(path, {2}));
  CHECK_FALSE(verify_quasi_kernel(path, {0, 1}));
  CHECK(verify_quasi_kernel(path, quasi_kernel(path)));

  CHECK(quasi_kernel(digraph(4, {})) == std::vector<Candidate>{0, 1, 2, 3});

  const auto tri = digraph(3, {{0, 1}, {1, 2}, {2, 0}});
  const auto k = quasi_kernel(tri);
  CHECK(k.size() == 1);
  CHECK(verify_quasi_kernel(tri, k));
}

TEST_CASE("theta regularity", "[quasi_kernel]") {
  CHECK(is_theta_regular(cycle3(), q(7, 10)));
  CHECK_FALSE(is_theta_regular(cycle3(), q(2, 3)));
  CHECK(is_theta_regular(Election::from_names({"a"}, {{{"a"}, 1}}), q(3, 5)));
}

TEST_CASE("lambda bound", "[quasi_kernel]") {
  CHECK(std::abs(lambda_bound(0.6, 7, 1.0 / 7) - 1.3368) < 1e-4);
  CHECK(lambda_bound(0.6, 7, 0) == Catch::Approx(1.5 * std::pow(1 / (0.6 * 8), 1.0 / 7)).epsilon(1e-15));
  double prev = 0;
  for (double eps = 0; eps <= 2.0 / 9 - 1.0 / 10; eps += 0.01) {
    const double l = lambda_bound(0.7, 9, eps);
    CHECK(l >= prev);
    prev = l;
  }
  CHECK_THROWS_AS(lambda_bound(0.5, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(lambda_bound(1.0, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(lambda_bound(0.6, 6, 0), std::invalid_argument);
  CHECK_THROWS_AS(lambda_bound(0.6, 7, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(lambda_bound(0.6, 7, -0.1), std::invalid_argument);
}

TEST_CASE("lambda bound is the smallest feasible lambda on a grid", "[quasi_kernel][property]") {
  std::mt19937_64 rng(1729);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = 0.5 + 0.499 * unit(rng) + 1e-4;
    const unsigned k = 7 + static_cast<unsigned>(rng() % 40);
    const double eps = unit(rng) * (2.0 / k - 1.0 / (k + 1));
    const double l = lambda_bound(theta, k, eps);
    REQUIRE(lambda_grid_feasible(l, theta, k, eps));
    REQUIRE_FALSE(lambda_grid_feasible(l * (1 - 1e-3), theta, k, eps));
  }
}

TEST_CASE("quasi-kernels of random threshold digraphs", "[quasi_kernel][property]") {
  std::mt19937_64 rng(8128);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    const auto e = random_election(rng, 1 + rng() % 9, m);
    const Rational theta = q(11 + static_cast<long>(rng() % 9), 20);
    const auto g = build_threshold_digraph(e, theta);
    const auto k = quasi_kernel(g);
    REQUIRE(verify_quasi_kernel(g, k));
    REQUIRE(is_theta_regular(e.restricted_to(k), theta));

    // Every reference r is in S, beaten by a member, or two steps away.
    const auto s = margin_matrix(e);
    for (Candidate r = 0; r < m; ++r) {
      bool ok = std::find(k.begin(), k.end(), r) != k.end();
      for (Candidate j : k) {
        ok = ok || s(j, r) >= theta;
        for (Candidate c = 0; c < m && !ok; ++c) {
          ok = std::find(k.begin(), k.end(), c) == k.end() && s(c, r) >= theta && s(j, c) >= theta;
        }
      }
      REQUIRE(ok);
    }
  }
}

TEST_CASE("stable lotteries keep mass off dominated sets", "[quasi_kernel][property]") {
  std::mt19937_64 rng(5050);
  const double tol = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 3 + rng() % 4;
    const auto e = random_election(rng, 3 + rng() % 5, m);
    const unsigned k = 1 + static_cast<unsigned>(rng() % 3);
    const auto d = stable_k_lottery(e, k).attacker;
    for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
      std::vector<Candidate> set;
      double p = 0;
      for (Candidate c = 0; c < m; ++c) {
        if ((mask >> c) & 1u) {
          set.push_back(c);
          p += d.weights[c].get_d();
        }
      }
      if (p <= 0) continue;
      for (Candidate i = 0; i < m; ++i) {
        if ((mask >> i) & 1u) continue;
        const double lhs = margin_candidate_vs_set(e, i, set).get_d();
        REQUIRE(lhs <= (1.0 / (k + 1) + tol) * std::pow(p, -static_cast<double>(k)) + 1e-12);
      }
    }
  }
}

TEST_CASE("RepApx pruned lotteries", "[quasi_kernel]") {
  SECTION("strong winner survives alone") {
    const auto e = Election::from_names({"a", "b", "c"}, {{{"a", "b", "c"}, 3}, {{"a", "c", "b"}, 1}});
    const auto r = repapx_pruned_lottery(e, 0.3, 7, q(3, 5));
    CHECK(r.pruned == std::vector<Candidate>{0});
    CHECK(verify_quasi_kernel(r.graph, r.pruned));
    CHECK(r.lottery.weights[0] == 1);
    CHECK(r.cert.valid);
  }
  SECTION("theta-regular profile keeps everyone") {
    const auto r = repapx_pruned_lottery(cycle3(), 0.3, 7, q(7, 10));
    CHECK(r.pruned.size() == 3);
    CHECK(r.cert.valid);
  }
  SECTION("cycle at theta = 0.6 prunes to one vertex") {
    const auto r = repapx_pruned_lottery(cycle3(), 0.3, 7, q(3, 5));
    REQUIRE(r.pruned.size() == 1);
    CHECK(r.lottery.weights[r.pruned[0]] == 1);
  }
  CHECK_THROWS_AS(repapx_pruned_lottery(cycle3(), 0, 7, q(3, 5)), std::invalid_argument);
}
