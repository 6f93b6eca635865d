#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "mdist/generators.hpp"
#include "mdist/io.hpp"
#include "mdist/sweep.hpp"
#include "test_support.hpp"

using namespace mdist;
using mdist::testing::cycle3;
using mdist::testing::random_election;
using mdist::testing::random_lottery;

namespace {

Rational q(long n, long d) { return make_rational(n, d); }

bool same_election(const Election& a, const Election& b) {
  if (a.num_candidates() != b.num_candidates() || a.num_ballots() != b.num_ballots()) return false;
  for (Candidate c = 0; c < a.num_candidates(); ++c) {
    if (a.name(c) != b.name(c)) return false;
  }
  for (std::size_t v = 0; v < a.num_ballots(); ++v) {
    if (a.ballot(v).ranking != b.ballot(v).ranking || a.ballot(v).weight != b.ballot(v).weight) return false;
  }
  return true;
}

Json without_timestamp(Json j) {
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_CASE("rational JSON", "[io]") {
  CHECK(to_json(q(2, 3)).dump() == R"({"num":2,"den":3})");
  CHECK(rational_from_json(Json::parse(R"({"num":-4,"den":6})")) == q(-2, 3));
  CHECK(rational_from_json(Json(5)) == 5);
  CHECK(rational_from_json(Json("7/21")) == q(1, 3));
  const Rational big = make_rational(Integer("123456789012345678901234567890"), Integer(7));
  CHECK(rational_from_json(to_json(big)) == big);
  CHECK(to_json(big)["num"].is_string());
  CHECK_THROWS_AS(rational_from_json(Json::parse(R"({"num":1,"den":0})")), FormatError);
  CHECK_THROWS_AS(rational_from_json(Json::parse(R"({"num":1})")), FormatError);

  CHECK(parse_rational("3/5") == q(3, 5));
  CHECK(parse_rational("0.6") == q(3, 5));
  CHECK(parse_rational("2") == 2);
  CHECK(parse_rational("0.125") == q(1, 8));
  CHECK_THROWS_AS(parse_rational("0.x"), FormatError);
}

TEST_CASE("election JSON", "[io]") {
  const auto text = R"({"candidates": ["a","b","c"], "voters": [{"ranking": ["a","b","c"], "weight": 2}, {"ranking": ["c","b","a"]}]})";
  const auto e = election_from_json(Json::parse(text));
  CHECK(e.num_ballots() == 2);
  CHECK(e.ballot(0).weight == 2);
  CHECK(e.ballot(1).weight == 1);
  CHECK(same_election(election_from_json(to_json(e)), e));

  CHECK_THROWS_AS(election_from_json(Json::parse(R"({"candidates": ["a"]})")), FormatError);
  CHECK_THROWS_AS(election_from_json(Json::parse(R"({"candidates": ["a","b"], "voters": [{"ranking": ["a","a"]}]})")),
                  std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = random_election(rng, 1 + rng() % 8, 1 + rng() % 7, 5);
    REQUIRE(same_election(election_from_json(Json::parse(to_json(r).dump())), r));
  }
}

TEST_CASE("lottery JSON", "[io]") {
  const auto e = cycle3();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_lottery(rng, 3, 40);
    REQUIRE(lottery_from_json(e, Json::parse(to_json(e, d).dump())).weights == d.weights);
    const auto f = to_float(d);
    REQUIRE(lottery_f_from_json(e, Json::parse(to_json(e, f).dump())).weights == f.weights);
  }
  // Names may come in any order, and wrapped reports are unwrapped.
  const auto j = Json::parse(R"({"lottery": {"candidates": ["c","a","b"], "weights": [{"num":1,"den":2}, 0, "1/2"]}})");
  CHECK(lottery_from_json(e, j).weights == std::vector<Rational>{0, q(1, 2), q(1, 2)});
  CHECK_THROWS_AS(lottery_from_json(e, Json::parse(R"({"weights": [1, 0]})")), FormatError);
  CHECK_THROWS_AS(lottery_from_json(e, Json::parse(R"({"weights": [1, 1, 0]})")), std::invalid_argument);
}

TEST_CASE("report JSON", "[io]") {
  const auto e = testing::split2();
  const auto r = lp_distortion(e, point_mass(2, 1));
  const auto j = to_json(e, r);
  CHECK(rational_from_json(j["value"]) == 3);
  CHECK(j["reference_candidate"] == "a");
  CHECK(j["witness_metric"]["a"].size() == 2);

  const auto spec = BiasedMetricSpec<Rational>{{0, q(1, 2)}, 0};
  CHECK(biased_spec_from_json(e, to_json(e, spec)).x == spec.x);
  CHECK(biased_spec_from_json(e, Json::parse(R"({"x": {"a": 0, "b": 0.5}, "i_star": "a"})")).x == spec.x);
  CHECK_THROWS_AS(biased_spec_from_json(e, Json::parse(R"({"x": {"a": 1}, "i_star": "a"})")), std::invalid_argument);

  const auto cert = check_repapx(cycle3(), uniform_lottery(3), uniform_lottery(3), 1, 0.2);
  const auto cj = to_json(cycle3(), cert);
  CHECK(cj["valid"] == true);
  CHECK(rational_from_json(cj["achieved_exact"]) == q(1, 2));

  const auto rep = to_json(appendix_b_checks(7, 9));
  CHECK(rep["all_ok"] == true);
  CHECK(rep["rows"].size() == 3);
}

TEST_CASE("generators", "[io]") {
  const auto cyc = generate_election("cycle-family", 3, 3, 0);
  CHECK(same_election(cyc, cycle3()));

  const auto split = single_peaked_from_positions({0.0, 1.0}, {0.0, 1.0});
  CHECK(same_election(split, testing::split2()));
  // Equidistant voter: ties go to the earlier candidate.
  CHECK(single_peaked_from_positions({0.0, 1.0}, {0.5}).ballot(0).ranking == std::vector<Candidate>{0, 1});

  for (const auto& family : generator_families()) {
    const auto a = generate_election(family, 5, 4, 17);
    const auto b = generate_election(family, 5, 4, 17);
    CHECK(same_election(a, b));
    CHECK(a.num_ballots() == 5);
    CHECK(a.num_candidates() == 4);
  }
  CHECK_FALSE(same_election(generate_election("uniform-random", 6, 5, 1), generate_election("uniform-random", 6, 5, 2)));
  CHECK_THROWS_AS(generate_election("nope", 3, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_election("uniform-random", 0, 3, 0), std::invalid_argument);

  // Reversal pairs tie every pairwise margin.
  const auto tie = near_tie_election(6, 5, 4);
  const auto s = margin_matrix(tie);
  for (Candidate i = 0; i < 5; ++i) {
    for (Candidate j = 0; j < 5; ++j) CHECK(s(i, j) == q(1, 2));
  }
}

TEST_CASE("single-peaked profiles have a Condorcet winner for odd n", "[io][property]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto e = single_peaked_line_election(5, 4, seed);
    const auto s = margin_matrix(e);
    bool found = false;
    for (Candidate w = 0; w < 4 && !found; ++w) {
      bool beats = true;
      for (Candidate c = 0; c < 4; ++c) beats = beats && (c == w || s(w, c) > q(1, 2));
      found = beats;
    }
    REQUIRE(found);
  }
}

TEST_CASE("sweeps", "[io]") {
  SECTION("maximal lotteries stay below 3") {
    SweepConfig cfg;
    cfg.n_min = cfg.n_max = 5;
    cfg.m_min = cfg.m_max = 4;
    cfg.trials = 100;
    cfg.seed = 11;
    const auto r = run_sweep(cfg);
    REQUIRE(r.aggregates.size() == 1);
    CHECK(r.aggregates[0].trials == 100);
    CHECK(r.aggregates[0].failures == 0);
    CHECK(r.aggregates[0].max_distortion <= 3 + 1e-9);
    CHECK(r.violations == 0);
  }
  SECTION("support point masses stay below 4 + sqrt 17") {
    SweepConfig cfg;
    cfg.rule = "ml-support-point-mass";
    cfg.trials = 40;
    cfg.seed = 3;
    const auto r = run_sweep(cfg);
    for (const auto& a : r.aggregates) CHECK(a.max_distortion <= 8.1232);
    CHECK(r.violations == 0);
  }
  SECTION("reruns are identical regardless of threads") {
    SweepConfig cfg;
    cfg.trials = 12;
    cfg.seed = 99;
    cfg.generator = "near-tie";
    const auto a = sweep_json(run_sweep(cfg));
    cfg.jobs = 3;
    const auto b = sweep_json(run_sweep(cfg));
    CHECK(without_timestamp(a).dump() == without_timestamp(b).dump());
    CHECK(a.contains("timestamp"));
    CHECK_FALSE(a["rows"][0].contains("runtime_ms"));
  }
  SECTION("csv") {
    SweepConfig cfg;
    cfg.trials = 3;
    const auto csv = sweep_csv(run_sweep(cfg));
    CHECK(csv.rfind("trial,n,m,seed,rule,distortion,method,runtime_ms", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }
  SECTION("per-trial failures are recorded") {
    const auto dir = std::filesystem::temp_directory_path() / "mdist_io_test";
    std::filesystem::create_directories(dir);
    const auto good = (dir / "good.json").string(), bad = (dir / "bad.json").string();
    write_text_file(good, to_json(cycle3()).dump());
    write_text_file(bad, "{\"candidates\": [\"a\"], \"voters\": []}");
    SweepConfig cfg;
    cfg.generator = "file-corpus";
    cfg.corpus = {good, bad};
    const auto r = run_sweep(cfg);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].status == "ok");
    CHECK(r.rows[1].status.rfind("error", 0) == 0);
    std::filesystem::remove_all(dir);
  }
  SECTION("config checks") {
    SweepConfig cfg;
    cfg.trials = 0;
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg.trials = 1;
    cfg.rule = "bogus";
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg.rule = "uniform";
    cfg.n_min = 4;
    cfg.n_max = 3;
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  }
}
