#pragma once

// JSON (de)serialization for elections, rationals, lotteries, certificates and
// reports. Rationals are {"num": int, "den": int}; integers outside int64 are
// written as decimal strings.

#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdist/composite.hpp"
#include "mdist/distortion.hpp"
#include "mdist/election.hpp"
#include "mdist/lotteries.hpp"
#include "mdist/quasi_kernel.hpp"
#include "mdist/repapx.hpp"

namespace mdist {

using Json = nlohmann::ordered_json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalars

inline Json integer_to_json(const Integer& z) {
  if (z.fits_slong_p()) return Json(z.get_si());
  return Json(z.get_str());
}

inline Integer integer_from_json(const Json& j) {
  if (j.is_number_integer()) return Integer(j.get<long>());
  if (j.is_string()) {
    Integer z;
    if (z.set_str(j.get<std::string>(), 10) != 0) throw FormatError("bad integer string: " + j.get<std::string>());
    return z;
  }
  throw FormatError("expected an integer");
}

inline Json to_json(const Rational& q) {
  return Json{{"num", integer_to_json(q.get_num())}, {"den", integer_to_json(q.get_den())}};
}

// Accepts {"num","den"}, an integer, or a "p/q" string.
inline Rational rational_from_json(const Json& j) {
  if (j.is_object()) {
    if (!j.contains("num") || !j.contains("den")) throw FormatError("rational needs num and den");
    const Integer den = integer_from_json(j.at("den"));
    if (den == 0) throw FormatError("rational with zero denominator");
    return make_rational(integer_from_json(j.at("num")), den);
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_string()) {
    Rational q;
    if (q.set_str(j.get<std::string>(), 10) != 0) throw FormatError("bad rational string: " + j.get<std::string>());
    q.canonicalize();
    return q;
  }
  throw FormatError("expected a rational");
}

// Rational from "3/5", "0.6" (decimal, exact) or "2".
inline Rational parse_rational(const std::string& text) {
  const auto dot = text.find('.');
  if (dot == std::string::npos) return rational_from_json(Json(text));
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  if (digits.empty() || digits.find_first_not_of("+-0123456789") != std::string::npos) {
    throw FormatError("bad decimal: " + text);
  }
  Integer num;
  if (num.set_str(digits, 10) != 0) throw FormatError("bad decimal: " + text);
  Integer den = 1;
  for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
  return make_rational(num, den);
}

// ---------------------------------------------------------------------------
// Elections

inline Json to_json(const Election& e) {
  Json voters = Json::array();
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    Json ranking = Json::array();
    for (Candidate c : e.ballot(v).ranking) ranking.push_back(e.name(c));
    voters.push_back(Json{{"ranking", ranking}, {"weight", e.ballot(v).weight}});
  }
  Json names = Json::array();
  for (Candidate c = 0; c < e.num_candidates(); ++c) names.push_back(e.name(c));
  return Json{{"candidates", names}, {"voters", voters}};
}

inline Election election_from_json(const Json& j) {
  try {
    std::vector<std::string> names = j.at("candidates").get<std::vector<std::string>>();
    std::vector<std::pair<std::vector<std::string>, std::uint64_t>> voters;
    for (const auto& v : j.at("voters")) {
      const std::uint64_t w = v.contains("weight") ? v.at("weight").get<std::uint64_t>() : 1;
      voters.emplace_back(v.at("ranking").get<std::vector<std::string>>(), w);
    }
    return Election::from_names(std::move(names), voters);
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed election JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Lotteries: exact weights under "weights", floats under "weights_f".

inline Json to_json(const Election& e, const Lottery& d) {
  Json w = Json::array();
  for (const auto& x : d.weights) w.push_back(to_json(x));
  Json names = Json::array();
  for (Candidate c = 0; c < e.num_candidates(); ++c) names.push_back(e.name(c));
  return Json{{"candidates", names}, {"weights", w}};
}

inline Json to_json(const Election& e, const LotteryF& d) {
  Json names = Json::array();
  for (Candidate c = 0; c < e.num_candidates(); ++c) names.push_back(e.name(c));
  return Json{{"candidates", names}, {"weights_f", d.weights}};
}

namespace detail {

// Maps the lottery's candidate list onto the election's order.
inline std::vector<Candidate> lottery_order(const Election& e, const Json& j, std::size_t count) {
  std::vector<Candidate> order(count);
  if (j.contains("candidates")) {
    const auto names = j.at("candidates").get<std::vector<std::string>>();
    if (names.size() != count) throw FormatError("lottery candidate list and weights differ in length");
    for (std::size_t i = 0; i < count; ++i) order[i] = e.index_of(names[i]);
  } else {
    for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<Candidate>(i);
  }
  if (count != e.num_candidates()) throw FormatError("lottery does not cover every candidate");
  return order;
}

}  // namespace detail

// Reports that wrap a lottery ({"lottery": {...}}) are accepted too.
inline const Json& unwrap_lottery(const Json& j) {
  if (!j.contains("weights") && !j.contains("weights_f") && j.contains("lottery")) return j.at("lottery");
  return j;
}

inline LotteryF lottery_f_from_json(const Election& e, const Json& wrapped);

inline Lottery lottery_from_json(const Election& e, const Json& wrapped) {
  const Json& j = unwrap_lottery(wrapped);
  if (!j.contains("weights")) return to_exact(lottery_f_from_json(e, j));
  const auto& w = j.at("weights");
  const auto order = detail::lottery_order(e, j, w.size());
  Lottery d{std::vector<Rational>(e.num_candidates())};
  for (std::size_t i = 0; i < w.size(); ++i) d.weights[order[i]] = rational_from_json(w[i]);
  validate_lottery(d, e.num_candidates());
  return d;
}

inline LotteryF lottery_f_from_json(const Election& e, const Json& wrapped) {
  const Json& j = unwrap_lottery(wrapped);
  if (j.contains("weights")) return to_float(lottery_from_json(e, j));
  const auto w = j.at("weights_f").get<std::vector<double>>();
  const auto order = detail::lottery_order(e, j, w.size());
  LotteryF d{std::vector<double>(e.num_candidates())};
  for (std::size_t i = 0; i < w.size(); ++i) d.weights[order[i]] = w[i];
  validate_lottery(d, e.num_candidates());
  return d;
}

// ---------------------------------------------------------------------------
// Certificates and reports

inline Json to_json(const Election& e, const RepApxCertificate& c) {
  return Json{{"distribution", to_json(e, c.distribution)},
              {"base", to_json(e, c.base)},
              {"epsilon", c.epsilon},
              {"k", c.k},
              {"achieved", c.achieved},
              {"achieved_exact", to_json(c.achieved_exact)},
              {"worst_candidate", e.name(c.worst_candidate)},
              {"support_ok", c.support_ok},
              {"valid", c.valid},
              {"attempts", c.attempts},
              {"q", c.q}};
}

inline Json to_json(const Election& e, const StableLotteryPair& p) {
  return Json{{"k", p.k},
              {"attacker", to_json(e, p.attacker)},
              {"defender", to_json(e, p.defender)},
              {"achieved_value", p.achieved_value},
              {"exact_value", to_json(p.exact_value)}};
}

inline Json to_json(const ThresholdDigraph& g) {
  Json edges = Json::array();
  for (Candidate a = 0; a < g.m; ++a) {
    for (Candidate b = 0; b < g.m; ++b) {
      if (g.edge(a, b)) edges.push_back(Json{{"from", g.names[a]}, {"to", g.names[b]}, {"s", to_json(g.weight[a][b])}});
    }
  }
  return Json{{"theta", to_json(g.theta)}, {"edges", edges}};
}

inline Json to_json(const Election& e, const PrunedLotteryResult& r) {
  Json pruned = Json::array();
  for (Candidate c : r.pruned) pruned.push_back(e.name(c));
  return Json{{"pruned", pruned},
              {"graph", to_json(r.graph)},
              {"lottery", to_json(e, r.lottery)},
              {"certificate", to_json(r.restricted, r.cert)}};
}

template <Scalar T>
Json scalar_to_json(const T& x) {
  if constexpr (ScalarTraits<T>::exact) {
    return to_json(x);
  } else {
    return Json(x);
  }
}

template <Scalar T>
Json to_json(const Election& e, const DistortionReport<T>& r) {
  Json out{{"method", r.method}, {"exact", ScalarTraits<T>::exact}, {"infinite", r.infinite}};
  out["value"] = r.infinite ? Json(nullptr) : scalar_to_json(r.value);
  if constexpr (ScalarTraits<T>::exact) {
    if (!r.infinite) out["value_f"] = r.value.get_d();
  }
  out["reference_candidate"] = e.name(r.reference_candidate);
  Json per = Json::object();
  for (Candidate c = 0; c < r.per_reference.size(); ++c) {
    per[e.name(c)] = r.per_reference[c] ? scalar_to_json(*r.per_reference[c]) : Json(nullptr);
  }
  out["per_reference"] = per;
  Json table = Json::object();
  for (Candidate c = 0; c < r.witness_metric.size(); ++c) {
    Json row = Json::array();
    for (const auto& x : r.witness_metric[c]) row.push_back(scalar_to_json(x));
    table[e.name(c)] = row;
  }
  out["witness_metric"] = table;
  return out;
}

// {"x": {"a": 0, "b": {"num":1,"den":2}}, "i_star": "a"}; values may also be
// plain JSON numbers.
inline BiasedMetricSpec<Rational> biased_spec_from_json(const Election& e, const Json& j) {
  BiasedMetricSpec<Rational> spec{std::vector<Rational>(e.num_candidates(), 0), e.index_of(j.at("i_star").get<std::string>())};
  for (const auto& [name, value] : j.at("x").items()) {
    spec.x[e.index_of(name)] = value.is_number_float() ? exact_from_double(value.get<double>()) : rational_from_json(value);
  }
  spec.validate(e.num_candidates());
  return spec;
}

inline Json to_json(const Election& e, const BiasedMetricSpec<Rational>& spec) {
  Json x = Json::object();
  for (Candidate c = 0; c < e.num_candidates(); ++c) x[e.name(c)] = to_json(spec.x[c]);
  return Json{{"x", x}, {"i_star", e.name(spec.i_star)}};
}

inline Json to_json(const MixParams& p) {
  return Json{{"k", p.k},         {"L", p.L},       {"alpha", p.alpha}, {"beta_tilde", p.beta_tilde},
              {"eps1", p.eps1},   {"eps2", p.eps2}, {"mu", p.mu},       {"theta", p.theta()}};
}

inline Json to_json(const Election& e, const MixResult& r) {
  Json out{{"params", to_json(r.params)},
           {"mode", r.mode == MixMode::practical ? "practical" : "paper-exact"},
           {"eps1_used", r.eps1_used},
           {"eps2_used", r.eps2_used},
           {"mu_used", to_json(r.mu_used)},
           {"theta_used", to_json(r.theta_used)},
           {"q_ml", r.q_ml},
           {"q_pruned", r.q_pruned}};
  if (r.lottery) {
    out["lottery"] = to_json(e, *r.lottery);
    out["ml_component"] = to_json(e, *r.ml_component);
    out["pruned_component"] = to_json(e, *r.pruned_component);
    const auto flat = flatten_mixture(r);
    out["roster_size"] = flat.roster.total();
    out["roster_counts"] = flat.roster.counts;
  }
  return out;
}

inline Json to_json(const MixingCheckReport& rep) {
  Json rows = Json::array();
  auto ld = [](long double x) { return static_cast<double>(x); };
  for (const auto& r : rep.rows) {
    rows.push_back(Json{{"k", r.k},
                        {"L", ld(r.L)},
                        {"lambda", ld(r.lambda)},
                        {"one_plus_2lambda", ld(r.lambda_lhs)},
                        {"lambda_rhs", ld(r.lambda_rhs)},
                        {"claim1_lhs", ld(r.claim1_lhs)},
                        {"claim2_lhs", ld(r.claim2_lhs)},
                        {"claim2_rhs", ld(r.claim2_rhs)},
                        {"cond1_lhs", ld(r.cond1_lhs)},
                        {"cond2_lhs", ld(r.cond2_lhs)},
                        {"cond1_margin", ld(3 - r.cond1_lhs)},
                        {"cond2_margin", ld(3 - r.cond2_lhs)},
                        {"ok", r.ok()}});
  }
  return Json{{"all_ok", rep.all_ok},
              {"min_margins",
               {{"lambda", ld(rep.min_lambda_margin)},
                {"claim1", ld(rep.min_claim1_margin)},
                {"claim2", ld(rep.min_claim2_margin)},
                {"cond1", ld(rep.min_cond1_margin)},
                {"cond2", ld(rep.min_cond2_margin)}}},
              {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(path + ": " + ex.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

inline Election read_election(const std::string& path) { return election_from_json(read_json_file(path)); }

}  // namespace mdist
