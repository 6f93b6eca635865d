#pragma once

// Election data model, exact pairwise margins and the multiset / lottery
// comparison probabilities built on them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mdist/rational.hpp"

namespace mdist {

using Candidate = std::size_t;

struct Ballot {
  std::vector<Candidate> ranking;  // most preferred first
  std::uint64_t weight = 1;
};

class Election {
 public:
  Election(std::vector<std::string> candidates, std::vector<Ballot> ballots)
      : names_(std::move(candidates)), ballots_(std::move(ballots)) {
    const std::size_t m = names_.size();
    if (m == 0) throw std::invalid_argument("election needs at least one candidate");
    for (std::size_t c = 0; c < m; ++c) {
      auto [it, inserted] = index_.emplace(names_[c], c);
      if (!inserted) throw std::invalid_argument("duplicate candidate identifier: " + names_[c]);
    }
    if (ballots_.empty()) throw std::invalid_argument("election needs at least one voter");
    position_.assign(ballots_.size() * m, 0);
    for (std::size_t v = 0; v < ballots_.size(); ++v) {
      const Ballot& b = ballots_[v];
      if (b.weight == 0) throw std::invalid_argument("voter weight must be positive");
      if (b.ranking.size() != m) {
        throw std::invalid_argument("ranking of voter " + std::to_string(v) +
                                    " is not a strict total order over all candidates");
      }
      std::vector<bool> seen(m, false);
      for (std::size_t pos = 0; pos < m; ++pos) {
        const Candidate c = b.ranking[pos];
        if (c >= m || seen[c]) {
          throw std::invalid_argument("ranking of voter " + std::to_string(v) +
                                      " repeats or misses a candidate");
        }
        seen[c] = true;
        position_[v * m + c] = pos;
      }
      total_weight_ += b.weight;
    }
  }

  static Election from_names(std::vector<std::string> candidates,
                             const std::vector<std::pair<std::vector<std::string>, std::uint64_t>>& voters) {
    std::unordered_map<std::string, Candidate> idx;
    for (std::size_t c = 0; c < candidates.size(); ++c) idx.emplace(candidates[c], c);
    std::vector<Ballot> ballots;
    ballots.reserve(voters.size());
    for (const auto& [names, weight] : voters) {
      Ballot b;
      b.weight = weight;
      for (const auto& n : names) {
        auto it = idx.find(n);
        if (it == idx.end()) throw std::invalid_argument("unknown candidate identifier: " + n);
        b.ranking.push_back(it->second);
      }
      ballots.push_back(std::move(b));
    }
    return Election(std::move(candidates), std::move(ballots));
  }

  std::size_t num_candidates() const { return names_.size(); }
  std::size_t num_ballots() const { return ballots_.size(); }
  // n: total voter weight.
  std::uint64_t total_weight() const { return total_weight_; }

  const std::vector<std::string>& candidate_names() const { return names_; }
  const std::string& name(Candidate c) const { return names_.at(c); }
  const std::vector<Ballot>& ballots() const { return ballots_; }
  const Ballot& ballot(std::size_t v) const { return ballots_.at(v); }

  Candidate index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown candidate identifier: " + name);
    return it->second;
  }

  void check_candidate(Candidate c) const {
    if (c >= names_.size()) throw std::invalid_argument("unknown candidate index " + std::to_string(c));
  }

  // 0 = top of voter v's ranking.
  std::size_t position(std::size_t v, Candidate c) const { return position_[v * names_.size() + c]; }
  bool prefers(std::size_t v, Candidate a, Candidate b) const { return position(v, a) < position(v, b); }

  // Profile induced on `keep` (in the given order); voters keep their weights.
  Election restricted_to(std::span<const Candidate> keep) const {
    std::vector<std::size_t> new_index(names_.size(), names_.size());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      check_candidate(keep[i]);
      if (new_index[keep[i]] != names_.size()) throw std::invalid_argument("duplicate candidate in restriction");
      new_index[keep[i]] = i;
      names.push_back(names_[keep[i]]);
    }
    std::vector<Ballot> ballots;
    ballots.reserve(ballots_.size());
    for (const Ballot& b : ballots_) {
      Ballot nb;
      nb.weight = b.weight;
      for (Candidate c : b.ranking) {
        if (new_index[c] != names_.size()) nb.ranking.push_back(new_index[c]);
      }
      ballots.push_back(std::move(nb));
    }
    return Election(std::move(names), std::move(ballots));
  }

 private:
  std::vector<std::string> names_;
  std::vector<Ballot> ballots_;
  std::unordered_map<std::string, Candidate> index_;
  std::vector<std::size_t> position_;
  std::uint64_t total_weight_ = 0;
};

// Entry (i, j) is s_{i>j}: the weighted fraction of voters ranking i above j.
// The diagonal is fixed at 1/2.
class MarginMatrix {
 public:
  MarginMatrix() = default;
  explicit MarginMatrix(std::size_t m) : m_(m), entries_(m * m) {}

  std::size_t size() const { return m_; }
  const Rational& operator()(Candidate i, Candidate j) const { return entries_[i * m_ + j]; }
  Rational& operator()(Candidate i, Candidate j) { return entries_[i * m_ + j]; }

  template <Scalar T>
  std::vector<T> as() const {
    std::vector<T> out;
    out.reserve(entries_.size());
    for (const auto& q : entries_) out.push_back(scalar_cast<T>(q));
    return out;
  }

 private:
  std::size_t m_ = 0;
  std::vector<Rational> entries_;
};

inline MarginMatrix margin_matrix(const Election& e) {
  const std::size_t m = e.num_candidates();
  std::vector<std::uint64_t> counts(m * m, 0);
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    const Ballot& b = e.ballot(v);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) counts[b.ranking[p] * m + b.ranking[q]] += b.weight;
    }
  }
  MarginMatrix s(m);
  const Integer n(static_cast<unsigned long>(e.total_weight()));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      s(i, j) = (i == j) ? make_rational(1, 2)
                         : make_rational(Integer(static_cast<unsigned long>(counts[i * m + j])), n);
    }
  }
  return s;
}

// s_{I>j}: fraction of voters preferring every member of I to j (0 if j in I).
inline Rational margin_set_vs_candidate(const Election& e, std::span<const Candidate> set, Candidate j) {
  e.check_candidate(j);
  for (Candidate i : set) e.check_candidate(i);
  if (std::find(set.begin(), set.end(), j) != set.end()) return 0;
  std::uint64_t count = 0;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    bool all = true;
    for (Candidate i : set) {
      if (!e.prefers(v, i, j)) {
        all = false;
        break;
      }
    }
    if (all) count += e.ballot(v).weight;
  }
  return make_rational(Integer(static_cast<unsigned long>(count)),
                       Integer(static_cast<unsigned long>(e.total_weight())));
}

// s_{j>I}: fraction of voters preferring j to every member of I (0 if j in I).
inline Rational margin_candidate_vs_set(const Election& e, Candidate j, std::span<const Candidate> set) {
  e.check_candidate(j);
  for (Candidate i : set) e.check_candidate(i);
  if (std::find(set.begin(), set.end(), j) != set.end()) return 0;
  std::uint64_t count = 0;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    bool all = true;
    for (Candidate i : set) {
      if (!e.prefers(v, j, i)) {
        all = false;
        break;
      }
    }
    if (all) count += e.ballot(v).weight;
  }
  return make_rational(Integer(static_cast<unsigned long>(count)),
                       Integer(static_cast<unsigned long>(e.total_weight())));
}

// A probability distribution over the candidates of one election, indexed by
// candidate.
template <Scalar T>
struct BasicLottery {
  std::vector<T> weights;

  std::size_t size() const { return weights.size(); }
  const T& operator[](Candidate c) const { return weights[c]; }
  T& operator[](Candidate c) { return weights[c]; }

  // Float lotteries count a candidate as supported when its weight is at least
  // 1e-9; exact lotteries when it is positive.
  bool in_support(Candidate c) const {
    if constexpr (ScalarTraits<T>::exact) {
      return sgn(weights[c]) > 0;
    } else {
      return weights[c] >= kFloatSupportThreshold;
    }
  }

  std::vector<Candidate> support() const {
    std::vector<Candidate> out;
    for (Candidate c = 0; c < weights.size(); ++c) {
      if (in_support(c)) out.push_back(c);
    }
    return out;
  }

  static constexpr double kFloatSupportThreshold = 1e-9;
};

using Lottery = BasicLottery<Rational>;
using LotteryF = BasicLottery<double>;

template <Scalar T>
void validate_lottery(const BasicLottery<T>& d, std::size_t m) {
  if (d.size() != m) throw std::invalid_argument("lottery size does not match the number of candidates");
  T sum = 0;
  for (const T& w : d.weights) {
    if (w < 0) throw std::invalid_argument("lottery weights must be nonnegative");
    sum += w;
  }
  if constexpr (ScalarTraits<T>::exact) {
    if (sum != 1) throw std::invalid_argument("lottery weights must sum to exactly 1");
  } else {
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("lottery weights must sum to 1");
  }
}

template <Scalar T = Rational>
BasicLottery<T> point_mass(std::size_t m, Candidate c) {
  if (c >= m) throw std::invalid_argument("point mass outside candidate range");
  BasicLottery<T> d{std::vector<T>(m, T(0))};
  d.weights[c] = 1;
  return d;
}

template <Scalar T = Rational>
BasicLottery<T> uniform_over(std::size_t m, std::span<const Candidate> members) {
  if (members.empty()) throw std::invalid_argument("uniform lottery over an empty set");
  BasicLottery<T> d{std::vector<T>(m, T(0))};
  const T share = T(1) / scalar_from_int<T>(static_cast<std::int64_t>(members.size()));
  for (Candidate c : members) {
    if (c >= m) throw std::invalid_argument("candidate outside range");
    d.weights[c] += share;
  }
  return d;
}

template <Scalar T = Rational>
BasicLottery<T> uniform_lottery(std::size_t m) {
  std::vector<Candidate> all(m);
  std::iota(all.begin(), all.end(), Candidate{0});
  return uniform_over<T>(m, all);
}

// Exact image of a float lottery: each double is taken at its exact value and
// the vector is divided by the exact sum, so the result sums to exactly 1.
inline Lottery to_exact(const LotteryF& d) {
  Lottery out{std::vector<Rational>(d.size())};
  Rational sum = 0;
  for (std::size_t c = 0; c < d.size(); ++c) {
    if (!(d.weights[c] >= 0.0)) throw std::invalid_argument("lottery weights must be nonnegative");
    out.weights[c] = exact_from_double(d.weights[c]);
    sum += out.weights[c];
  }
  if (sgn(sum) <= 0) throw std::invalid_argument("lottery has zero total mass");
  for (auto& w : out.weights) w /= sum;
  return out;
}

inline LotteryF to_float(const Lottery& d) {
  LotteryF out{std::vector<double>(d.size())};
  for (std::size_t c = 0; c < d.size(); ++c) out.weights[c] = d.weights[c].get_d();
  return out;
}

// s_{D>D'} = p_D^T S p_D'.
template <Scalar T>
T margin_lottery_vs_lottery(const MarginMatrix& s, const BasicLottery<T>& d1, const BasicLottery<T>& d2) {
  const std::size_t m = s.size();
  if (d1.size() != m || d2.size() != m) throw std::invalid_argument("lottery size mismatch");
  T total = 0;
  for (Candidate i = 0; i < m; ++i) {
    if (d1.weights[i] == 0) continue;
    T row = 0;
    for (Candidate j = 0; j < m; ++j) {
      if (d2.weights[j] == 0) continue;
      row += scalar_cast<T>(s(i, j)) * d2.weights[j];
    }
    total += d1.weights[i] * row;
  }
  return total;
}

template <Scalar T>
T margin_lottery_vs_lottery(const Election& e, const BasicLottery<T>& d1, const BasicLottery<T>& d2) {
  return margin_lottery_vs_lottery(margin_matrix(e), d1, d2);
}

// Multiset as a multiplicity vector n_A(x) indexed by candidate.
struct Multiset {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

  static Multiset of(std::size_t m, std::initializer_list<Candidate> members) {
    Multiset a{std::vector<std::uint64_t>(m, 0)};
    for (Candidate c : members) a.counts.at(c) += 1;
    return a;
  }

  // Uniform lottery over the multiset: weight = multiplicity / total, exactly.
  Lottery uniform_lottery() const {
    const std::uint64_t q = total();
    if (q == 0) throw std::invalid_argument("empty multiset");
    Lottery d{std::vector<Rational>(counts.size())};
    for (std::size_t c = 0; c < counts.size(); ++c) {
      d.weights[c] = make_rational(Integer(static_cast<unsigned long>(counts[c])),
                                   Integer(static_cast<unsigned long>(q)));
    }
    return d;
  }

  bool operator==(const Multiset&) const = default;
};

// Pr_{v~V}[A >_v B] with multiplicity-proportional tie splitting at each
// voter's favourite member of A u B.
inline Rational multiset_beats(const Election& e, const Multiset& a, const Multiset& b) {
  const std::size_t m = e.num_candidates();
  if (a.counts.size() != m || b.counts.size() != m) throw std::invalid_argument("multiset size mismatch");
  if (a.total() == 0 || b.total() == 0) throw std::invalid_argument("multisets must be nonempty");
  Rational sum = 0;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    const Ballot& bal = e.ballot(v);
    for (Candidate x : bal.ranking) {
      const std::uint64_t na = a.counts[x];
      const std::uint64_t nb = b.counts[x];
      if (na + nb == 0) continue;
      sum += make_rational(Integer(static_cast<unsigned long>(na * bal.weight)),
                           Integer(static_cast<unsigned long>(na + nb)));
      break;
    }
  }
  return sum / Integer(static_cast<unsigned long>(e.total_weight()));
}

// E_{Z~U[w, w+t]}[Z^k] = ((w+t)^{k+1} - w^{k+1}) / ((k+1) t), written as the
// division-free sum (1/(k+1)) * sum_{i=0..k} (w+t)^i w^{k-i}, which also
// covers t = 0 (value w^k).
template <Scalar T>
T interval_power_mean(const T& below, const T& at, unsigned k) {
  const T upper = below + at;
  T sum = 0;
  T up_pow = 1;
  for (unsigned i = 0; i <= k; ++i) {
    sum += up_pow * ipow<T>(below, k - i);
    up_pow *= upper;
  }
  return sum / scalar_from_int<T>(static_cast<std::int64_t>(k) + 1);
}

// Pr_{v~V}[a >_v D^k] via the per-voter closed form.
template <Scalar T>
T candidate_beats_power(const Election& e, Candidate a, const BasicLottery<T>& d, unsigned k) {
  e.check_candidate(a);
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (d.size() != e.num_candidates()) throw std::invalid_argument("lottery size mismatch");
  T sum = 0;
  for (std::size_t v = 0; v < e.num_ballots(); ++v) {
    const Ballot& b = e.ballot(v);
    T below = 0;
    for (std::size_t p = e.position(v, a) + 1; p < b.ranking.size(); ++p) below += d.weights[b.ranking[p]];
    sum += scalar_from_int<T>(static_cast<std::int64_t>(b.weight)) * interval_power_mean<T>(below, d.weights[a], k);
  }
  return sum / scalar_from_int<T>(static_cast<std::int64_t>(e.total_weight()));
}

}  // namespace mdist
