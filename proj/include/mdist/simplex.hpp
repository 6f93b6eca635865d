#pragma once

// Dense two-phase tableau simplex over an exact (mpq) or floating-point
// scalar, and zero-sum matrix games solved through it.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdist/rational.hpp"

namespace mdist {

enum class Relation { leq, eq, geq };
enum class Sense { maximize, minimize };
enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <Scalar T>
struct LinearProgram {
  struct Row {
    std::vector<T> coeffs;
    Relation rel = Relation::leq;
    T rhs = 0;
  };

  Sense sense = Sense::maximize;
  std::vector<T> objective;
  std::vector<Row> rows;
  // Per-variable bounds; nullopt means unbounded in that direction. Variables
  // default to [0, +inf).
  std::vector<std::optional<T>> lower;
  std::vector<std::optional<T>> upper;

  LinearProgram() = default;
  explicit LinearProgram(std::size_t num_vars, Sense s = Sense::maximize)
      : sense(s), objective(num_vars, T(0)), lower(num_vars, T(0)), upper(num_vars) {}

  std::size_t num_vars() const { return objective.size(); }

  void add_row(std::vector<T> coeffs, Relation rel, T rhs) {
    rows.push_back(Row{std::move(coeffs), rel, std::move(rhs)});
  }

  void set_free(std::size_t j) {
    lower.at(j).reset();
    upper.at(j).reset();
  }

  void validate() const {
    const std::size_t n = num_vars();
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("LP bound vectors have wrong length");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].coeffs.size() != n) {
        throw std::invalid_argument("LP row " + std::to_string(r) + " has " + std::to_string(rows[r].coeffs.size()) +
                                    " coefficients, expected " + std::to_string(n));
      }
    }
    if constexpr (!ScalarTraits<T>::exact) {
      auto finite = [](double x) { return std::isfinite(x); };
      for (double c : objective) {
        if (!finite(c)) throw std::invalid_argument("non-finite LP objective coefficient");
      }
      for (const auto& row : rows) {
        if (!finite(row.rhs)) throw std::invalid_argument("non-finite LP right-hand side");
        for (double c : row.coeffs) {
          if (!finite(c)) throw std::invalid_argument("non-finite LP coefficient");
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (lower[j] && upper[j] && *upper[j] < *lower[j]) throw std::invalid_argument("LP variable with empty bounds");
    }
  }
};

template <Scalar T>
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<T> values;  // empty unless optimal
  T objective = 0;
  std::size_t pivots = 0;
};

enum class PivotRule {
  bland,    // smallest-index entering/leaving throughout
  dantzig,  // largest reduced cost; falls back to Bland permanently after a
            // run of degenerate pivots, which preserves termination
};

struct LpOptions {
  PivotRule rule = PivotRule::dantzig;
  std::size_t degenerate_run_before_bland = 64;
  std::size_t max_pivots = 2'000'000;
};

namespace detail {

template <Scalar T>
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * (cols + 1), T(0)) {}

  T& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  T& rhs(std::size_t r) { return data_[r * (cols_ + 1) + cols_]; }
  const T& rhs(std::size_t r) const { return data_[r * (cols_ + 1) + cols_]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::vector<std::size_t> basis;

  // Reduced-cost row: red[j] = c_j - c_B^T B^{-1} A_j; entering needs red > 0.
  std::vector<T> red;
  T neg_obj = 0;  // -(current objective)

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = cols_ + 1;
    T* prow = &data_[pr * w];
    const T inv = T(1) / prow[pc];
    for (std::size_t c = 0; c < w; ++c) {
      if (!is_exact_zero(prow[c])) prow[c] *= inv;
    }
    prow[pc] = 1;
    nz_.clear();
    for (std::size_t c = 0; c < w; ++c) {
      if (!is_exact_zero(prow[c])) nz_.push_back(c);
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      T* row = &data_[r * w];
      if (is_exact_zero(row[pc])) continue;
      const T f = row[pc];
      for (std::size_t c : nz_) {
        row[c] -= f * prow[c];
        clean(row[c]);
      }
      row[pc] = 0;
    }
    if (!is_exact_zero(red[pc])) {
      const T f = red[pc];
      for (std::size_t c : nz_) {
        if (c == cols_) {
          neg_obj -= f * prow[c];
          clean(neg_obj);
        } else {
          red[c] -= f * prow[c];
          clean(red[c]);
        }
      }
      red[pc] = 0;
    }
    basis[pr] = pc;
  }

  void remove_row(std::size_t r) {
    const std::size_t w = cols_ + 1;
    data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * w), data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
    basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

 private:
  static bool is_exact_zero(const T& x) {
    if constexpr (ScalarTraits<T>::exact) {
      return sgn(x) == 0;
    } else {
      return x == 0.0;
    }
  }
  static void clean(T& x) {
    if constexpr (!ScalarTraits<T>::exact) {
      if (std::abs(x) < 1e-13) x = 0.0;
    }
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> data_;
  std::vector<std::size_t> nz_;
};

// Runs simplex iterations on `tab` until optimal or unbounded. Columns with
// allowed[c] == false never enter.
template <Scalar T>
LpStatus run_simplex(Tableau<T>& tab, const std::vector<bool>& allowed, const LpOptions& opt, std::size_t& pivots) {
  using Tr = ScalarTraits<T>;
  bool bland = opt.rule == PivotRule::bland;
  std::size_t degenerate_run = 0;
  while (true) {
    std::size_t enter = tab.cols();
    if (bland) {
      for (std::size_t c = 0; c < tab.cols(); ++c) {
        if (allowed[c] && Tr::is_positive(tab.red[c])) {
          enter = c;
          break;
        }
      }
    } else {
      for (std::size_t c = 0; c < tab.cols(); ++c) {
        if (allowed[c] && Tr::is_positive(tab.red[c]) && (enter == tab.cols() || tab.red[c] > tab.red[enter])) enter = c;
      }
    }
    if (enter == tab.cols()) return LpStatus::optimal;

    std::size_t leave = tab.rows();
    T best_ratio = 0;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      const T& a = tab.at(r, enter);
      if (!Tr::is_positive(a)) continue;
      T ratio = tab.rhs(r) / a;
      if constexpr (!Tr::exact) {
        // Round-off can leave a feasible basic value slightly negative; a
        // negative ratio would break primal feasibility (and Bland's rule).
        if (ratio < 0) ratio = 0;
      }
      if (leave == tab.rows()) {
        leave = r;
        best_ratio = ratio;
        continue;
      }
      bool better;
      if constexpr (Tr::exact) {
        better = ratio < best_ratio || (ratio == best_ratio && tab.basis[r] < tab.basis[leave]);
      } else {
        const double gap = ratio - best_ratio;
        better = gap < -1e-12 || (std::abs(gap) <= 1e-12 && tab.basis[r] < tab.basis[leave]);
      }
      if (better) {
        leave = r;
        best_ratio = ratio;
      }
    }
    if (leave == tab.rows()) return LpStatus::unbounded;

    const bool degenerate = Tr::is_zero(best_ratio);
    tab.pivot(leave, enter);
    if (++pivots > opt.max_pivots) throw LpError("simplex pivot budget exhausted");
    if (degenerate) {
      if (++degenerate_run >= opt.degenerate_run_before_bland) bland = true;
    } else {
      degenerate_run = 0;
    }
  }
}

}  // namespace detail

template <Scalar T>
LpSolution<T> solve_lp(const LinearProgram<T>& lp, const LpOptions& opt = {}) {
  using Tr = ScalarTraits<T>;
  lp.validate();
  const std::size_t n = lp.num_vars();

  // Map each original variable onto nonnegative internal columns:
  // x = offset + sign * col  (or col_pos - col_neg when free).
  struct VarMap {
    std::size_t col;
    std::optional<std::size_t> neg_col;
    T offset;
    int sign;
  };
  std::vector<VarMap> vmap;
  std::size_t ncols = 0;
  std::vector<typename LinearProgram<T>::Row> rows = lp.rows;
  std::vector<std::pair<std::size_t, T>> extra_upper;  // (internal col, bound)
  for (std::size_t j = 0; j < n; ++j) {
    if (lp.lower[j]) {
      vmap.push_back({ncols, std::nullopt, *lp.lower[j], +1});
      if (lp.upper[j]) extra_upper.emplace_back(ncols, *lp.upper[j] - *lp.lower[j]);
      ++ncols;
    } else if (lp.upper[j]) {
      vmap.push_back({ncols, std::nullopt, *lp.upper[j], -1});
      ++ncols;
    } else {
      vmap.push_back({ncols, ncols + 1, T(0), +1});
      ncols += 2;
    }
  }
  const std::size_t nstruct = ncols;

  struct StdRow {
    std::vector<T> a;
    Relation rel;
    T b;
  };
  std::vector<StdRow> std_rows;
  std_rows.reserve(rows.size() + extra_upper.size());
  for (const auto& row : rows) {
    StdRow sr{std::vector<T>(nstruct, T(0)), row.rel, row.rhs};
    for (std::size_t j = 0; j < n; ++j) {
      const T& c = row.coeffs[j];
      if (c == 0) continue;
      const VarMap& vm = vmap[j];
      sr.b -= c * vm.offset;
      if (vm.sign > 0) {
        sr.a[vm.col] += c;
      } else {
        sr.a[vm.col] -= c;
      }
      if (vm.neg_col) sr.a[*vm.neg_col] -= c;
    }
    std_rows.push_back(std::move(sr));
  }
  for (const auto& [col, bound] : extra_upper) {
    StdRow sr{std::vector<T>(nstruct, T(0)), Relation::leq, bound};
    sr.a[col] = 1;
    std_rows.push_back(std::move(sr));
  }
  for (auto& sr : std_rows) {
    if (sr.b < 0) {
      for (auto& x : sr.a) x = -x;
      sr.b = -sr.b;
      if (sr.rel == Relation::leq) {
        sr.rel = Relation::geq;
      } else if (sr.rel == Relation::geq) {
        sr.rel = Relation::leq;
      }
    }
  }

  std::vector<T> cost(nstruct, T(0));
  T cost_offset = 0;
  const T dir = lp.sense == Sense::maximize ? T(1) : T(-1);
  for (std::size_t j = 0; j < n; ++j) {
    const T c = dir * lp.objective[j];
    const VarMap& vm = vmap[j];
    cost_offset += c * vm.offset;
    if (vm.sign > 0) {
      cost[vm.col] += c;
    } else {
      cost[vm.col] -= c;
    }
    if (vm.neg_col) cost[*vm.neg_col] -= c;
  }

  std::size_t nslack = 0, nart = 0;
  for (const auto& sr : std_rows) {
    if (sr.rel != Relation::eq) ++nslack;
    if (sr.rel != Relation::leq) ++nart;
  }
  const std::size_t total_cols = nstruct + nslack + nart;
  const std::size_t art_begin = nstruct + nslack;
  detail::Tableau<T> tab(std_rows.size(), total_cols);
  tab.basis.assign(std_rows.size(), 0);
  std::size_t next_slack = nstruct, next_art = art_begin;
  for (std::size_t r = 0; r < std_rows.size(); ++r) {
    const StdRow& sr = std_rows[r];
    for (std::size_t c = 0; c < nstruct; ++c) tab.at(r, c) = sr.a[c];
    tab.rhs(r) = sr.b;
    if (sr.rel == Relation::leq) {
      tab.at(r, next_slack) = 1;
      tab.basis[r] = next_slack++;
    } else if (sr.rel == Relation::geq) {
      tab.at(r, next_slack++) = -1;
      tab.at(r, next_art) = 1;
      tab.basis[r] = next_art++;
    } else {
      tab.at(r, next_art) = 1;
      tab.basis[r] = next_art++;
    }
  }

  LpSolution<T> sol;
  std::vector<bool> allowed(total_cols, true);

  // Phase 1: maximize -(sum of artificials).
  if (nart > 0) {
    tab.red.assign(total_cols, T(0));
    tab.neg_obj = 0;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      if (tab.basis[r] < art_begin) continue;
      for (std::size_t c = 0; c < total_cols; ++c) tab.red[c] += tab.at(r, c);
      tab.neg_obj += tab.rhs(r);
    }
    for (std::size_t c = art_begin; c < total_cols; ++c) tab.red[c] = 0;
    detail::run_simplex(tab, allowed, opt, sol.pivots);
    if (Tr::is_positive(tab.neg_obj)) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Drive remaining (zero-level) artificials out of the basis.
    for (std::size_t r = 0; r < tab.rows();) {
      if (tab.basis[r] < art_begin) {
        ++r;
        continue;
      }
      std::size_t pc = art_begin;
      for (std::size_t c = 0; c < art_begin; ++c) {
        if (!Tr::is_zero(tab.at(r, c))) {
          pc = c;
          break;
        }
      }
      if (pc == art_begin) {
        tab.remove_row(r);  // redundant constraint
      } else {
        tab.pivot(r, pc);
        ++r;
      }
    }
    for (std::size_t c = art_begin; c < total_cols; ++c) allowed[c] = false;
  }

  // Phase 2.
  tab.red.assign(total_cols, T(0));
  for (std::size_t c = 0; c < nstruct; ++c) tab.red[c] = cost[c];
  tab.neg_obj = 0;
  for (std::size_t r = 0; r < tab.rows(); ++r) {
    const std::size_t b = tab.basis[r];
    if (b >= nstruct) continue;
    const T cb = cost[b];
    if (cb == 0) continue;
    for (std::size_t c = 0; c < total_cols; ++c) tab.red[c] -= cb * tab.at(r, c);
    tab.neg_obj -= cb * tab.rhs(r);
  }
  for (std::size_t r = 0; r < tab.rows(); ++r) tab.red[tab.basis[r]] = 0;

  if (detail::run_simplex(tab, allowed, opt, sol.pivots) == LpStatus::unbounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  std::vector<T> internal(total_cols, T(0));
  for (std::size_t r = 0; r < tab.rows(); ++r) internal[tab.basis[r]] = tab.rhs(r);
  sol.values.assign(n, T(0));
  for (std::size_t j = 0; j < n; ++j) {
    const VarMap& vm = vmap[j];
    T x = vm.offset;
    if (vm.sign > 0) {
      x += internal[vm.col];
    } else {
      x -= internal[vm.col];
    }
    if (vm.neg_col) x -= internal[*vm.neg_col];
    sol.values[j] = x;
  }
  T obj = 0;
  for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * sol.values[j];
  sol.objective = obj;
  sol.status = LpStatus::optimal;
  return sol;
}

template <Scalar T>
using Matrix = std::vector<std::vector<T>>;

template <Scalar T>
struct GameSolution {
  std::vector<T> row_strategy;  // maximizer
  std::vector<T> col_strategy;  // minimizer
  T value = 0;
};

// Zero-sum game where the row player receives payoff[i][j]. Both strategies
// come from the textbook LPs: max v s.t. y^T A >= v 1, sum y = 1, y >= 0, and
// the symmetric program for the column player.
template <Scalar T>
GameSolution<T> solve_zero_sum(const Matrix<T>& payoff, const LpOptions& opt = {}) {
  const std::size_t rows = payoff.size();
  if (rows == 0) throw std::invalid_argument("empty payoff matrix");
  const std::size_t cols = payoff[0].size();
  if (cols == 0) throw std::invalid_argument("empty payoff matrix");
  for (const auto& r : payoff) {
    if (r.size() != cols) throw std::invalid_argument("ragged payoff matrix");
  }

  GameSolution<T> out;
  {
    LinearProgram<T> lp(rows + 1, Sense::maximize);
    lp.objective[rows] = 1;
    lp.set_free(rows);
    for (std::size_t j = 0; j < cols; ++j) {
      std::vector<T> a(rows + 1, T(0));
      for (std::size_t i = 0; i < rows; ++i) a[i] = payoff[i][j];
      a[rows] = -1;
      lp.add_row(std::move(a), Relation::geq, T(0));
    }
    std::vector<T> sum(rows + 1, T(1));
    sum[rows] = 0;
    lp.add_row(std::move(sum), Relation::eq, T(1));
    auto sol = solve_lp(lp, opt);
    if (sol.status != LpStatus::optimal) throw LpError(std::string("row player LP: ") + to_string(sol.status));
    out.row_strategy.assign(sol.values.begin(), sol.values.begin() + static_cast<std::ptrdiff_t>(rows));
    out.value = sol.values[rows];
  }
  {
    LinearProgram<T> lp(cols + 1, Sense::minimize);
    lp.objective[cols] = 1;
    lp.set_free(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<T> a(cols + 1, T(0));
      for (std::size_t j = 0; j < cols; ++j) a[j] = payoff[i][j];
      a[cols] = -1;
      lp.add_row(std::move(a), Relation::leq, T(0));
    }
    std::vector<T> sum(cols + 1, T(1));
    sum[cols] = 0;
    lp.add_row(std::move(sum), Relation::eq, T(1));
    auto sol = solve_lp(lp, opt);
    if (sol.status != LpStatus::optimal) throw LpError(std::string("column player LP: ") + to_string(sol.status));
    out.col_strategy.assign(sol.values.begin(), sol.values.begin() + static_cast<std::ptrdiff_t>(cols));
  }
  if constexpr (!ScalarTraits<T>::exact) {
    for (auto* s : {&out.row_strategy, &out.col_strategy}) {
      double total = 0;
      for (double& x : *s) {
        if (x < 0) x = 0;
        total += x;
      }
      for (double& x : *s) x /= total;
    }
  }
  return out;
}

// Largest gain any player obtains from a pure deviation (0 at an exact
// equilibrium).
template <Scalar T>
T equilibrium_gap(const Matrix<T>& payoff, const GameSolution<T>& sol) {
  const std::size_t rows = payoff.size();
  const std::size_t cols = payoff[0].size();
  T row_guarantee = 0, col_guarantee = 0;
  bool first = true;
  for (std::size_t j = 0; j < cols; ++j) {
    T v = 0;
    for (std::size_t i = 0; i < rows; ++i) v += sol.row_strategy[i] * payoff[i][j];
    if (first || v < row_guarantee) row_guarantee = v;
    first = false;
  }
  first = true;
  for (std::size_t i = 0; i < rows; ++i) {
    T v = 0;
    for (std::size_t j = 0; j < cols; ++j) v += payoff[i][j] * sol.col_strategy[j];
    if (first || v > col_guarantee) col_guarantee = v;
    first = false;
  }
  // At equilibrium both guarantees equal the value.
  T gap = col_guarantee - row_guarantee;
  if (gap < 0) gap = -gap;
  return gap;
}

}  // namespace mdist
