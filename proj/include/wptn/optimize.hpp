#pragma once

// Charger activation as a multidimensional 0-1 knapsack: pick c in {0,1}^n
// so that every ERx row i keeps sum_j a[i][j] c_j <= s_t[i].
//   PI : does a feasible c reach sum_i sum_j o[i][j] c_j >= o_q ?
//   PII: maximise that sum.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wptn/model.hpp"

namespace wptn {

using Matrix = std::vector<std::vector<double>>;
using Activation = std::vector<int>;

struct KnapsackInstance {
  std::size_t n = 0;  // chargers (items)
  std::size_t m = 0;  // receivers (constraint rows)
  Matrix o;           // m x n profits
  Matrix a;           // m x n weights; +inf marks a charger that can never be on
  std::vector<double> s_t;  // per-row capacity, normally all equal
  double o_q = 0.0;

  void validate() const {
    if (o.size() != m || a.size() != m || s_t.size() != m)
      throw std::invalid_argument("knapsack: row count does not match m");
    for (std::size_t i = 0; i < m; ++i) {
      if (o[i].size() != n || a[i].size() != n)
        throw std::invalid_argument(fmt::format("knapsack: row {} does not have n = {} entries", i, n));
      for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(o[i][j])) throw std::invalid_argument("knapsack: o must be finite");
        if (std::isnan(a[i][j]) || a[i][j] == -std::numeric_limits<double>::infinity())
          throw std::invalid_argument("knapsack: a must be finite or +inf");
      }
      if (!std::isfinite(s_t[i])) throw std::invalid_argument("knapsack: s_t must be finite");
    }
    if (!std::isfinite(o_q)) throw std::invalid_argument("knapsack: o_q must be finite");
  }

  // Objective contribution of each charger summed over rows.
  std::vector<double> item_profits() const {
    std::vector<double> p(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) p[j] += o[i][j];
    return p;
  }
};

inline constexpr std::size_t kExactSizeLimit = 24;

class SizeGuardError : public std::invalid_argument {
 public:
  explicit SizeGuardError(std::size_t n)
      : std::invalid_argument(fmt::format(
            "instance has n = {} chargers; exact modes enumerate 2^n and are limited to n <= {}. "
            "Use the greedy mode for larger instances.",
            n, kExactSizeLimit)) {}
};

// Per-pair descriptors for one time slot, [erx][etx]; every entry must be set.
using PerfSnapshot = std::vector<std::vector<std::optional<PerfVector>>>;

inline KnapsackInstance build_instance(const PerfSnapshot& snap, const ConstraintsAndWeights& cw) {
  cw.validate();
  KnapsackInstance inst;
  inst.m = snap.size();
  inst.n = snap.empty() ? 0 : snap.front().size();
  const double s = weighted_sums(PerfVector{}, cw).s;
  inst.s_t.assign(inst.m, s);
  inst.o_q = cw.o_q;
  inst.o.assign(inst.m, std::vector<double>(inst.n));
  inst.a.assign(inst.m, std::vector<double>(inst.n));
  for (std::size_t i = 0; i < inst.m; ++i) {
    if (snap[i].size() != inst.n)
      throw std::invalid_argument(fmt::format("snapshot row {} has {} pairs, expected {}", i,
                                              snap[i].size(), inst.n));
    for (std::size_t j = 0; j < inst.n; ++j) {
      if (!snap[i][j]) throw std::invalid_argument(fmt::format("snapshot is missing pair ({}, {})", i, j));
      const auto w = weighted_sums(*snap[i][j], cw);
      inst.o[i][j] = w.o;
      inst.a[i][j] = w.a;
    }
  }
  return inst;
}

inline double objective(const KnapsackInstance& inst, const Activation& c) {
  double v = 0.0;
  for (std::size_t i = 0; i < inst.m; ++i)
    for (std::size_t j = 0; j < inst.n; ++j)
      if (c[j]) v += inst.o[i][j];
  return v;
}

// s_t[i] - sum_j a[i][j] c_j per row; negative means violated.
inline std::vector<double> row_slack(const KnapsackInstance& inst, const Activation& c) {
  std::vector<double> slack(inst.s_t);
  for (std::size_t i = 0; i < inst.m; ++i)
    for (std::size_t j = 0; j < inst.n; ++j)
      if (c[j]) slack[i] -= inst.a[i][j];
  return slack;
}

inline bool is_feasible(const KnapsackInstance& inst, const Activation& c) {
  if (c.size() != inst.n) return false;
  const auto slack = row_slack(inst, c);
  return std::all_of(slack.begin(), slack.end(), [](double s) { return s >= 0.0; });
}

struct Solution {
  Activation c;
  double value = 0.0;
};

namespace detail {

// Depth-first enumeration of {0,1}^n with the 0 branch first, so leaves come
// in lexicographic order. A branch is cut when some row cannot return under
// its capacity even if every remaining negative weight were taken.
class Enumerator {
 public:
  explicit Enumerator(const KnapsackInstance& inst) : inst_(inst), profit_(inst.item_profits()) {
    inst.validate();
    if (inst.n > kExactSizeLimit) throw SizeGuardError(inst.n);
    relief_.assign(inst.n + 1, std::vector<double>(inst.m, 0.0));
    best_gain_.assign(inst.n + 1, 0.0);
    for (std::size_t j = inst.n; j-- > 0;) {
      for (std::size_t i = 0; i < inst.m; ++i)
        relief_[j][i] = relief_[j + 1][i] + std::min(inst.a[i][j], 0.0);
      best_gain_[j] = best_gain_[j + 1] + std::max(profit_[j], 0.0);
    }
  }

  // Visits feasible leaves; the callback returns false to stop.
  template <class Visit>
  void run(Visit&& visit, std::optional<double> need = std::nullopt) {
    Activation c(inst_.n, 0);
    std::vector<double> load(inst_.m, 0.0);
    stop_ = false;
    dfs(0, c, load, 0.0, visit, need);
  }

 private:
  template <class Visit>
  void dfs(std::size_t j, Activation& c, std::vector<double>& load, double value, Visit& visit,
           const std::optional<double>& need) {
    if (stop_) return;
    for (std::size_t i = 0; i < inst_.m; ++i)
      if (load[i] + relief_[j][i] > inst_.s_t[i]) return;
    // Bound slackened so summation-order rounding never discards a witness.
    if (need && value + best_gain_[j] < *need - 1e-9 * (1.0 + std::abs(*need))) return;
    if (j == inst_.n) {
      if (!visit(static_cast<const Activation&>(c), value)) stop_ = true;
      return;
    }
    dfs(j + 1, c, load, value, visit, need);
    c[j] = 1;
    std::vector<double> taken(load);
    for (std::size_t i = 0; i < inst_.m; ++i) taken[i] += inst_.a[i][j];
    dfs(j + 1, c, taken, value + profit_[j], visit, need);
    c[j] = 0;
  }

  const KnapsackInstance& inst_;
  std::vector<double> profit_;
  std::vector<std::vector<double>> relief_;  // [j][i] sum of negative a[i][j..]
  std::vector<double> best_gain_;            // sum of positive profits in j..
  bool stop_ = false;
};

}  // namespace detail

// Exact PII. Ties go to the lexicographically smallest c. nullopt when no c
// (not even all-off) is feasible.
inline std::optional<Solution> solve_pii_exact(const KnapsackInstance& inst) {
  std::optional<Solution> best;
  detail::Enumerator(inst).run([&](const Activation& c, double v) {
    if (!best || v > best->value) best = Solution{c, v};
    return true;
  });
  if (best) best->value = objective(inst, best->c);
  return best;
}

struct PiAnswer {
  bool yes = false;
  Activation witness;  // set when yes
  double value = 0.0;
};

// Exact PI: searches for any feasible c with objective >= o_q.
inline PiAnswer solve_pi(const KnapsackInstance& inst) {
  PiAnswer ans;
  detail::Enumerator(inst).run(
      [&](const Activation& c, double) {
        const double v = objective(inst, c);
        if (v < inst.o_q) return true;
        ans = PiAnswer{true, c, v};
        return false;
      },
      inst.o_q);
  return ans;
}

// Ratio greedy: take every profitable charger, then drop the worst
// profit/weight ratios until all rows fit, then re-add whatever still fits.
inline std::optional<Solution> solve_pii_greedy(const KnapsackInstance& inst) {
  inst.validate();
  const auto profit = inst.item_profits();
  std::vector<double> ratio(inst.n);
  for (std::size_t j = 0; j < inst.n; ++j) {
    double w = 0.0;
    for (std::size_t i = 0; i < inst.m; ++i) w += std::max(inst.a[i][j], 0.0);
    ratio[j] = w > 0.0 ? profit[j] / w : std::numeric_limits<double>::infinity();
  }
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < inst.n; ++j)
    if (profit[j] > 0.0) order.push_back(j);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return ratio[x] > ratio[y]; });

  Activation c(inst.n, 0);
  for (std::size_t j : order) c[j] = 1;
  for (auto it = order.rbegin(); it != order.rend() && !is_feasible(inst, c); ++it) c[*it] = 0;
  if (!is_feasible(inst, c)) return std::nullopt;
  for (std::size_t j : order) {
    if (c[j]) continue;
    c[j] = 1;
    if (!is_feasible(inst, c)) c[j] = 0;
  }
  return Solution{c, objective(inst, c)};
}

// ---------------------------------------------------------------------------
// Text format
//
//   # comments run to end of line
//   m n
//   o   (m rows of n numbers)
//   a   (m rows of n numbers; "inf" allowed)
//   s_t (one number for all rows, or m numbers)
//   o_q

inline KnapsackInstance parse_instance(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream words(line);
    std::string w;
    while (words >> w) tokens.push_back(w);
  }
  std::size_t pos = 0;
  auto number = [&](const char* what) {
    if (pos >= tokens.size()) throw std::invalid_argument(fmt::format("instance: missing {}", what));
    const std::string& t = tokens[pos++];
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw std::invalid_argument(fmt::format("instance: bad number '{}' in {}", t, what));
    return v;
  };
  auto count = [&](const char* what) {
    const double v = number(what);
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument(fmt::format("instance: {} must be a count", what));
    return static_cast<std::size_t>(v);
  };
  KnapsackInstance inst;
  inst.m = count("m");
  inst.n = count("n");
  inst.o.assign(inst.m, std::vector<double>(inst.n));
  inst.a.assign(inst.m, std::vector<double>(inst.n));
  for (auto& row : inst.o)
    for (auto& v : row) v = number("o");
  for (auto& row : inst.a)
    for (auto& v : row) v = number("a");
  const std::size_t rest = tokens.size() - pos;
  if (rest == 2) {
    inst.s_t.assign(inst.m, number("s_t"));
  } else if (rest == inst.m + 1) {
    for (std::size_t i = 0; i < inst.m; ++i) inst.s_t.push_back(number("s_t"));
  } else {
    throw std::invalid_argument(fmt::format(
        "instance: expected s_t (1 or {} values) and o_q after the matrices, found {} values", inst.m, rest));
  }
  inst.o_q = number("o_q");
  inst.validate();
  return inst;
}

inline KnapsackInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

inline std::string format_instance(const KnapsackInstance& inst) {
  std::string out = fmt::format("{} {}\n", inst.m, inst.n);
  auto rows = [&](const Matrix& x) {
    for (const auto& row : x) {
      for (std::size_t j = 0; j < row.size(); ++j) out += fmt::format("{}{:.17g}", j ? " " : "", row[j]);
      out += '\n';
    }
  };
  rows(inst.o);
  rows(inst.a);
  for (std::size_t i = 0; i < inst.s_t.size(); ++i) out += fmt::format("{}{:.17g}", i ? " " : "", inst.s_t[i]);
  out += fmt::format("\n{:.17g}\n", inst.o_q);
  return out;
}

}  // namespace wptn
