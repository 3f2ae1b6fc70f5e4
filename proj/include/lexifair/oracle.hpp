#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/simplex.hpp"

namespace lexifair {

/// Thrown when an oracle LP fails in a way that is mathematically impossible
/// for its inputs (numerical trouble).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// K x H table of per-group losses: entry (k, h) is the loss of hypothesis h
/// on group k.
class LossMatrix {
 public:
  LossMatrix(int rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ < 1 || cols_ < 1) throw InvariantViolation("loss matrix needs at least one row and column");
    if (data_.size() != static_cast<std::size_t>(rows_) * cols_) throw InvariantViolation("loss matrix size mismatch");
    for (double v : data_)
      if (!std::isfinite(v) || v < 0.0) throw InvariantViolation("loss matrix entries must be finite and non-negative");
  }

  /// From row vectors, one per group.
  static LossMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvariantViolation("loss matrix needs at least one row");
    const std::size_t cols = rows.front().size();
    std::vector<double> data;
    for (const auto& r : rows) {
      if (r.size() != cols) throw InvariantViolation("loss matrix rows differ in length");
      data.insert(data.end(), r.begin(), r.end());
    }
    return LossMatrix(static_cast<int>(rows.size()), cols, std::move(data));
  }

  /// From per-hypothesis group error vectors (one column each).
  static LossMatrix from_columns(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw InvariantViolation("loss matrix needs at least one column");
    const std::size_t k = columns.front().size();
    std::vector<double> data(k * columns.size());
    for (std::size_t h = 0; h < columns.size(); ++h) {
      if (columns[h].size() != k) throw InvariantViolation("loss matrix columns differ in length");
      for (std::size_t r = 0; r < k; ++r) data[r * columns.size() + h] = columns[h][r];
    }
    return LossMatrix(static_cast<int>(k), columns.size(), std::move(data));
  }

  int rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(int k, std::size_t h) const { return data_[static_cast<std::size_t>(k) * cols_ + h]; }

  /// Group errors of the mixture with column weights p.
  std::vector<double> mixture_errors(const std::vector<double>& p) const {
    if (p.size() != cols_) throw std::invalid_argument("mixture width mismatch");
    std::vector<double> e(static_cast<std::size_t>(rows_), 0.0);
    for (int k = 0; k < rows_; ++k)
      for (std::size_t h = 0; h < cols_; ++h) e[static_cast<std::size_t>(k)] += p[h] * (*this)(k, h);
    return e;
  }

 private:
  int rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// All r-subsets of {0..n-1} in lexicographic order.
inline std::vector<GroupSubset> subsets_of_size(int n, int r) {
  std::vector<GroupSubset> out;
  if (r < 1 || r > n) return out;
  GroupSubset s(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) s[static_cast<std::size_t>(i)] = i;
  for (;;) {
    out.push_back(s);
    int i = r - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == n - r + i) --i;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < r; ++k) s[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

struct MinimaxResult {
  double value = 0.0;
  std::vector<double> witness;  // weights over columns
};

struct LexifairGroundTruth {
  std::vector<double> opt_sums;  // OPT_1..OPT_l
  std::vector<double> gamma;     // gamma_j = OPT_j - OPT_{j-1}
  std::vector<double> witness;   // mixture attaining every level
};

namespace detail {

/// Level-j LP: minimize t over mixtures p subject to every r-subset sum
/// (r < j) staying below history[r-1] and every j-subset sum below t.
/// Returns nullopt when the history makes the program infeasible.
inline std::optional<MinimaxResult> solve_level(const LossMatrix& m, int j, const std::vector<double>& history) {
  const std::size_t h = m.cols();
  const std::size_t nv = h + 1;  // mixture weights, then t
  lp::Problem p(nv);
  p.objective[h] = 1.0;
  std::vector<double> simplex_row(nv, 1.0);
  simplex_row[h] = 0.0;
  p.add(simplex_row, lp::Sense::kEqual, 1.0);
  for (int r = 1; r <= j; ++r) {
    for (const auto& subset : subsets_of_size(m.rows(), r)) {
      std::vector<double> row(nv, 0.0);
      for (int k : subset)
        for (std::size_t c = 0; c < h; ++c) row[c] += m(k, c);
      if (r < j) {
        p.add(std::move(row), lp::Sense::kLessEqual, history[static_cast<std::size_t>(r - 1)]);
      } else {
        row[h] = -1.0;
        p.add(std::move(row), lp::Sense::kLessEqual, 0.0);
      }
    }
  }
  const auto sol = lp::solve(p);
  if (sol.status == lp::Status::kInfeasible) return std::nullopt;
  if (sol.status != lp::Status::kOptimal) throw SolverError("level LP unbounded; impossible for a mixture over columns");
  MinimaxResult out;
  out.witness.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(h));
  double total = 0.0;
  for (double w : out.witness) total += w;
  for (double& w : out.witness) w /= total;
  // Report the level value the witness actually attains.
  const GroupErrorVector ev(m.mixture_errors(out.witness));
  out.value = top_j_sum(ev, j);
  return out;
}

inline void verify_witness(const LossMatrix& m, const std::vector<double>& witness, const std::vector<double>& bounds,
                           double tol) {
  const GroupErrorVector ev(m.mixture_errors(witness));
  for (std::size_t r = 1; r <= bounds.size(); ++r)
    if (top_j_sum(ev, static_cast<int>(r)) > bounds[r - 1] + tol)
      throw SolverError("oracle witness violates level " + std::to_string(r) + " by " +
                        std::to_string(top_j_sum(ev, static_cast<int>(r)) - bounds[r - 1]));
}

}  // namespace detail

/// min over mixtures p of max_k (M p)_k, solved exactly as an LP.
inline MinimaxResult minimax_value(const LossMatrix& m) {
  auto res = detail::solve_level(m, 1, {});
  if (!res) throw SolverError("minimax LP reported infeasible");
  detail::verify_witness(m, res->witness, {res->value}, 1e-9);
  return *res;
}

/// OPT_j(eta_1..eta_{j-1}) for an arbitrary history; nullopt if infeasible.
inline std::optional<MinimaxResult> opt_given_history(const LossMatrix& m, const std::vector<double>& history) {
  const int j = static_cast<int>(history.size()) + 1;
  if (j > m.rows()) throw std::invalid_argument("history longer than K - 1");
  return detail::solve_level(m, j, history);
}

/// Runs the level LPs for j = 1..ell with each level's exact optimum fed into
/// the next, and derives gamma_j = OPT_j - OPT_{j-1}.
inline LexifairGroundTruth exact_lexifair_lp(const LossMatrix& m, int ell) {
  if (ell < 1 || ell > m.rows()) throw std::invalid_argument("ell outside [1, K]");
  LexifairGroundTruth out;
  std::vector<double> history;
  MinimaxResult last;
  for (int j = 1; j <= ell; ++j) {
    auto res = detail::solve_level(m, j, history);
    if (!res) throw SolverError("level " + std::to_string(j) + " infeasible given exact earlier optima");
    last = *res;
    history.push_back(res->value);
  }
  detail::verify_witness(m, last.witness, history, 1e-9);
  out.opt_sums = history;
  out.witness = last.witness;
  double prev = 0.0;
  for (double v : history) {
    out.gamma.push_back(v - prev);
    prev = v;
  }
  return out;
}

/// Level-3 value of the LP sequence on a 3-group table when the level-1
/// bound is loosened to gamma_1 + slack and later levels are solved exactly.
inline double relaxed_third_level(const LossMatrix& m, double slack) {
  if (m.rows() != 3) throw std::invalid_argument("relaxed_third_level expects a 3-group table");
  if (slack < 0.0) throw std::invalid_argument("slack must be non-negative");
  const double gamma1 = minimax_value(m).value;
  std::vector<double> history{gamma1 + slack};
  auto second = opt_given_history(m, history);
  if (!second) throw SolverError("relaxed level 2 infeasible");
  history.push_back(second->value);
  auto third = opt_given_history(m, history);
  if (!third) throw SolverError("relaxed level 3 infeasible");
  return third->value - second->value;
}

}  // namespace lexifair
