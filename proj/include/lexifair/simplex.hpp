#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lexifair::lp {

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

struct Constraint {
  std::vector<double> coeffs;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

/// minimize objective . x  subject to rows, x >= 0.
struct Problem {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<Constraint> rows;

  explicit Problem(std::size_t n) : num_vars(n), objective(n, 0.0) {}

  void add(std::vector<double> coeffs, Sense sense, double rhs) {
    if (coeffs.size() != num_vars) throw std::invalid_argument("constraint width mismatch");
    rows.push_back({std::move(coeffs), sense, rhs});
  }
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Solution {
  Status status = Status::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
  long pivots = 0;
};

struct Tolerances {
  double pivot = 1e-11;
  double feasibility = 1e-9;
};

/// Dense two-phase tableau simplex with Bland's rule. Meant for the small
/// verification LPs (a few hundred rows); Bland's rule guarantees termination
/// under degeneracy and makes the pivot sequence reproducible.
class DenseSimplex {
 public:
  explicit DenseSimplex(Tolerances tol = {}) : tol_(tol) {}

  Solution solve(const Problem& p) {
    build(p);
    Solution out;

    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1(cols_, 0.0);
    for (std::size_t j = first_artificial_; j < cols_; ++j) phase1[j] = 1.0;
    if (!iterate(phase1, cols_, out.pivots)) throw std::logic_error("phase 1 cannot be unbounded");
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= first_artificial_) infeasibility += rhs(i);
    double scale = 1.0;
    for (const auto& r : p.rows) scale = std::max(scale, std::abs(r.rhs));
    if (infeasibility > tol_.feasibility * scale) {
      out.status = Status::kInfeasible;
      return out;
    }
    drive_out_artificials(out.pivots);

    // Phase 2 over structural and slack columns only.
    std::vector<double> phase2(cols_, 0.0);
    for (std::size_t j = 0; j < p.num_vars; ++j) phase2[j] = p.objective[j];
    if (!iterate(phase2, first_artificial_, out.pivots)) {
      out.status = Status::kUnbounded;
      return out;
    }
    out.status = Status::kOptimal;
    out.x.assign(p.num_vars, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < p.num_vars) out.x[basis_[i]] = std::max(0.0, rhs(i));
    out.value = 0.0;
    for (std::size_t j = 0; j < p.num_vars; ++j) out.value += p.objective[j] * out.x[j];
    return out;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return tab_[i * (cols_ + 1) + j]; }
  double rhs(std::size_t i) const { return tab_[i * (cols_ + 1) + cols_]; }

  void build(const Problem& p) {
    m_ = p.rows.size();
    std::size_t slacks = 0, artificials = 0;
    for (const auto& r : p.rows) {
      const bool flip = r.rhs < 0.0;
      Sense s = r.sense;
      if (flip && s != Sense::kEqual) s = (s == Sense::kLessEqual) ? Sense::kGreaterEqual : Sense::kLessEqual;
      if (s != Sense::kEqual) ++slacks;
      if (s != Sense::kLessEqual) ++artificials;
    }
    first_artificial_ = p.num_vars + slacks;
    cols_ = first_artificial_ + artificials;
    tab_.assign(m_ * (cols_ + 1), 0.0);
    basis_.assign(m_, 0);
    std::size_t next_slack = p.num_vars, next_art = first_artificial_;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& r = p.rows[i];
      const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
      Sense s = r.sense;
      if (sign < 0.0 && s != Sense::kEqual) s = (s == Sense::kLessEqual) ? Sense::kGreaterEqual : Sense::kLessEqual;
      for (std::size_t j = 0; j < p.num_vars; ++j) at(i, j) = sign * r.coeffs[j];
      at(i, cols_) = sign * r.rhs;
      if (s == Sense::kLessEqual) {
        at(i, next_slack) = 1.0;
        basis_[i] = next_slack++;
      } else {
        if (s == Sense::kGreaterEqual) at(i, next_slack++) = -1.0;
        at(i, next_art) = 1.0;
        basis_[i] = next_art++;
      }
    }
  }

  // Runs simplex iterations for `cost`, with entering columns restricted to
  // [0, allowed). Returns false when unbounded.
  bool iterate(const std::vector<double>& cost, std::size_t allowed, long& pivots) {
    std::vector<double> reduced(cost);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) reduced[j] -= cb * at(i, j);
    }
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < allowed; ++j)
        if (reduced[j] < -tol_.pivot) {
          enter = j;
          break;
        }
      if (enter == cols_) return true;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= tol_.pivot) continue;
        const double ratio = std::max(0.0, rhs(i)) / a;
        const bool tie = leave < m_ && std::abs(ratio - best) <= 1e-14;
        if (leave == m_ || ratio < best - 1e-14 || (tie && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      const double f = reduced[enter];
      for (std::size_t j = 0; j < cols_; ++j) reduced[j] -= f * at(leave, j);
      ++pivots;
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double inv = 1.0 / at(row, col);
    for (std::size_t j = 0; j <= cols_; ++j) at(row, j) *= inv;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(row, j);
      at(i, col) = 0.0;
    }
    basis_[row] = col;
  }

  void drive_out_artificials(long& pivots) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < first_artificial_) continue;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (std::abs(at(i, j)) > tol_.pivot) {
          pivot(i, j);
          ++pivots;
          break;
        }
      }
      // A row with no structural entry is redundant; its artificial stays
      // basic at zero and can never re-enter.
    }
  }

  Tolerances tol_;
  std::size_t m_ = 0, cols_ = 0, first_artificial_ = 0;
  std::vector<double> tab_;
  std::vector<std::size_t> basis_;
};

inline Solution solve(const Problem& p, Tolerances tol = {}) { return DenseSimplex(tol).solve(p); }

}  // namespace lexifair::lp
