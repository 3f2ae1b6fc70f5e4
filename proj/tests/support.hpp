#pragma once

// Test-only reference computations. None of these call into the code they
// check beyond the plain data types.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/oracle.hpp"

namespace lexifair::testing {

/// Max subset sum of size j by enumerating every bitmask.
inline double brute_top_j(const std::vector<double>& v, int j) {
  const int K = static_cast<int>(v.size());
  double best = -std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << K); ++mask) {
    if (std::popcount(mask) != j) continue;
    double s = 0.0;
    for (int k = 0; k < K; ++k)
      if (mask & (1u << k)) s += v[static_cast<std::size_t>(k)];
    best = std::max(best, s);
  }
  return best;
}

/// Descending copy.
inline std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

/// Solves A x = b by Gaussian elimination with partial pivoting; nullopt
/// when A is (numerically) singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

inline std::vector<double> mixture(const LossMatrix& m, const std::vector<double>& p) {
  std::vector<double> e(static_cast<std::size_t>(m.rows()), 0.0);
  for (int k = 0; k < m.rows(); ++k)
    for (std::size_t h = 0; h < m.cols(); ++h) e[static_cast<std::size_t>(k)] += p[h] * m(k, h);
  return e;
}

/// Definition 1 taken literally: the lexicographic minimum of the sorted
/// (descending) error vector over all mixtures.
///
/// Inside the cell where the groups keep a fixed order the sorted vector is
/// linear in p, and a lexicographic minimum of linear objectives over a
/// polytope is attained at a vertex. So the minimum over the simplex is the
/// minimum over the vertices of every ordering cell. Vertices come from
/// choosing cols-1 tight inequalities among p_h >= 0 and the K-1 order
/// constraints, together with sum p = 1.
inline std::vector<double> definition1_gamma(const LossMatrix& m, double tol = 1e-9) {
  const int K = m.rows();
  const int H = static_cast<int>(m.cols());
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<std::vector<double>> best;
  auto lex_less = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] < b[i] - tol) return true;
      if (a[i] > b[i] + tol) return false;
    }
    return false;
  };
  auto consider = [&](const std::vector<double>& p) {
    auto s = sorted_desc(mixture(m, p));
    if (!best || lex_less(s, *best)) best = s;
  };
  // Inequality rows, each "row . p >= 0": p_h >= 0, then L_perm[i] - L_perm[i+1] >= 0.
  do {
    std::vector<std::vector<double>> ineq;
    for (int h = 0; h < H; ++h) {
      std::vector<double> row(static_cast<std::size_t>(H), 0.0);
      row[static_cast<std::size_t>(h)] = 1.0;
      ineq.push_back(row);
    }
    for (int i = 0; i + 1 < K; ++i) {
      std::vector<double> row(static_cast<std::size_t>(H));
      for (int h = 0; h < H; ++h) row[static_cast<std::size_t>(h)] = m(perm[static_cast<std::size_t>(i)], static_cast<std::size_t>(h)) - m(perm[static_cast<std::size_t>(i + 1)], static_cast<std::size_t>(h));
      ineq.push_back(row);
    }
    const int rows = static_cast<int>(ineq.size());
    const int need = H - 1;
    std::vector<int> pick(static_cast<std::size_t>(need));
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == need) {
        std::vector<std::vector<double>> a;
        std::vector<double> b;
        a.emplace_back(static_cast<std::size_t>(H), 1.0);
        b.push_back(1.0);
        for (int idx : pick) {
          a.push_back(ineq[static_cast<std::size_t>(idx)]);
          b.push_back(0.0);
        }
        auto x = solve_linear(a, b);
        if (!x) return;
        for (const auto& row : ineq) {
          double v = 0.0;
          for (int h = 0; h < H; ++h) v += row[static_cast<std::size_t>(h)] * (*x)[static_cast<std::size_t>(h)];
          if (v < -1e-9) return;
        }
        for (double& v : *x) v = std::max(0.0, v);
        const double s = std::accumulate(x->begin(), x->end(), 0.0);
        for (double& v : *x) v /= s;
        consider(*x);
        return;
      }
      for (int i = start; i < rows; ++i) {
        pick[static_cast<std::size_t>(depth)] = i;
        rec(i + 1, depth + 1);
      }
    };
    rec(0, 0);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return *best;
}

/// min over a grid of step `h` on the simplex of the top-1 error.
inline double grid_minimax(const LossMatrix& m, double h) {
  const int H = static_cast<int>(m.cols());
  const long steps = std::lround(1.0 / h);
  double best = std::numeric_limits<double>::infinity();
  std::vector<long> c(static_cast<std::size_t>(H), 0);
  std::function<void(int, long)> rec = [&](int idx, long left) {
    if (idx == H - 1) {
      c[static_cast<std::size_t>(idx)] = left;
      std::vector<double> p(static_cast<std::size_t>(H));
      for (int i = 0; i < H; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>(c[static_cast<std::size_t>(i)]) / static_cast<double>(steps);
      const auto e = mixture(m, p);
      best = std::min(best, *std::max_element(e.begin(), e.end()));
      return;
    }
    for (long v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(idx)] = v;
      rec(idx + 1, left - v);
    }
  };
  rec(0, steps);
  return best;
}

/// Random K x H matrix; with `coarse` entries are multiples of 0.1, which
/// produces ties between groups and between columns.
inline LossMatrix random_matrix(std::mt19937_64& rng, int K, int H, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> q(0, 10);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(H)));
  for (auto& r : rows)
    for (double& v : r) v = coarse ? q(rng) / 10.0 : u(rng);
  return LossMatrix::from_rows(rows);
}

/// Small dataset builder: rows of (features..., label) with 0-based groups.
inline GroupedDataset make_dataset(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                   const std::vector<std::vector<int>>& groups, int K) {
  return GroupedDataset(x, y, groups, K);
}

}  // namespace lexifair::testing
