#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexifair/core.hpp"

namespace lexifair {

/// Fixed data of the round-j game: the earlier level estimates, the dual
/// bound B and the loss bound L_M.
struct LagrangianContext {
  int round = 1;
  EtaSchedule history{1.0};  // eta_1 .. eta_{j-1}
  double bound = 1.0;
  double loss_bound = 1.0;

  LagrangianContext(int j, EtaSchedule prev, double b, double lm)
      : round(j), history(std::move(prev)), bound(b), loss_bound(lm) {
    if (j < 1) throw InvariantViolation("round must be at least 1");
    if (history.size() != static_cast<std::size_t>(j - 1))
      throw InvariantViolation("round " + std::to_string(j) + " needs " + std::to_string(j - 1) +
                               " earlier estimates, got " + std::to_string(history.size()));
    if (!(b > 0.0)) throw InvariantViolation("dual bound must be positive");
    if (!(lm > 0.0)) throw InvariantViolation("loss bound must be positive");
  }

  /// eta_r for r < j from the history, eta_j from the caller's play.
  double level_value(int r, double eta_j) const {
    if (r == round) return eta_j;
    if (r < 1 || r > round) throw InvariantViolation("level " + std::to_string(r) + " outside the round");
    return history[r];
  }

  void check_eta(double eta_j) const {
    const double hi = round * loss_bound;
    if (!(eta_j >= -1e-12 && eta_j <= hi * (1.0 + 1e-12) + 1e-12))
      throw std::invalid_argument("eta_j = " + std::to_string(eta_j) + " outside [0, " + std::to_string(hi) + "]");
  }
};

/// Per-group weights of the Learner's model term and the coefficient of eta_j.
/// Linear in the dual, so cumulative play is the sum of per-round weights.
struct LearnerWeights {
  std::vector<double> w;
  double c = 0.0;

  LearnerWeights() = default;
  LearnerWeights(std::vector<double> weights, double coeff) : w(std::move(weights)), c(coeff) {}

  static LearnerWeights zeros(int num_groups) { return {std::vector<double>(static_cast<std::size_t>(num_groups), 0.0), 0.0}; }

  LearnerWeights& operator+=(const LearnerWeights& o) {
    if (o.w.size() != w.size()) throw std::invalid_argument("learner weights differ in length");
    for (std::size_t r = 0; r < w.size(); ++r) w[r] += o.w[r];
    c += o.c;
    return *this;
  }
};

/// The Lagrangian eta_j + sum over atoms of mass * (sum of errors in the atom - eta_{|atom|}).
inline double lagrangian_value(const GroupErrorVector& errors, double eta_j, const DualVector& lambda,
                               const LagrangianContext& ctx) {
  if (lambda.round() != ctx.round) throw InvariantViolation("dual belongs to a different round");
  double value = eta_j;
  for (const auto& [subset, mass] : lambda.atoms()) {
    const int r = static_cast<int>(subset.size());
    if (r > ctx.round) throw InvariantViolation("atom cardinality exceeds the round");
    double s = 0.0;
    for (int g : subset) s += errors[g];
    value += mass * (s - ctx.level_value(r, eta_j));
  }
  return value;
}

/// Auditor's exact best response: the zero dual if no top-r constraint is
/// violated, otherwise all mass B on the top r* groups for the most violated
/// r* (smallest r* on ties).
inline DualVector auditor_best_response(const GroupErrorVector& errors, double eta_j, const LagrangianContext& ctx) {
  ctx.check_eta(eta_j);
  const int j = ctx.round;
  if (j > errors.size()) throw std::invalid_argument("round exceeds the number of groups");
  const auto sums = top_sums(errors, j);
  int best_r = 0;
  double best_violation = 0.0;
  for (int r = 1; r <= j; ++r) {
    const double v = sums[static_cast<std::size_t>(r - 1)] - ctx.level_value(r, eta_j);
    if (v > best_violation) {
      best_violation = v;
      best_r = r;
    }
  }
  if (best_r == 0) return DualVector::zero(ctx.bound, j);
  const auto order = errors.sorted_view();
  GroupSubset top(order.begin(), order.begin() + best_r);
  return DualVector::single(std::move(top), ctx.bound, j);
}

/// w_r = total mass of atoms containing r; c = 1 - total mass of atoms of size j.
inline LearnerWeights learner_weights(const DualVector& lambda, int j, int num_groups) {
  LearnerWeights out(std::vector<double>(static_cast<std::size_t>(num_groups), 0.0), 1.0);
  for (const auto& [subset, mass] : lambda.atoms()) {
    for (int g : subset) {
      if (g < 0 || g >= num_groups) throw InvariantViolation("atom group outside [0, K)");
      out.w[static_cast<std::size_t>(g)] += mass;
    }
    if (static_cast<int>(subset.size()) == j) out.c -= mass;
  }
  return out;
}

/// The part of the Lagrangian that depends on neither the model nor eta_j:
/// minus the sum over atoms of size < j of mass * eta_{|atom|}.
inline double lagrangian_constant(const DualVector& lambda, const LagrangianContext& ctx) {
  double c = 0.0;
  for (const auto& [subset, mass] : lambda.atoms()) {
    const int r = static_cast<int>(subset.size());
    if (r < ctx.round) c -= mass * ctx.history[r];
  }
  return c;
}

}  // namespace lexifair
