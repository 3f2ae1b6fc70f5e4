#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/game.hpp"
#include "lexifair/online.hpp"
#include "lexifair/oracle.hpp"

namespace lexifair {

/// Per-point convex loss of a linear predictor z = theta . x, with bounds
/// certified for a given dataset and parameter ball.
///
/// kSquaredScaled: (z - y)^2 / s with s = (R X_max + Y_max)^2, where R is
/// the largest |theta| on the ball; L_M = 1, G = 2 X_max / (R X_max + Y_max).
/// kLogistic: log(1 + e^z) - y z for y in [0, 1];
/// L_M = log(1 + e^{R X_max}), G = X_max.
class ConvexLoss {
 public:
  enum class Kind { kSquaredScaled, kLogistic };

  ConvexLoss(Kind kind, const GroupedDataset& data, const ParamDomain& domain) : kind_(kind) {
    if (data.dim() != domain.dim()) throw std::invalid_argument("dataset and parameter domain differ in dimension");
    double x_max = 0.0, y_max = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double s = 0.0;
      for (double v : data.features(i)) s += v * v;
      x_max = std::max(x_max, std::sqrt(s));
      y_max = std::max(y_max, std::abs(data.label(i)));
    }
    const double r = domain.max_norm();
    if (kind == Kind::kSquaredScaled) {
      const double range = r * x_max + y_max;
      if (!(range > 0.0)) throw std::invalid_argument("squared loss needs a non-zero feature or label");
      scale_ = range * range;
      loss_bound_ = 1.0;
      grad_bound_ = 2.0 * x_max / range;
    } else {
      for (double y : data.labels())
        if (y < 0.0 || y > 1.0) throw std::invalid_argument("logistic loss needs labels in [0, 1]");
      loss_bound_ = std::log1p(std::exp(r * x_max));
      grad_bound_ = x_max;
    }
    if (!(grad_bound_ > 0.0)) grad_bound_ = 1e-300;  // all-zero features: every gradient is zero
  }

  /// Rebuilds a loss from recorded parameters, so a saved model is scored
  /// exactly as it was trained.
  static ConvexLoss restore(Kind kind, double scale, double loss_bound, double grad_bound) {
    if (!(scale > 0.0) || !(loss_bound > 0.0) || !(grad_bound > 0.0))
      throw std::invalid_argument("loss parameters must be positive");
    return ConvexLoss(kind, scale, loss_bound, grad_bound);
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double loss_bound() const { return loss_bound_; }
  double grad_bound() const { return grad_bound_; }

  /// Loss and dl/dz at prediction z.
  std::pair<double, double> eval(double z, double y) const {
    if (kind_ == Kind::kSquaredScaled) {
      const double r = z - y;
      return {r * r / scale_, 2.0 * r / scale_};
    }
    // log(1 + e^z) computed without overflow.
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    const double sigma = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return {std::max(0.0, softplus - y * z), sigma - y};
  }

  double point_loss(std::span<const double> theta, std::span<const double> x, double y) const {
    return eval(dot(theta, x), y).first;
  }

  static double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

 private:
  ConvexLoss(Kind kind, double scale, double lm, double g) : kind_(kind), scale_(scale), loss_bound_(lm), grad_bound_(g) {}

  Kind kind_;
  double scale_ = 1.0;
  double loss_bound_ = 1.0;
  double grad_bound_ = 1.0;
};

namespace detail {

/// Per-point predictions, losses and dl/dz at theta, with the certified
/// bounds enforced point by point.
struct PointEval {
  std::vector<double> loss;
  std::vector<double> slope;
};

inline void evaluate_points(std::span<const double> theta, const GroupedDataset& data, const ConvexLoss& loss,
                            PointEval& out) {
  out.loss.resize(data.size());
  out.slope.resize(data.size());
  const double lm = loss.loss_bound() * (1.0 + 1e-9) + 1e-12;
  const double gm = loss.grad_bound() * (1.0 + 1e-9) + 1e-12;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features(i);
    const auto [l, s] = loss.eval(ConvexLoss::dot(theta, x), data.label(i));
    if (!std::isfinite(l) || !std::isfinite(s)) throw BoundViolation("non-finite loss at point " + std::to_string(i));
    if (l > lm)
      throw BoundViolation("loss " + std::to_string(l) + " at point " + std::to_string(i) + " exceeds L_M = " +
                           std::to_string(loss.loss_bound()));
    const double gnorm = std::abs(s) * std::sqrt(ConvexLoss::dot(x, x));
    if (gnorm > gm)
      throw BoundViolation("gradient norm " + std::to_string(gnorm) + " at point " + std::to_string(i) +
                           " exceeds G = " + std::to_string(loss.grad_bound()));
    out.loss[i] = l;
    out.slope[i] = s;
  }
}

/// Group mean of a per-point quantity via the fixed-topology sum.
inline double group_mean(std::span<const double> values, const GroupedDataset& data, int k, std::vector<double>& buf) {
  const auto members = data.members(k);
  buf.clear();
  for (std::size_t i : members) buf.push_back(values[i]);
  return pairwise_sum(buf) / static_cast<double>(members.size());
}

/// Gradient of group k's mean loss from cached slopes.
inline void group_gradient(const PointEval& ev, const GroupedDataset& data, int k, std::span<double> grad,
                           std::vector<double>& buf) {
  const auto members = data.members(k);
  for (std::size_t f = 0; f < data.dim(); ++f) {
    buf.clear();
    for (std::size_t i : members) buf.push_back(ev.slope[i] * data.feature(i, f));
    grad[f] = pairwise_sum(buf) / static_cast<double>(members.size());
  }
}

}  // namespace detail

/// (L_k(theta), grad L_k(theta)) as group means over G_k.
inline std::pair<double, std::vector<double>> loss_and_gradient(std::span<const double> theta,
                                                                const GroupedDataset& data, int k,
                                                                const ConvexLoss& loss) {
  if (k < 0 || k >= data.num_groups()) throw std::invalid_argument("group index out of range");
  if (theta.size() != data.dim()) throw std::invalid_argument("parameter dimension mismatch");
  detail::PointEval ev;
  detail::evaluate_points(theta, data, loss, ev);
  std::vector<double> buf;
  std::vector<double> grad(data.dim());
  const double value = detail::group_mean(ev.loss, data, k, buf);
  detail::group_gradient(ev, data, k, grad, buf);
  return {value, std::move(grad)};
}

/// Group errors of a linear model.
inline GroupErrorVector linear_group_errors(std::span<const double> theta, const GroupedDataset& data,
                                            const ConvexLoss& loss) {
  return group_errors([&](std::size_t i) { return loss.point_loss(theta, data.features(i), data.label(i)); }, data);
}

struct RegRoundResult {
  std::vector<double> theta_hat;
  double eta_hat = 0.0;
  double step_theta = 0.0;      // eta
  double step_eta = 0.0;        // eta'
  double nu = 0.0;              // j (GD + L_M)(B + 1) / sqrt(T)
  double mean_lagrangian = 0.0; // average payoff over the T steps
  double learner_regret = 0.0;  // against the best fixed eta_j and theta_hat in hindsight
};

/// T steps of projected gradient descent on (theta, eta_j) against the
/// Auditor's best response, starting at the ball center and eta_j = j L_M / 2.
/// Returns the average play.
inline RegRoundResult reg_nr(long T, double B, const LagrangianContext& ctx, const GroupedDataset& data,
                             const ConvexLoss& loss, const ParamDomain& domain) {
  if (T < 1) throw std::invalid_argument("reg_nr needs T >= 1");
  if (!(B > 0.0)) throw std::invalid_argument("dual bound must be positive");
  if (std::abs(ctx.loss_bound - loss.loss_bound()) > 1e-12 * loss.loss_bound())
    throw std::invalid_argument("context loss bound differs from the loss's certified L_M");
  const int j = ctx.round;
  const int K = data.num_groups();
  const double lm = loss.loss_bound();
  const double G = loss.grad_bound();
  const double D = domain.diameter();
  const double sqrt_t = std::sqrt(static_cast<double>(T));

  RegRoundResult out;
  out.step_theta = D / (j * B * G * sqrt_t);
  out.step_eta = j * lm / ((1.0 + B) * sqrt_t);
  out.nu = j * (G * D + lm) * (B + 1.0) / sqrt_t;

  const std::size_t d = domain.dim();
  std::vector<double> theta(domain.center().begin(), domain.center().end());
  double eta = j * lm / 2.0;
  std::vector<double> theta_sum(d, 0.0), grad(d), gk(d), buf;
  double eta_sum = 0.0, payoff_sum = 0.0;
  // Hindsight comparator terms: sum_t w^t, sum_t c^t and sum_t C_j(lambda^t).
  LearnerWeights weight_sum = LearnerWeights::zeros(K);
  double const_sum = 0.0;
  detail::PointEval ev;
  std::vector<double> errs(static_cast<std::size_t>(K));

  for (long t = 1; t <= T; ++t) {
    for (std::size_t f = 0; f < d; ++f) theta_sum[f] += theta[f];
    eta_sum += eta;
    detail::evaluate_points(theta, data, loss, ev);
    for (int k = 0; k < K; ++k) errs[static_cast<std::size_t>(k)] = detail::group_mean(ev.loss, data, k, buf);
    const GroupErrorVector errors(errs);
    const auto lambda = auditor_best_response(errors, eta, ctx);
    payoff_sum += lagrangian_value(errors, eta, lambda, ctx);
    const auto lw = learner_weights(lambda, j, K);
    weight_sum += lw;
    const_sum += lagrangian_constant(lambda, ctx);

    std::fill(grad.begin(), grad.end(), 0.0);
    for (int k = 0; k < K; ++k) {
      const double w = lw.w[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      detail::group_gradient(ev, data, k, gk, buf);
      for (std::size_t f = 0; f < d; ++f) grad[f] += w * gk[f];
    }
    bool moved = false;
    for (double g : grad) moved = moved || g != 0.0;
    if (moved) theta = ogd_step(theta, grad, out.step_theta, domain);
    eta = interval_step(eta, lw.c, out.step_eta, 0.0, j * lm);
  }

  const double Td = static_cast<double>(T);
  out.theta_hat.resize(d);
  for (std::size_t f = 0; f < d; ++f) out.theta_hat[f] = theta_sum[f] / Td;
  domain.project(out.theta_hat);
  out.eta_hat = eta_sum / Td;
  out.mean_lagrangian = payoff_sum / Td;

  // The payoff is linear in (errors, eta_j) given the duals, so the best fixed
  // eta_j sits at an endpoint. theta_hat stands in for the best fixed model.
  const auto avg_errors = linear_group_errors(out.theta_hat, data, loss);
  double model_term = 0.0;
  for (int k = 0; k < K; ++k) model_term += weight_sum.w[static_cast<std::size_t>(k)] * avg_errors[k];
  const double best_eta_term = std::min(0.0, weight_sum.c * j * lm);
  out.learner_regret = payoff_sum - (model_term + best_eta_term + const_sum);
  return out;
}

struct RegressionOutcome {
  std::vector<double> theta_hat;
  EtaSchedule eta_schedule{1.0};
  std::vector<RoundSchedule> schedule;
  std::vector<RegRoundResult> rounds;
  GroupErrorVector errors;  // of theta_hat on the training data
};

/// Rounds j = 1..ell of the regression driver. The config's loss_bound,
/// grad_bound and diameter must match the loss and domain.
inline RegressionOutcome lexifair_reg(const GroupedDataset& data, const RunConfig& cfg, const ConvexLoss& loss,
                                      const ParamDomain& domain) {
  cfg.validate(data.num_groups());
  auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  if (!tol(cfg.loss_bound, loss.loss_bound()) || !tol(cfg.grad_bound, loss.grad_bound()) ||
      !tol(cfg.diameter, domain.diameter()))
    throw std::invalid_argument("config bounds (L_M, G, D) differ from the loss and domain");
  RegressionOutcome out;
  out.eta_schedule = EtaSchedule(loss.loss_bound());
  for (int j = 1; j <= cfg.ell; ++j) {
    const auto sched = regression_schedule(cfg, j);
    LagrangianContext ctx(j, out.eta_schedule, sched.dual_bound, loss.loss_bound());
    auto res = reg_nr(sched.iterations, sched.dual_bound, ctx, data, loss, domain);
    out.eta_schedule.push(res.eta_hat);
    out.theta_hat = res.theta_hat;
    out.schedule.push_back(sched);
    out.rounds.push_back(std::move(res));
  }
  out.errors = linear_group_errors(out.theta_hat, data, loss);
  return out;
}

/// RunConfig bounds filled from a certified loss and domain.
inline RunConfig with_regression_bounds(RunConfig cfg, const ConvexLoss& loss, const ParamDomain& domain) {
  cfg.loss_bound = loss.loss_bound();
  cfg.grad_bound = loss.grad_bound();
  cfg.diameter = domain.diameter();
  return cfg;
}

/// Grid points of spacing h inside the ball.
inline std::vector<std::vector<double>> ball_grid(const ParamDomain& domain, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  const std::size_t d = domain.dim();
  const long steps = static_cast<long>(std::floor(domain.radius() / h + 1e-9));
  std::vector<std::vector<double>> out;
  std::vector<long> idx(d, -steps);
  for (;;) {
    std::vector<double> p(d);
    for (std::size_t f = 0; f < d; ++f) p[f] = domain.center()[f] + static_cast<double>(idx[f]) * h;
    if (domain.contains(p, 1e-12)) out.push_back(std::move(p));
    std::size_t f = 0;
    while (f < d && idx[f] == steps) idx[f++] = -steps;
    if (f == d) break;
    ++idx[f];
  }
  return out;
}

/// Group-loss table over a parameter grid.
inline LossMatrix theta_grid_loss_matrix(const GroupedDataset& data, const ConvexLoss& loss,
                                         const std::vector<std::vector<double>>& grid) {
  std::vector<std::vector<double>> columns;
  columns.reserve(grid.size());
  for (const auto& theta : grid) {
    const auto ev = linear_group_errors(theta, data, loss);
    columns.emplace_back(ev.errors().begin(), ev.errors().end());
  }
  return LossMatrix::from_columns(columns);
}

}  // namespace lexifair
