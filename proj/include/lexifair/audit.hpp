#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/oracle.hpp"

namespace lexifair {

enum class Verdict { kPass, kFail, kUnverified };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kUnverified: return "unverified";
  }
  return "unverified";
}

/// Solver parameters of the round that produced the model, used for the
/// reported bound top_r <= eta_r + (j L_M + 2 nu) / B.
struct RoundParameters {
  int round = 1;
  double dual_bound = 1.0;
  double loss_bound = 1.0;
  std::optional<double> nu;
};

struct LexifairCertificate {
  double alpha = 0.0;
  int ell = 1;
  std::vector<double> eta;
  std::optional<std::vector<double>> opt;
  std::vector<double> slack;       // eta_r - OPT_r, empty without an oracle
  std::vector<double> errors;      // per-group model errors
  std::vector<double> top_sums;    // top_r sums of the model errors, r <= ell
  std::vector<double> theorem_bound;  // eta_r + (j L_M + 2 nu) / B, when nu is known
  std::vector<bool> slack_ok;
  std::vector<bool> level_ok;      // top_r <= OPT_r + slack_r + alpha
  bool schedule_ok = true;         // top_r <= eta_r + alpha, checked even without an oracle
  std::optional<RoundParameters> parameters;
  Verdict verdict = Verdict::kUnverified;
};

/// Pass iff for every r <= ell the slack eta_r - OPT_r is at most alpha and
/// the model's top-r sum is at most OPT_r + slack_r + alpha. Both
/// comparisons carry an absolute tolerance of 1e-12.
inline LexifairCertificate certify(const GroupErrorVector& model_errors, const EtaSchedule& eta,
                                   const std::optional<std::vector<double>>& oracle_opts, double alpha, int ell,
                                   std::optional<RoundParameters> params = std::nullopt) {
  constexpr double kTol = 1e-12;
  if (ell < 1 || ell > model_errors.size()) throw std::invalid_argument("ell outside [1, K]");
  if (eta.size() != static_cast<std::size_t>(ell)) throw std::invalid_argument("eta schedule length differs from ell");
  if (oracle_opts && oracle_opts->size() != static_cast<std::size_t>(ell))
    throw std::invalid_argument("oracle values length differs from ell");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");

  LexifairCertificate c;
  c.alpha = alpha;
  c.ell = ell;
  c.eta.assign(eta.values().begin(), eta.values().end());
  c.opt = oracle_opts;
  c.errors.assign(model_errors.errors().begin(), model_errors.errors().end());
  c.top_sums = top_sums(model_errors, ell);
  c.parameters = params;
  if (params && params->nu) {
    const double extra = (params->round * params->loss_bound + 2.0 * *params->nu) / params->dual_bound;
    for (double e : c.eta) c.theorem_bound.push_back(e + extra);
  }
  for (int r = 0; r < ell; ++r)
    c.schedule_ok = c.schedule_ok && c.top_sums[static_cast<std::size_t>(r)] <= c.eta[static_cast<std::size_t>(r)] + alpha + kTol;
  if (!oracle_opts) {
    c.verdict = Verdict::kUnverified;
    return c;
  }
  bool pass = true;
  for (int r = 0; r < ell; ++r) {
    const auto i = static_cast<std::size_t>(r);
    const double s = c.eta[i] - (*oracle_opts)[i];
    c.slack.push_back(s);
    c.slack_ok.push_back(s <= alpha + kTol);
    c.level_ok.push_back(c.top_sums[i] <= (*oracle_opts)[i] + s + alpha + kTol);
    pass = pass && c.slack_ok.back() && c.level_ok.back();
  }
  c.verdict = pass ? Verdict::kPass : Verdict::kFail;
  return c;
}

struct GeneralizationReport {
  double alpha = 0.0;
  int ell = 1;
  std::vector<double> train_errors;
  std::vector<std::optional<double>> test_errors;  // nullopt: group absent from the test set
  std::vector<std::optional<double>> gaps;
  double beta_hat = 0.0;
  double alpha_prime = 0.0;
  double rate_constant = 3.0;
  double rate_bound = 0.0;         // rate_constant * sqrt((log(K/delta) + d_H log n) / min n_k)
  bool within_rate = false;
  double required_group_size = 0.0;  // ell^2 (d_H log n + log(K/delta)) / alpha^2
  std::size_t train_min_group = 0;
  std::size_t test_min_group = 0;
  std::vector<std::string> flags;
};

struct GapParameters {
  double alpha = 0.1;
  int ell = 1;
  double delta = 0.1;
  double vc_dimension = 2.0;
  double rate_constant = 3.0;
};

/// Train/test gap of one model from its per-group errors on each sample.
/// Test groups with no members carry nullopt and are flagged.
inline GeneralizationReport generalization_gap(const std::vector<double>& train_errors,
                                               const std::vector<std::optional<double>>& test_errors,
                                               const GroupedDataset& train, const GroupedDataset& test,
                                               const GapParameters& p) {
  const int K = train.num_groups();
  if (test.num_groups() != K || test.dim() != train.dim())
    throw std::invalid_argument("train and test differ in group count or dimension");
  if (train_errors.size() != static_cast<std::size_t>(K) || test_errors.size() != static_cast<std::size_t>(K))
    throw std::invalid_argument("error vectors differ from the group count");
  if (p.ell < 1 || p.ell > K) throw std::invalid_argument("ell outside [1, K]");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");

  GeneralizationReport r;
  r.alpha = p.alpha;
  r.ell = p.ell;
  r.rate_constant = p.rate_constant;
  r.train_errors = train_errors;
  r.test_errors = test_errors;
  for (int k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (test_errors[i]) {
      const double g = std::abs(train_errors[i] - *test_errors[i]);
      r.gaps.emplace_back(g);
      r.beta_hat = std::max(r.beta_hat, g);
    } else {
      r.gaps.emplace_back(std::nullopt);
      r.flags.push_back("group_absent_from_test:" + std::to_string(k + 1));
    }
  }
  r.alpha_prime = p.alpha + 2.0 * p.ell * r.beta_hat;

  const double n = static_cast<double>(train.size());
  r.train_min_group = train.size();
  for (int k = 0; k < K; ++k) r.train_min_group = std::min(r.train_min_group, train.group_size(k));
  r.test_min_group = test.size();
  for (int k = 0; k < K; ++k) r.test_min_group = std::min(r.test_min_group, test.group_size(k));
  const double complexity = std::log(K / p.delta) + p.vc_dimension * std::log(n);
  r.rate_bound = p.rate_constant * std::sqrt(complexity / static_cast<double>(std::max<std::size_t>(1, r.train_min_group)));
  r.within_rate = r.beta_hat <= r.rate_bound;
  r.required_group_size = p.ell * p.ell * complexity / (p.alpha * p.alpha);
  if (static_cast<double>(r.train_min_group) < r.required_group_size) r.flags.push_back("train_sample_shortfall");
  if (static_cast<double>(r.test_min_group) < r.required_group_size) r.flags.push_back("test_sample_shortfall");
  return r;
}

/// Per-group errors on an evaluation set that may lack some groups.
template <class PointLoss>
std::vector<std::optional<double>> partial_group_errors(PointLoss&& point_loss, const GroupedDataset& data) {
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) losses[i] = point_loss(i);
  std::vector<std::optional<double>> out;
  std::vector<double> buf;
  for (int k = 0; k < data.num_groups(); ++k) {
    const auto members = data.members(k);
    if (members.empty()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    buf.clear();
    for (std::size_t i : members) buf.push_back(losses[i]);
    out.emplace_back(pairwise_sum(buf) / static_cast<double>(members.size()));
  }
  return out;
}

struct InstabilityReport {
  double alpha = 0.05;
  std::vector<std::vector<double>> matrix;  // rows are groups, columns h1 and h2
  std::vector<double> gamma;                // exact lexifair values
  std::vector<double> uniform_mixture_errors;
  double relaxed_third = 0.0;               // level-3 value after loosening level 1 by alpha
  double uniform_top1_excess = 0.0;         // uniform mixture's top error minus gamma_1
  double uniform_third_gap = 0.0;           // its third-highest error minus gamma_3
};

/// Two classifiers on three groups: h1 = (0.5, 0.5, 0), h2 = (0.5 + 2 alpha, 0, 0.5).
/// Only h1 attains the minimax value, while the uniform mixture is within
/// alpha of it and still has its lowest error far from gamma_3.
inline InstabilityReport instability_demo(double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 0.25)) throw std::invalid_argument("alpha must lie in (0, 0.25)");
  InstabilityReport r;
  r.alpha = alpha;
  r.matrix = {{0.5, 0.5 + 2.0 * alpha}, {0.5, 0.0}, {0.0, 0.5}};
  const auto m = LossMatrix::from_rows(r.matrix);
  const auto truth = exact_lexifair_lp(m, 3);
  r.gamma = truth.gamma;
  r.uniform_mixture_errors = m.mixture_errors({0.5, 0.5});
  r.relaxed_third = relaxed_third_level(m, alpha);
  const GroupErrorVector uev(r.uniform_mixture_errors);
  r.uniform_top1_excess = uev.sorted(1) - r.gamma[0];
  r.uniform_third_gap = uev.sorted(3) - r.gamma[2];
  return r;
}

}  // namespace lexifair
