#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/game.hpp"
#include "lexifair/online.hpp"
#include "lexifair/oracle.hpp"
#include "lexifair/parallel.hpp"

namespace lexifair {

/// A constant classifier or a decision stump on one feature.
struct BaseClassifier {
  enum class Kind { kConstant, kStump };
  /// kLeqOne predicts 1 when x_f <= threshold; kLeqZero predicts 0 there.
  enum class Polarity { kLeqOne, kLeqZero };

  Kind kind = Kind::kConstant;
  int constant = 0;  // kConstant only
  int feature = 0;   // kStump only
  double threshold = 0.0;
  Polarity polarity = Polarity::kLeqOne;

  static BaseClassifier constant_of(int value) {
    if (value != 0 && value != 1) throw InvariantViolation("constant classifier must predict 0 or 1");
    BaseClassifier h;
    h.constant = value;
    return h;
  }

  static BaseClassifier stump(int feature, double threshold, Polarity polarity) {
    if (feature < 0) throw InvariantViolation("stump feature index must be non-negative");
    if (!std::isfinite(threshold)) throw InvariantViolation("stump threshold must be finite");
    BaseClassifier h;
    h.kind = Kind::kStump;
    h.feature = feature;
    h.threshold = threshold;
    h.polarity = polarity;
    return h;
  }

  int predict(std::span<const double> x) const {
    if (kind == Kind::kConstant) return constant;
    const bool below = x[static_cast<std::size_t>(feature)] <= threshold;
    return (below == (polarity == Polarity::kLeqOne)) ? 1 : 0;
  }

  /// Tie order of the CSC oracle: constants (0 before 1), then stumps by
  /// feature, threshold and polarity.
  auto key() const {
    return std::make_tuple(kind == Kind::kConstant ? 0 : 1, kind == Kind::kConstant ? constant : 0,
                           kind == Kind::kStump ? feature : 0, kind == Kind::kStump ? threshold : 0.0,
                           kind == Kind::kStump ? static_cast<int>(polarity) : 0);
  }
  friend bool operator<(const BaseClassifier& a, const BaseClassifier& b) { return a.key() < b.key(); }
  friend bool operator==(const BaseClassifier& a, const BaseClassifier& b) { return a.key() == b.key(); }
};

/// Zero-one group errors of a deterministic classifier.
inline GroupErrorVector classifier_group_errors(const BaseClassifier& h, const GroupedDataset& data) {
  return group_errors(
      [&](std::size_t i) { return h.predict(data.features(i)) == static_cast<int>(data.label(i)) ? 0.0 : 1.0; }, data);
}

/// Finite-support distribution over base classifiers, support kept sorted in
/// tie order with no duplicates.
class RandomizedClassifier {
 public:
  RandomizedClassifier(std::vector<BaseClassifier> support, std::vector<double> weights) {
    if (support.empty()) throw InvariantViolation("randomized classifier needs a non-empty support");
    if (support.size() != weights.size()) throw InvariantViolation("support and weights differ in length");
    std::map<BaseClassifier, double> merged;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
        throw InvariantViolation("classifier weights must be finite and non-negative");
      merged[support[i]] += weights[i];
    }
    double total = 0.0;
    for (const auto& [h, w] : merged) total += w;
    if (std::abs(total - 1.0) > 1e-12) throw InvariantViolation("classifier weights must sum to 1");
    for (const auto& [h, w] : merged) {
      if (w == 0.0) continue;
      support_.push_back(h);
      weights_.push_back(w);
    }
  }

  static RandomizedClassifier point_mass(const BaseClassifier& h) { return RandomizedClassifier({h}, {1.0}); }

  /// Uniform empirical distribution over draws; duplicates merged by count.
  static RandomizedClassifier from_draws(std::span<const BaseClassifier> draws) {
    if (draws.empty()) throw InvariantViolation("no draws to merge");
    std::map<BaseClassifier, std::size_t> counts;
    for (const auto& h : draws) ++counts[h];
    std::vector<BaseClassifier> support;
    std::vector<double> weights;
    const double m = static_cast<double>(draws.size());
    for (const auto& [h, c] : counts) {
      support.push_back(h);
      weights.push_back(static_cast<double>(c) / m);
    }
    return RandomizedClassifier(std::move(support), std::move(weights));
  }

  std::span<const BaseClassifier> support() const { return support_; }
  std::span<const double> weights() const { return weights_; }

  /// Probability of predicting 1.
  double predict_proba(std::span<const double> x) const {
    double p = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) p += weights_[i] * support_[i].predict(x);
    return p;
  }

  /// Expected zero-one group errors, the weight average of the support's.
  GroupErrorVector group_errors_on(const GroupedDataset& data) const {
    std::vector<double> e(static_cast<std::size_t>(data.num_groups()), 0.0);
    for (std::size_t i = 0; i < support_.size(); ++i) {
      const auto ev = classifier_group_errors(support_[i], data);
      for (int k = 0; k < data.num_groups(); ++k) e[static_cast<std::size_t>(k)] += weights_[i] * ev[k];
    }
    return GroupErrorVector(std::move(e));
  }

 private:
  std::vector<BaseClassifier> support_;
  std::vector<double> weights_;
};

struct CscResult {
  BaseClassifier classifier;
  double objective = 0.0;
  std::size_t member = 0;  // position in StumpFamily::members()
};

/// Decision stumps plus the two constants on a fixed dataset. Thresholds are
/// one below the smallest value, midpoints between consecutive distinct
/// values and one above the largest, which realizes every stump labeling.
class StumpFamily {
 public:
  explicit StumpFamily(const GroupedDataset& data) : n_(data.size()), dim_(data.dim()) {
    order_.resize(dim_);
    thresholds_.resize(dim_);
    group_end_.resize(dim_);
    for (std::size_t f = 0; f < dim_; ++f) {
      auto& ord = order_[f];
      ord.resize(n_);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::size_t a, std::size_t b) { return data.feature(a, f) < data.feature(b, f); });
      std::vector<double> distinct;
      auto& ends = group_end_[f];
      for (std::size_t pos = 0; pos < n_; ++pos) {
        const double v = data.feature(ord[pos], f);
        if (distinct.empty() || v != distinct.back()) {
          if (!distinct.empty()) ends.push_back(pos);
          distinct.push_back(v);
        }
      }
      ends.push_back(n_);
      auto& th = thresholds_[f];
      th.push_back(distinct.front() - 1.0);
      for (std::size_t u = 0; u + 1 < distinct.size(); ++u) th.push_back(distinct[u] + (distinct[u + 1] - distinct[u]) / 2.0);
      th.push_back(distinct.back() + 1.0);
    }
  }

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  /// Candidate thresholds of feature f, ascending.
  std::span<const double> thresholds(std::size_t f) const { return thresholds_[f]; }

  /// Every member of the family, in tie order.
  std::vector<BaseClassifier> members() const {
    std::vector<BaseClassifier> out{BaseClassifier::constant_of(0), BaseClassifier::constant_of(1)};
    for (std::size_t f = 0; f < dim_; ++f)
      for (double thr : thresholds_[f])
        for (auto pol : {BaseClassifier::Polarity::kLeqOne, BaseClassifier::Polarity::kLeqZero})
          out.push_back(BaseClassifier::stump(static_cast<int>(f), thr, pol));
    return out;
  }

  /// Exact argmin of sum_i costs[i] * h(x_i). A candidate replaces the
  /// incumbent only when strictly better by 1e-12 (1 + sum |c|), so ties go
  /// to the earliest member in tie order.
  CscResult best(std::span<const double> costs) const {
    if (costs.size() != n_) throw std::invalid_argument("cost vector length differs from the dataset");
    double total = 0.0, abs_total = 0.0;
    for (double c : costs) {
      if (!std::isfinite(c)) throw std::invalid_argument("non-finite cost");
      total += c;
      abs_total += std::abs(c);
    }
    const double tol = 1e-12 * (1.0 + abs_total);
    double best_obj = 0.0;
    std::size_t best_member = 0;
    auto offer = [&](double obj, std::size_t member) {
      if (obj < best_obj - tol) {
        best_obj = obj;
        best_member = member;
      }
    };
    offer(total, 1);
    std::size_t member = 2;
    for (std::size_t f = 0; f < dim_; ++f) {
      const auto& ord = order_[f];
      const auto& ends = group_end_[f];
      const auto& th = thresholds_[f];
      double prefix = 0.0;  // cost of points with x_f <= th[u]
      std::size_t pos = 0;
      for (std::size_t u = 0; u < th.size(); ++u, member += 2) {
        if (u > 0)
          for (; pos < ends[u - 1]; ++pos) prefix += costs[ord[pos]];
        offer(prefix, member);
        offer(total - prefix, member + 1);
      }
    }
    return {member_at(best_member), best_obj, best_member};
  }

  std::size_t num_members() const {
    std::size_t count = 2;
    for (const auto& th : thresholds_) count += 2 * th.size();
    return count;
  }

  /// members()[index] without building the whole list.
  BaseClassifier member_at(std::size_t index) const {
    if (index < 2) return BaseClassifier::constant_of(static_cast<int>(index));
    std::size_t rest = index - 2;
    for (std::size_t f = 0; f < dim_; ++f) {
      const std::size_t span = 2 * thresholds_[f].size();
      if (rest < span)
        return BaseClassifier::stump(static_cast<int>(f), thresholds_[f][rest / 2],
                                     rest % 2 == 0 ? BaseClassifier::Polarity::kLeqOne
                                                   : BaseClassifier::Polarity::kLeqZero);
      rest -= span;
    }
    throw std::out_of_range("stump family member index out of range");
  }

 private:
  std::size_t n_, dim_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<std::vector<std::size_t>> group_end_;  // end of each distinct-value run in order_
};

inline CscResult csc_oracle(std::span<const double> costs, const StumpFamily& family) { return family.best(costs); }

/// Distinct labelings the family induces on the dataset, each with the first
/// member (in tie order) that realizes it.
struct Labeling {
  BaseClassifier representative;
  std::vector<std::uint8_t> labels;
};

inline std::vector<Labeling> enumerate_labelings(const GroupedDataset& data, const StumpFamily& family) {
  std::vector<Labeling> out;
  std::set<std::vector<std::uint8_t>> seen;
  for (const auto& h : family.members()) {
    std::vector<std::uint8_t> lab(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) lab[i] = static_cast<std::uint8_t>(h.predict(data.features(i)));
    if (seen.insert(lab).second) out.push_back({h, std::move(lab)});
  }
  return out;
}

/// Zero-one loss table over the induced labelings, with columns that share
/// a group-error vector collapsed to one.
inline LossMatrix labeling_loss_matrix(const GroupedDataset& data, const StumpFamily& family) {
  std::vector<std::vector<double>> columns;
  std::set<std::vector<double>> seen;
  for (const auto& lab : enumerate_labelings(data, family)) {
    const auto ev = classifier_group_errors(lab.representative, data);
    std::vector<double> col(ev.errors().begin(), ev.errors().end());
    if (seen.insert(col).second) columns.push_back(std::move(col));
  }
  return LossMatrix::from_columns(columns);
}

/// Per-point costs c_i = (1 - 2 y_i) sum_{r : i in G_r} w_r / n_r and the
/// coefficient of eta_j.
struct CostVector {
  std::vector<double> c;
  double c_coeff = 1.0;
};

inline CostVector cost_vector(const LearnerWeights& weights, const GroupedDataset& data) {
  if (weights.w.size() != static_cast<std::size_t>(data.num_groups()))
    throw std::invalid_argument("learner weights do not match the group count");
  CostVector out;
  out.c.resize(data.size());
  out.c_coeff = weights.c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = 0.0;
    for (int r : data.memberships(i))
      s += weights.w[static_cast<std::size_t>(r)] / static_cast<double>(data.group_size(r));
    out.c[i] = (1.0 - 2.0 * data.label(i)) * s;
  }
  return out;
}

inline CostVector cost_vector(const DualVector& lambda, const GroupedDataset& data, int j) {
  return cost_vector(learner_weights(lambda, j, data.num_groups()), data);
}

/// Small counter-seeded generator for the per-call perturbations. Seeding is
/// a single word, so each oracle call can own an independent stream cheaply.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// One perturbed oracle call: argmin of sum (c_i + xi_i / eta) h(x_i) with
/// xi ~ U[0,1]^n drawn from `stream`.
inline CscResult ftpl_call(std::span<const double> costs, double eta, const StumpFamily& family, std::uint64_t stream,
                           std::vector<double>& scratch) {
  SplitMix64 gen(stream);
  scratch.resize(costs.size());
  const double scale = 1.0 / eta;
  for (std::size_t i = 0; i < costs.size(); ++i) scratch[i] = costs[i] + gen.uniform01() * scale;
  return family.best(scratch);
}

inline BaseClassifier ftpl_draw(std::span<const double> costs, double eta, const StumpFamily& family,
                                std::uint64_t stream) {
  std::vector<double> scratch;
  return ftpl_call(costs, eta, family, stream, scratch).classifier;
}

/// m independent perturbed oracle calls at the cumulative costs, merged into
/// an empirical distribution. Call s uses stream (seed, round, step, s).
inline RandomizedClassifier ftpl_sample(const CostVector& cumulative, double eta, long m, const StumpFamily& family,
                                        std::uint64_t seed, int round, long step) {
  if (m < 1) throw std::invalid_argument("ftpl_sample needs m >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("FTPL learning rate must be positive");
  std::vector<BaseClassifier> draws(static_cast<std::size_t>(m));
  parallel_for(draws.size(), [&](std::size_t s) {
    draws[s] = ftpl_draw(cumulative.c, eta, family,
                         stream_seed(seed, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(step), s));
  });
  return RandomizedClassifier::from_draws(draws);
}

/// The Learner's eta_j play j * Bern(q).
struct EtaPlay {
  int scale = 1;
  double q = 0.0;
  double mean() const { return scale * q; }
};

/// q = min(1, -eta' C) when C <= 0 and q = 0 otherwise, for the cumulative
/// eta_j coefficient C.
inline EtaPlay eta_play(double cumulative_coeff, double eta_prime, int j) {
  if (!(eta_prime > 0.0)) throw std::invalid_argument("eta' must be positive");
  EtaPlay d;
  d.scale = j;
  d.q = cumulative_coeff <= 0.0 ? std::min(1.0, -eta_prime * cumulative_coeff) : 0.0;
  return d;
}

struct ClfStep {
  std::vector<double> errors;  // group errors of the empirical play
  double eta_mean = 0.0;       // E[D^t]
  DualVector response{1.0, 1};
};

struct ClfRoundResult {
  RandomizedClassifier p_hat = RandomizedClassifier::point_mass(BaseClassifier::constant_of(0));
  double eta_hat = 0.0;
  double learning_rate = 0.0;        // eta
  double eta_learning_rate = 0.0;    // eta'
  std::vector<ClfStep> trace;        // filled when requested
};

/// T rounds of FTPL-vs-best-response dynamics for round j, then m draws from
/// the average FTPL distribution (uniform step t, one perturbed call at the
/// cumulative dual after step t).
///
/// The eta_j coefficient accumulates the per-step coefficients
/// c(lambda^s) = 1 - (mass of size-j atoms of lambda^s), matching the
/// cumulative loss FTPL needs.
inline ClfRoundResult clf_nr(long T, double B, long m, const LagrangianContext& ctx, const GroupedDataset& data,
                             const StumpFamily& family, std::uint64_t seed, bool record_trace = false) {
  if (T < 1 || m < 1) throw std::invalid_argument("clf_nr needs T >= 1 and m >= 1");
  if (family.size() != data.size()) throw std::invalid_argument("family built on a different dataset");
  const int j = ctx.round;
  const int K = data.num_groups();
  if (j > K) throw std::invalid_argument("round exceeds the number of groups");
  const double n = static_cast<double>(data.size());
  const double n_min = static_cast<double>(data.min_group_size());
  const double Td = static_cast<double>(T);

  ClfRoundResult out;
  out.learning_rate = (n_min / B) * std::sqrt(1.0 / (n * Td));
  out.eta_learning_rate = (1.0 / (1.0 + B)) * std::sqrt(1.0 / Td);

  // Group errors of every family member, so a step's play costs m oracle
  // calls plus an average of cached rows.
  const std::size_t members = family.num_members();
  std::vector<std::vector<double>> member_errors(members);
  for (std::size_t h = 0; h < members; ++h) {
    const auto ev = classifier_group_errors(family.member_at(h), data);
    member_errors[h].assign(ev.errors().begin(), ev.errors().end());
  }

  // The final draws' steps are fixed up front so only their cost vectors are kept.
  const auto draws_n = static_cast<std::size_t>(m);
  std::vector<std::uint64_t> streams(draws_n);
  std::map<long, std::vector<double>> kept_costs;
  std::vector<long> pick_step(draws_n);
  for (std::size_t s = 0; s < draws_n; ++s) {
    streams[s] = stream_seed(seed, static_cast<std::uint64_t>(j), 0, s);
    SplitMix64 pick(streams[s] ^ 0x5bd1e995ULL);
    pick_step[s] = static_cast<long>(pick() % static_cast<std::uint64_t>(T)) + 1;
    kept_costs[pick_step[s]];
  }

  // Step 1 plays constant 0 (member 0) and eta = 0.
  std::vector<std::size_t> drawn(1, 0);
  EtaPlay d{j, 0.0};
  LearnerWeights cumulative = LearnerWeights::zeros(K);
  double eta_sum = 0.0;
  std::vector<double> e(static_cast<std::size_t>(K));

  for (long t = 1; t <= T; ++t) {
    std::fill(e.begin(), e.end(), 0.0);
    for (std::size_t h : drawn)
      for (std::size_t k = 0; k < e.size(); ++k) e[k] += member_errors[h][k];
    for (double& v : e) v /= static_cast<double>(drawn.size());
    const GroupErrorVector errors(e);
    const double eta_mean = d.mean();
    eta_sum += eta_mean;
    auto lambda = auditor_best_response(errors, eta_mean, ctx);
    cumulative += learner_weights(lambda, j, K);
    if (record_trace) out.trace.push_back({e, eta_mean, lambda});
    auto costs = cost_vector(cumulative, data);
    if (t < T) {
      drawn.resize(draws_n);
      parallel_for(draws_n, [&](std::size_t s) {
        thread_local std::vector<double> scratch;
        drawn[s] = ftpl_call(costs.c, out.learning_rate, family,
                             stream_seed(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(t), s), scratch)
                       .member;
      });
      d = eta_play(costs.c_coeff, out.eta_learning_rate, j);
    }
    if (auto it = kept_costs.find(t); it != kept_costs.end()) it->second = std::move(costs.c);
  }

  std::vector<BaseClassifier> draws(draws_n);
  parallel_for(draws_n, [&](std::size_t s) {
    draws[s] = ftpl_draw(kept_costs.at(pick_step[s]), out.learning_rate, family, streams[s]);
  });
  out.p_hat = RandomizedClassifier::from_draws(draws);
  out.eta_hat = eta_sum / Td;
  return out;
}

struct ClassificationOutcome {
  RandomizedClassifier p_hat = RandomizedClassifier::point_mass(BaseClassifier::constant_of(0));
  EtaSchedule eta_schedule{1.0};
  std::vector<RoundSchedule> schedule;
  std::vector<double> learning_rates;      // eta per round
  std::vector<double> eta_learning_rates;  // eta' per round
  GroupErrorVector errors;                 // of p_hat on the training data
};

/// Rounds j = 1..ell of the classification driver with zero-one loss (L_M = 1).
inline ClassificationOutcome lexifair_clf(const GroupedDataset& data, const RunConfig& cfg, const StumpFamily& family) {
  cfg.validate(data.num_groups());
  if (!data.has_binary_labels()) throw std::invalid_argument("classification needs labels in {0, 1}");
  ClassificationOutcome out;
  for (int j = 1; j <= cfg.ell; ++j) {
    const auto sched = classification_schedule(cfg, j, data.size(), data.min_group_size(), data.num_groups());
    LagrangianContext ctx(j, out.eta_schedule, sched.dual_bound, 1.0);
    auto res = clf_nr(sched.iterations, sched.dual_bound, sched.samples, ctx, data, family, cfg.seed);
    out.eta_schedule.push(res.eta_hat);
    out.schedule.push_back(sched);
    out.learning_rates.push_back(res.learning_rate);
    out.eta_learning_rates.push_back(res.eta_learning_rate);
    out.p_hat = std::move(res.p_hat);
  }
  out.errors = out.p_hat.group_errors_on(data);
  return out;
}

}  // namespace lexifair
