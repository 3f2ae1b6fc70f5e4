#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lexifair {

/// Thrown when a value object is constructed in a state its invariants forbid.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown when a certified loss or gradient bound is exceeded during a run.
class BoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a scheduled iteration count exceeds the configured budget and
/// the run was asked to abort rather than clamp.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(int round, double scheduled, long budget)
      : std::runtime_error("round " + std::to_string(round) + ": scheduled T_j = " +
                           std::to_string(scheduled) + " exceeds budget " +
                           std::to_string(budget) + "; raise alpha or the budget"),
        round_(round),
        scheduled_(scheduled) {}

  int round() const { return round_; }
  double scheduled() const { return scheduled_; }

 private:
  int round_;
  double scheduled_;
};

/// Sum with a fixed binary-tree topology. The result depends only on the input
/// order, never on how the work is split, so serial and parallel callers agree.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Labeled points with possibly overlapping group memberships.
///
/// Groups are 0-based internally; the CSV layer translates from the 1-based
/// indices users write. Every point belongs to at least one group and, unless
/// constructed as an evaluation set, every group has at least one member.
class GroupedDataset {
 public:
  enum class EmptyGroups { kReject, kAllow };

  GroupedDataset() = default;

  GroupedDataset(std::vector<std::vector<double>> features, std::vector<double> labels,
                 std::vector<std::vector<int>> membership, int num_groups,
                 EmptyGroups empty_groups = EmptyGroups::kReject)
      : num_groups_(num_groups), labels_(std::move(labels)) {
    const std::size_t n = features.size();
    if (n == 0) throw InvariantViolation("dataset has no points");
    if (labels_.size() != n || membership.size() != n)
      throw InvariantViolation("features, labels and memberships differ in length");
    if (num_groups_ < 1) throw InvariantViolation("group count must be positive");
    dim_ = features.front().size();
    features_.reserve(n * dim_);
    members_.assign(static_cast<std::size_t>(num_groups_), {});
    memberships_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (features[i].size() != dim_)
        throw InvariantViolation("point " + std::to_string(i) + " has dimension " +
                                 std::to_string(features[i].size()) + ", expected " +
                                 std::to_string(dim_));
      for (double v : features[i])
        if (!std::isfinite(v)) throw InvariantViolation("non-finite feature at point " + std::to_string(i));
      if (!std::isfinite(labels_[i])) throw InvariantViolation("non-finite label at point " + std::to_string(i));
      features_.insert(features_.end(), features[i].begin(), features[i].end());
      auto groups = membership[i];
      std::sort(groups.begin(), groups.end());
      groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
      if (groups.empty()) throw InvariantViolation("point " + std::to_string(i) + " belongs to no group");
      for (int g : groups) {
        if (g < 0 || g >= num_groups_)
          throw InvariantViolation("point " + std::to_string(i) + " has group index out of range");
        members_[static_cast<std::size_t>(g)].push_back(i);
      }
      memberships_.push_back(std::move(groups));
    }
    if (empty_groups == EmptyGroups::kReject) {
      for (int k = 0; k < num_groups_; ++k)
        if (members_[static_cast<std::size_t>(k)].empty())
          throw InvariantViolation("group " + std::to_string(k + 1) + " has no members");
    }
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  int num_groups() const { return num_groups_; }

  std::span<const double> features(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * dim_, dim_);
  }
  double feature(std::size_t i, std::size_t f) const { return features_[i * dim_ + f]; }
  double label(std::size_t i) const { return labels_[i]; }
  std::span<const double> labels() const { return labels_; }
  std::span<const int> memberships(std::size_t i) const { return memberships_[i]; }
  std::span<const std::size_t> members(int k) const { return members_[static_cast<std::size_t>(k)]; }
  std::size_t group_size(int k) const { return members_[static_cast<std::size_t>(k)].size(); }

  std::size_t min_group_size() const {
    std::size_t m = size();
    for (const auto& g : members_) m = std::min(m, g.size());
    return m;
  }

  bool has_binary_labels() const {
    return std::all_of(labels_.begin(), labels_.end(), [](double y) { return y == 0.0 || y == 1.0; });
  }

 private:
  int num_groups_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<double> labels_;
  std::vector<std::vector<int>> memberships_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Per-group errors together with the order that sorts them from highest to
/// lowest. Equal errors are ordered by ascending group index.
class GroupErrorVector {
 public:
  GroupErrorVector() = default;

  explicit GroupErrorVector(std::vector<double> errors) : errors_(std::move(errors)) {
    if (errors_.empty()) throw InvariantViolation("error vector is empty");
    for (double e : errors_)
      if (!std::isfinite(e)) throw InvariantViolation("non-finite group error");
    order_.resize(errors_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [this](int a, int b) { return errors_[static_cast<std::size_t>(a)] > errors_[static_cast<std::size_t>(b)]; });
  }

  int size() const { return static_cast<int>(errors_.size()); }
  double operator[](int k) const { return errors_[static_cast<std::size_t>(k)]; }
  std::span<const double> errors() const { return errors_; }
  /// sorted_view()[r] is the group with the (r+1)-th highest error.
  std::span<const int> sorted_view() const { return order_; }

  /// The r-th highest error, r in [1, K].
  double sorted(int r) const { return errors_[static_cast<std::size_t>(order_[static_cast<std::size_t>(r - 1)])]; }

 private:
  std::vector<double> errors_;
  std::vector<int> order_;
};

/// Sum of the j largest group errors, which equals the maximum j-subset sum.
inline double top_j_sum(const GroupErrorVector& ev, int j) {
  if (j < 1 || j > ev.size())
    throw std::invalid_argument("top_j_sum: j = " + std::to_string(j) + " outside [1, " +
                                std::to_string(ev.size()) + "]");
  double s = 0.0;
  for (int r = 1; r <= j; ++r) s += ev.sorted(r);
  return s;
}

/// top_j_sum for every j in [1, up_to]; entry r-1 holds the top-r sum.
inline std::vector<double> top_sums(const GroupErrorVector& ev, int up_to) {
  if (up_to < 1 || up_to > ev.size()) throw std::invalid_argument("top_sums: depth out of range");
  std::vector<double> out(static_cast<std::size_t>(up_to));
  double s = 0.0;
  for (int r = 1; r <= up_to; ++r) {
    s += ev.sorted(r);
    out[static_cast<std::size_t>(r - 1)] = s;
  }
  return out;
}

/// Group means of a per-point loss. `point_loss(i)` is evaluated once per
/// point; points in several groups count fully toward each of them.
template <class PointLoss>
GroupErrorVector group_errors(PointLoss&& point_loss, const GroupedDataset& data) {
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) losses[i] = point_loss(i);
  std::vector<double> errors(static_cast<std::size_t>(data.num_groups()));
  std::vector<double> buf;
  for (int k = 0; k < data.num_groups(); ++k) {
    const auto members = data.members(k);
    if (members.empty()) throw InvariantViolation("group " + std::to_string(k + 1) + " is empty");
    buf.clear();
    for (std::size_t i : members) buf.push_back(losses[i]);
    errors[static_cast<std::size_t>(k)] = pairwise_sum(buf) / static_cast<double>(members.size());
  }
  return GroupErrorVector(std::move(errors));
}

/// A set of groups, sorted ascending, 0-based.
using GroupSubset = std::vector<int>;

/// Non-negative weights over group subsets of size 1..round, with total mass
/// at most `bound`. Only non-zero atoms are stored.
class DualVector {
 public:
  DualVector(double bound, int round) : bound_(bound), round_(round) {
    if (!(bound > 0.0)) throw InvariantViolation("dual bound must be positive");
    if (round < 1) throw InvariantViolation("round index must be at least 1");
  }

  static DualVector zero(double bound, int round) { return DualVector(bound, round); }

  static DualVector single(GroupSubset subset, double bound, int round) {
    DualVector v(bound, round);
    v.add(std::move(subset), bound);
    return v;
  }

  /// Adds mass to an atom; the resulting vector must stay inside the bound.
  void add(GroupSubset subset, double mass) {
    if (mass < 0.0 || !std::isfinite(mass)) throw InvariantViolation("dual mass must be finite and non-negative");
    if (mass == 0.0) return;
    std::sort(subset.begin(), subset.end());
    if (subset.empty() || static_cast<int>(subset.size()) > round_)
      throw InvariantViolation("atom cardinality " + std::to_string(subset.size()) + " outside [1, " +
                               std::to_string(round_) + "]");
    if (std::adjacent_find(subset.begin(), subset.end()) != subset.end())
      throw InvariantViolation("atom repeats a group");
    if (total_ + mass > bound_ * (1.0 + 1e-12)) throw InvariantViolation("dual mass exceeds the bound B");
    atoms_[std::move(subset)] += mass;
    total_ += mass;
  }

  /// Uniform average of equally-bounded duals of the same round.
  static DualVector average(std::span<const DualVector> duals) {
    if (duals.empty()) throw std::invalid_argument("average of no duals");
    DualVector out(duals.front().bound_, duals.front().round_);
    const double w = 1.0 / static_cast<double>(duals.size());
    for (const auto& d : duals)
      for (const auto& [subset, mass] : d.atoms_) out.add(subset, mass * w);
    return out;
  }

  const std::map<GroupSubset, double>& atoms() const { return atoms_; }
  double bound() const { return bound_; }
  int round() const { return round_; }
  double total_mass() const { return total_; }
  bool is_zero() const { return atoms_.empty(); }

 private:
  std::map<GroupSubset, double> atoms_;
  double bound_;
  int round_;
  double total_ = 0.0;
};

/// Estimated level values eta_1..eta_j, each confined to [0, r * loss_bound].
class EtaSchedule {
 public:
  explicit EtaSchedule(double loss_bound) : loss_bound_(loss_bound) {
    if (!(loss_bound > 0.0)) throw InvariantViolation("loss bound must be positive");
  }

  EtaSchedule(double loss_bound, std::vector<double> values) : EtaSchedule(loss_bound) {
    for (double v : values) push(v);
  }

  /// Appends the next level value. Values within 1e-9 of the range are
  /// clamped (averages of in-range iterates can round just past the edge).
  void push(double value) {
    const double hi = static_cast<double>(values_.size() + 1) * loss_bound_;
    const double tol = 1e-9 * std::max(1.0, hi);
    if (!std::isfinite(value) || value < -tol || value > hi + tol)
      throw InvariantViolation("eta_" + std::to_string(values_.size() + 1) + " = " + std::to_string(value) +
                               " outside [0, " + std::to_string(hi) + "]");
    values_.push_back(std::clamp(value, 0.0, hi));
  }

  std::size_t size() const { return values_.size(); }
  double operator[](int r) const { return values_[static_cast<std::size_t>(r - 1)]; }  // 1-based
  std::span<const double> values() const { return values_; }
  double loss_bound() const { return loss_bound_; }

 private:
  double loss_bound_;
  std::vector<double> values_;
};

/// What to do when a scheduled iteration count exceeds the budget.
enum class BudgetPolicy { kAbort, kClamp };

struct RunConfig {
  int ell = 1;
  double alpha = 0.1;
  double delta = 0.1;        // classification only
  double loss_bound = 1.0;   // L_M (regression)
  double grad_bound = 1.0;   // G (regression)
  double diameter = 2.0;     // D (regression)
  unsigned long long seed = 0;
  long budget = 0;           // max iterations per round; 0 = unlimited
  long sample_budget = 0;    // max samples m per round; 0 = same as budget
  BudgetPolicy budget_policy = BudgetPolicy::kAbort;

  void validate(int num_groups) const {
    if (ell < 1 || ell > num_groups)
      throw std::invalid_argument("ell = " + std::to_string(ell) + " outside [1, " + std::to_string(num_groups) + "]");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
    if (budget < 0 || sample_budget < 0) throw std::invalid_argument("budgets must be non-negative");
  }
};

/// Parameters of one round j, as scheduled and as actually run.
struct RoundSchedule {
  int round = 1;
  double scheduled_iterations = 0;  // T_j from the formula (may be huge)
  long iterations = 0;              // T actually run
  double dual_bound = 0;            // B_j
  double scheduled_samples = 0;     // m_j from the formula (classification)
  long samples = 0;                 // m actually drawn
  bool iterations_clamped = false;
  bool samples_clamped = false;
};

namespace detail {

inline long apply_budget(double scheduled, const RunConfig& cfg, int round, bool& clamped) {
  const double t = std::max(1.0, std::ceil(scheduled));
  clamped = false;
  if (cfg.budget > 0 && t > static_cast<double>(cfg.budget)) {
    if (cfg.budget_policy == BudgetPolicy::kAbort) throw BudgetExceeded(round, t, cfg.budget);
    clamped = true;
    return cfg.budget;
  }
  if (t > 9.0e18) throw BudgetExceeded(round, t, cfg.budget);
  return static_cast<long>(t);
}

}  // namespace detail

/// T_j = 4 j^2 (G D + L_M)^2 (2 alpha + j L_M)^2 / alpha^4,  B_j = (alpha + j L_M) / alpha.
inline double regression_iterations(const RunConfig& cfg, int j) {
  const double jd = j;
  const double a = cfg.alpha;
  const double gd = cfg.grad_bound * cfg.diameter + cfg.loss_bound;
  const double s = 2.0 * a + jd * cfg.loss_bound;
  return 4.0 * jd * jd * gd * gd * s * s / (a * a * a * a);
}

inline RoundSchedule regression_schedule(const RunConfig& cfg, int j) {
  RoundSchedule s;
  s.round = j;
  s.scheduled_iterations = regression_iterations(cfg, j);
  s.iterations = detail::apply_budget(s.scheduled_iterations, cfg, j, s.iterations_clamped);
  s.dual_bound = (cfg.alpha + j * cfg.loss_bound) / cfg.alpha;
  return s;
}

/// T_j = 256 (2 alpha + j)^2 n^3 / (alpha^4 n_min^2), B_j = (alpha + j) / alpha,
/// m_j = K^2 n_min^2 T_j log(4 j K T_j / delta) / (2 n^3).
///
/// m_j is computed from the scheduled T_j, then clamped to [1, sample budget].
inline double classification_iterations(double alpha, int j, double n, double n_min) {
  const double s = 2.0 * alpha + j;
  return 256.0 * s * s * n * n * n / (alpha * alpha * alpha * alpha * n_min * n_min);
}

inline RoundSchedule classification_schedule(const RunConfig& cfg, int j, std::size_t n, std::size_t n_min,
                                             int num_groups) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  const double nm = static_cast<double>(n_min);
  const double k = num_groups;
  RoundSchedule s;
  s.round = j;
  s.scheduled_iterations = classification_iterations(cfg.alpha, j, nd, nm);
  s.iterations = detail::apply_budget(s.scheduled_iterations, cfg, j, s.iterations_clamped);
  s.dual_bound = (cfg.alpha + j) / cfg.alpha;
  const double t = s.scheduled_iterations;
  s.scheduled_samples = k * k * nm * nm * t * std::log(4.0 * j * k * t / cfg.delta) / (2.0 * nd * nd * nd);
  double m = std::ceil(s.scheduled_samples);
  if (m < 1.0) {
    m = 1.0;
    s.samples_clamped = true;
  }
  const long m_budget = cfg.sample_budget > 0 ? cfg.sample_budget : cfg.budget;
  if (m_budget > 0 && m > static_cast<double>(m_budget)) {
    if (cfg.budget_policy == BudgetPolicy::kAbort) throw BudgetExceeded(j, m, m_budget);
    m = static_cast<double>(m_budget);
    s.samples_clamped = true;
  }
  if (m > 1.0e12) throw BudgetExceeded(j, m, cfg.budget);
  s.samples = static_cast<long>(m);
  return s;
}

}  // namespace lexifair
