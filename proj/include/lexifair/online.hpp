#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "lexifair/core.hpp"

namespace lexifair {

/// Euclidean ball {theta : |theta - center| <= radius}.
class ParamDomain {
 public:
  ParamDomain(std::vector<double> center, double radius) : center_(std::move(center)), radius_(radius) {
    if (center_.empty()) throw InvariantViolation("parameter domain needs a dimension");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvariantViolation("radius must be positive");
  }

  static ParamDomain unit_ball(std::size_t dim) { return ParamDomain(std::vector<double>(dim, 0.0), 1.0); }

  std::size_t dim() const { return center_.size(); }
  std::span<const double> center() const { return center_; }
  double radius() const { return radius_; }
  double diameter() const { return 2.0 * radius_; }

  /// Largest |theta| over the ball.
  double max_norm() const {
    double s = 0.0;
    for (double c : center_) s += c * c;
    return std::sqrt(s) + radius_;
  }

  bool contains(std::span<const double> theta, double tol = 1e-12) const {
    return distance_to_center(theta) <= radius_ * (1.0 + tol);
  }

  /// In-place Euclidean projection.
  void project(std::span<double> theta) const {
    const double dist = distance_to_center(theta);
    if (dist <= radius_) return;
    const double scale = radius_ / dist;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = center_[i] + (theta[i] - center_[i]) * scale;
  }

  std::vector<double> projected(std::span<const double> theta) const {
    std::vector<double> out(theta.begin(), theta.end());
    project(out);
    return out;
  }

 private:
  double distance_to_center(std::span<const double> theta) const {
    if (theta.size() != center_.size()) throw std::invalid_argument("parameter dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - center_[i];
      s += d * d;
    }
    return std::sqrt(s);
  }

  std::vector<double> center_;
  double radius_;
};

/// One projected gradient step: Proj(theta - step * grad).
inline std::vector<double> ogd_step(std::span<const double> theta, std::span<const double> grad, double step,
                                    const ParamDomain& domain) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (grad.size() != theta.size()) throw std::invalid_argument("gradient dimension mismatch");
  std::vector<double> next(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) next[i] = theta[i] - step * grad[i];
  domain.project(next);
  return next;
}

/// Projected gradient step on an interval [lo, hi].
inline double interval_step(double x, double grad, double step, double lo, double hi) {
  return std::clamp(x - step * grad, lo, hi);
}

/// Deterministic per-call seed from a run seed and up to three stream indices
/// (splitmix64 finalizer), so random draws depend only on (seed, indices).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) using the top 53 bits, identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Follow the Perturbed Leader over a linear action set reached through an
/// argmin oracle: each play minimizes <cumulative loss + xi / eta, a> with
/// fresh xi ~ U[0,1]^d.
///
/// `Oracle` maps a cost span to an action and must expose
/// `Action operator()(std::span<const double>) const`.
template <class Oracle>
class FollowPerturbedLeader {
 public:
  FollowPerturbedLeader(Oracle oracle, std::size_t dim, double learning_rate)
      : oracle_(std::move(oracle)), cumulative_(dim, 0.0), learning_rate_(learning_rate) {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("FTPL learning rate must be positive");
  }

  auto play(Rng& rng) const {
    std::vector<double> perturbed(cumulative_.size());
    const double scale = 1.0 / learning_rate_;
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] = cumulative_[i] + uniform01(rng) * scale;
    return oracle_(std::span<const double>(perturbed));
  }

  void observe(std::span<const double> loss) {
    if (loss.size() != cumulative_.size()) throw std::invalid_argument("loss dimension mismatch");
    for (std::size_t i = 0; i < loss.size(); ++i) cumulative_[i] += loss[i];
  }

  std::span<const double> cumulative() const { return cumulative_; }
  double learning_rate() const { return learning_rate_; }
  const Oracle& oracle() const { return oracle_; }

 private:
  Oracle oracle_;
  std::vector<double> cumulative_;
  double learning_rate_;
};

}  // namespace lexifair
