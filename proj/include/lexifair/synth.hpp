#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/online.hpp"

namespace lexifair {

struct SynthParams {
  enum class Task { kRegression, kClassification };

  int groups = 3;
  int per_group = 100;  // points whose primary group is k
  int dim = 2;
  Task task = Task::kClassification;
  double skew = 0.2;
  bool overlap = false;
  double overlap_prob = 0.3;  // chance a point also joins a second group
  std::uint64_t seed = 0;

  void validate() const {
    if (groups < 2) throw std::invalid_argument("gen-synth needs at least 2 groups");
    if (per_group < 1) throw std::invalid_argument("per-group count must be positive");
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    if (!(skew >= 0.0) || !std::isfinite(skew)) throw std::invalid_argument("skew must be non-negative");
    if (task == Task::kClassification && skew >= 0.5) throw std::invalid_argument("classification skew must be below 0.5");
    if (!(overlap_prob >= 0.0 && overlap_prob <= 1.0)) throw std::invalid_argument("overlap probability outside [0, 1]");
  }
};

/// Synthetic grouped data. Features are uniform on [-1, 1]^d, rounded to six
/// decimals.
///
/// Classification: y = 1[x0 > 0] flipped with probability skew * k / (K - 1)
/// for primary group k (0-based), so that is group k's Bayes error.
/// Regression: y = theta_k . x + N(0, sigma_k^2) with
/// theta_k = (0.5 + skew (k / (K - 1) - 0.5), 0.25, 0, ...) and
/// sigma_k = 0.1 (1 + skew k).
inline GroupedDataset gen_synth(const SynthParams& p) {
  p.validate();
  Rng rng(stream_seed(p.seed, 0x73796e7468ULL));
  auto uniform = [&] { return uniform01(rng); };
  auto gaussian = [&] {
    // Box-Muller on our own uniforms keeps output identical across standard libraries.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  };
  auto round6 = [](double v) { return std::round(v * 1e6) / 1e6; };

  const std::size_t n = static_cast<std::size_t>(p.groups) * static_cast<std::size_t>(p.per_group);
  std::vector<std::vector<double>> features;
  std::vector<double> labels;
  std::vector<std::vector<int>> membership;
  features.reserve(n);
  for (int k = 0; k < p.groups; ++k) {
    const double u = static_cast<double>(k) / (p.groups - 1);
    for (int i = 0; i < p.per_group; ++i) {
      std::vector<double> x(static_cast<std::size_t>(p.dim));
      for (double& v : x) v = round6(2.0 * uniform() - 1.0);
      double y;
      if (p.task == SynthParams::Task::kClassification) {
        y = x[0] > 0.0 ? 1.0 : 0.0;
        if (uniform() < p.skew * u) y = 1.0 - y;
      } else {
        double z = (0.5 + p.skew * (u - 0.5)) * x[0];
        if (p.dim > 1) z += 0.25 * x[1];
        y = round6(z + 0.1 * (1.0 + p.skew * k) * gaussian());
      }
      std::vector<int> g{k};
      if (p.overlap && uniform() < p.overlap_prob) {
        int other = static_cast<int>(uniform() * (p.groups - 1));
        if (other >= k) ++other;
        g.push_back(other);
      }
      features.push_back(std::move(x));
      labels.push_back(y);
      membership.push_back(std::move(g));
    }
  }
  return GroupedDataset(std::move(features), std::move(labels), std::move(membership), p.groups);
}

}  // namespace lexifair
