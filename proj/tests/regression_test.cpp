#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lexifair/regression.hpp"
#include "lexifair/synth.hpp"

namespace lf = lexifair;

namespace {

lf::GroupedDataset reg_data(std::uint64_t seed, int per_group = 30, int K = 3, int dim = 2) {
  lf::SynthParams p;
  p.task = lf::SynthParams::Task::kRegression;
  p.groups = K;
  p.per_group = per_group;
  p.dim = dim;
  p.skew = 0.5;
  p.overlap = true;
  p.seed = seed;
  return lf::gen_synth(p);
}

lf::GroupedDataset binary_data(std::uint64_t seed) {
  lf::SynthParams p;
  p.groups = 2;
  p.per_group = 25;
  p.dim = 3;
  p.skew = 0.3;
  p.seed = seed;
  return lf::gen_synth(p);
}

}  // namespace

TEST(ConvexLoss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto kind : {lf::ConvexLoss::Kind::kSquaredScaled, lf::ConvexLoss::Kind::kLogistic}) {
    const auto d = kind == lf::ConvexLoss::Kind::kLogistic ? binary_data(3) : reg_data(3, 30, 3, 3);
    const lf::ParamDomain dom({0.1, -0.2, 0.0}, 1.5);
    const lf::ConvexLoss loss(kind, d, dom);
    for (int trial = 0; trial < 20; ++trial) {
      const auto theta = dom.projected(std::vector<double>{u(rng), u(rng), u(rng)});
      for (int k = 0; k < d.num_groups(); ++k) {
        const auto [value, grad] = lf::loss_and_gradient(theta, d, k, loss);
        for (std::size_t f = 0; f < 3; ++f) {
          auto hi = theta, lo = theta;
          const double h = 1e-6;
          hi[f] += h;
          lo[f] -= h;
          const double fd = (lf::linear_group_errors(hi, d, loss)[k] - lf::linear_group_errors(lo, d, loss)[k]) / (2 * h);
          EXPECT_NEAR(grad[f], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
        EXPECT_NEAR(value, lf::linear_group_errors(theta, d, loss)[k], 1e-15);
      }
    }
  }
}

TEST(ConvexLoss, CertifiedBoundsHoldOnTheBall) {
  const auto d = reg_data(4);
  const lf::ParamDomain dom({0.0, 0.0}, 1.0);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  EXPECT_EQ(loss.loss_bound(), 1.0);
  std::mt19937_64 rng(62);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto theta = dom.projected(std::vector<double>{3 * g(rng), 3 * g(rng)});
    for (int k = 0; k < d.num_groups(); ++k) {
      const auto [value, grad] = lf::loss_and_gradient(theta, d, k, loss);
      EXPECT_LE(value, loss.loss_bound());
      EXPECT_LE(std::hypot(grad[0], grad[1]), loss.grad_bound() + 1e-12);
    }
  }
}

TEST(ConvexLoss, PerfectFitHasZeroLossAndGradient) {
  std::vector<std::vector<double>> x{{1.0, 0.0}, {0.0, 1.0}, {0.5, -0.5}, {-1.0, 0.25}};
  const std::vector<double> theta{0.3, -0.4};
  std::vector<double> y;
  for (const auto& xi : x) y.push_back(theta[0] * xi[0] + theta[1] * xi[1]);
  const lf::GroupedDataset d(x, y, {{0}, {0}, {1}, {1}}, 2);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, lf::ParamDomain::unit_ball(2));
  for (int k = 0; k < 2; ++k) {
    const auto [value, grad] = lf::loss_and_gradient(theta, d, k, loss);
    EXPECT_EQ(value, 0.0);
    EXPECT_EQ(grad[0], 0.0);
    EXPECT_EQ(grad[1], 0.0);
  }
}

TEST(ConvexLoss, ViolatedBoundIsReported) {
  const auto d = reg_data(5);
  const auto tight = lf::ConvexLoss::restore(lf::ConvexLoss::Kind::kSquaredScaled, 1e-6, 1.0, 1.0);
  EXPECT_THROW(lf::loss_and_gradient(std::vector<double>{1.0, 1.0}, d, 0, tight), lf::BoundViolation);
  EXPECT_THROW(lf::ConvexLoss::restore(lf::ConvexLoss::Kind::kLogistic, 1.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(lf::ConvexLoss(lf::ConvexLoss::Kind::kLogistic, d, lf::ParamDomain::unit_ball(2)), std::invalid_argument)
      << "regression labels fall outside [0, 1]";
}

TEST(RegNr, SingleStepReturnsStartingPoint) {
  const auto d = reg_data(6);
  const lf::ParamDomain dom({0.2, -0.1}, 1.0);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  const double B = 21.0;
  const lf::LagrangianContext ctx(2, lf::EtaSchedule(1.0, {0.3}), B, loss.loss_bound());
  const auto r = lf::reg_nr(1, B, ctx, d, loss, dom);
  EXPECT_EQ(r.theta_hat, (std::vector<double>{0.2, -0.1}));
  EXPECT_DOUBLE_EQ(r.eta_hat, 1.0);  // j L_M / 2
  const double G = loss.grad_bound(), D = 2.0;
  EXPECT_DOUBLE_EQ(r.step_theta, D / (2 * B * G));
  EXPECT_DOUBLE_EQ(r.step_eta, 2.0 / (1.0 + B));
  EXPECT_DOUBLE_EQ(r.nu, 2 * (G * D + 1.0) * (B + 1.0));
}

TEST(RegNr, RejectsMismatchedLossBound) {
  const auto d = reg_data(7);
  const auto dom = lf::ParamDomain::unit_ball(2);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  const lf::LagrangianContext ctx(1, lf::EtaSchedule(2.0), 3.0, 2.0);
  EXPECT_THROW(lf::reg_nr(10, 3.0, ctx, d, loss, dom), std::invalid_argument);
}

TEST(LexifairReg, SingleGroupReachesEmpiricalRiskMinimumWithinAlpha) {
  lf::SynthParams p;
  p.task = lf::SynthParams::Task::kRegression;
  p.groups = 2;
  p.per_group = 20;
  p.seed = 8;
  auto two = lf::gen_synth(p);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < two.size(); ++i) {
    x.emplace_back(two.features(i).begin(), two.features(i).end());
    y.push_back(two.label(i));
  }
  const lf::GroupedDataset d(x, y, std::vector<std::vector<int>>(x.size(), {0}), 1);
  const auto dom = lf::ParamDomain::unit_ball(2);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  lf::RunConfig cfg;
  cfg.alpha = 0.2;
  cfg = lf::with_regression_bounds(cfg, loss, dom);
  const auto out = lf::lexifair_reg(d, cfg, loss, dom);
  double erm = 1e300;
  for (const auto& theta : lf::ball_grid(dom, 0.01)) erm = std::min(erm, lf::linear_group_errors(theta, d, loss)[0]);
  EXPECT_LE(out.errors[0], erm + cfg.alpha);
  EXPECT_LE(out.eta_schedule[1], erm + cfg.alpha);
  EXPECT_FALSE(out.schedule[0].iterations_clamped);
}

TEST(LexifairReg, ConfigMustMatchLossAndDomain) {
  const auto d = reg_data(9);
  const auto dom = lf::ParamDomain::unit_ball(2);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  lf::RunConfig cfg;  // default G = 1 differs from the certified G
  cfg.budget = 10;
  cfg.budget_policy = lf::BudgetPolicy::kClamp;
  EXPECT_THROW(lf::lexifair_reg(d, cfg, loss, dom), std::invalid_argument);
  cfg = lf::with_regression_bounds(cfg, loss, dom);
  EXPECT_NO_THROW(lf::lexifair_reg(d, cfg, loss, dom));
}

TEST(BallGrid, UnitDiskAtHalfSpacing) {
  const auto pts = lf::ball_grid(lf::ParamDomain::unit_ball(2), 0.5);
  EXPECT_EQ(pts.size(), 13u);
  for (const auto& q : pts) EXPECT_LE(std::hypot(q[0], q[1]), 1.0 + 1e-12);
  EXPECT_THROW(lf::ball_grid(lf::ParamDomain::unit_ball(2), 0.0), std::invalid_argument);
}

TEST(ThetaGrid, ColumnsAreGroupErrors) {
  const auto d = reg_data(10);
  const auto dom = lf::ParamDomain::unit_ball(2);
  const lf::ConvexLoss loss(lf::ConvexLoss::Kind::kSquaredScaled, d, dom);
  const auto grid = lf::ball_grid(dom, 0.25);
  const auto m = lf::theta_grid_loss_matrix(d, loss, grid);
  ASSERT_EQ(m.cols(), grid.size());
  for (std::size_t h = 0; h < grid.size(); h += 7) {
    const auto ev = lf::linear_group_errors(grid[h], d, loss);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(m(k, h), ev[k]);
  }
}
