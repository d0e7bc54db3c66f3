#include <gtest/gtest.h>

#include <cmath>

#include "rcsl/environments.hpp"
#include "rcsl/errors.hpp"
#include "rcsl/learners.hpp"
#include "rcsl/nn.hpp"
#include "rcsl/rng.hpp"
#include "test_util.hpp"

using namespace rcsl;

namespace {

RegressionSet random_regression(std::uint64_t seed, int in_dim, int out_dim, int n, bool masked) {
  CounterRng rng(seed, 3);
  RegressionSet data(in_dim, out_dim);
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(in_dim), y(out_dim);
    for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : y) v = 2.0 * rng.uniform() - 1.0;
    data.add(x, y, masked ? static_cast<int>(rng.below(out_dim)) : -1);
  }
  return data;
}

}  // namespace

TEST(Mlp2, ZeroNetOutputsZero) {
  const auto net = Mlp2::zeros(3, 4, 2);
  const std::vector<double> x{1.0, -2.0, 3.0};
  EXPECT_EQ(net.forward(x), (std::vector<double>{0.0, 0.0}));
}

TEST(Mlp2, SingleUnitIsRelu) {
  auto net = Mlp2::zeros(1, 1, 1);
  net.w1_at(0, 0) = 1.0;
  net.w2_at(0, 0) = 1.0;
  EXPECT_EQ(net.forward(std::vector<double>{-3.0})[0], 0.0);
  EXPECT_EQ(net.forward(std::vector<double>{2.0})[0], 2.0);
}

TEST(Mlp2, DimensionMismatchThrows) {
  const auto net = Mlp2::zeros(2, 3, 1);
  EXPECT_THROW(net.forward(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Mlp2, RandomInitWithinFanInBounds) {
  const auto net = Mlp2::random_init(4, 9, 2, 17);
  for (double w : net.w1) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(4.0));
  for (double w : net.b1) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(4.0));
  for (double w : net.w2) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(9.0));
  EXPECT_EQ(net, Mlp2::random_init(4, 9, 2, 17));
  EXPECT_NE(net, Mlp2::random_init(4, 9, 2, 18));
  EXPECT_EQ(net.parameter_count(), 4u * 9 + 9 + 2 * 9 + 2);
}

TEST(Gradient, MatchesCentralDifferences) {
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int in_dim = 1 + static_cast<int>(seed % 3);
    const int width = 3 + static_cast<int>(seed % 5);
    const int out_dim = 1 + static_cast<int>(seed % 2);
    const auto data = random_regression(seed, in_dim, out_dim, 12, seed % 4 == 1);
    auto net = Mlp2::random_init(in_dim, width, out_dim, seed);
    const auto grad = mse_gradient(net, data);
    const auto analytic = grad.tensors();
    auto params = net.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t i = 0; i < params[t].size(); ++i) {
        const double saved = params[t][i];
        params[t][i] = saved + h;
        const double up = mse_loss(net, data);
        params[t][i] = saved - h;
        const double down = mse_loss(net, data);
        params[t][i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[t][i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[t][i]) / scale);
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradient, SubsetMatchesRestrictedLoss) {
  const auto data = random_regression(5, 2, 1, 10, false);
  const auto net = Mlp2::random_init(2, 4, 1, 5);
  const std::vector<std::size_t> subset{1, 4, 7};
  RegressionSet sub(2, 1);
  for (auto i : subset) sub.add(data.x(i), data.y(i));
  EXPECT_EQ(mse_gradient(net, data, subset), mse_gradient(net, sub));
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainMse, FitsTeacherOfSameWidth) {
  const auto teacher = Mlp2::random_init(2, 8, 1, 101);
  CounterRng rng(4, 0);
  RegressionSet data(2, 1);
  for (int i = 0; i < 256; ++i) {
    const std::vector<double> x{2 * rng.uniform() - 1, 2 * rng.uniform() - 1};
    data.add(x, teacher.forward(x));
  }
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 32;
  cfg.epochs = 300;
  const auto res = train_mse(Mlp2::random_init(2, 8, 1, 7), data, cfg);
  EXPECT_LT(mse_loss(res.net, data), 1e-3);
  EXPECT_EQ(res.loss_curve.size(), 300u);
}

TEST(TrainMse, SinglePointLossDecreases) {
  RegressionSet data(1, 1);
  data.add(std::vector<double>{0.5}, std::vector<double>{0.3});
  auto net = Mlp2::random_init(1, 4, 1, 2);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Sgd;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 1;
  cfg.epochs = 10;
  double prev = mse_loss(net, data);
  MseTrainer trainer(net, cfg);
  for (int e = 0; e < 10; ++e) {
    trainer.run_epoch(data);
    const double now = mse_loss(trainer.net(), data);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(TrainMse, ZeroFeaturesMoveOnlyTheOutputBias) {
  RegressionSet data(1, 1);
  for (double y : {1.0, 2.0, 6.0}) data.add(std::vector<double>{y}, std::vector<double>{y});
  auto net = Mlp2::zeros(1, 3, 1);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Sgd;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 3;
  cfg.epochs = 200;
  const auto res = train_mse(net, data, cfg);
  EXPECT_NEAR(res.net.b2[0], 3.0, 1e-9);
  for (double w : res.net.w1) EXPECT_EQ(w, 0.0);
  for (double w : res.net.w2) EXPECT_EQ(w, 0.0);
}

TEST(TrainMse, DeterministicGivenSeed) {
  const auto data = random_regression(8, 2, 1, 100, false);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 3;
  const auto a = train_mse(Mlp2::random_init(2, 6, 1, 1), data, cfg);
  const auto b = train_mse(Mlp2::random_init(2, 6, 1, 1), data, cfg);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  cfg.seed = 4;
  EXPECT_NE(train_mse(Mlp2::random_init(2, 6, 1, 1), data, cfg).net, a.net);
}

TEST(TrainMse, DivergenceIsReported) {
  RegressionSet data(1, 1);
  data.add(std::vector<double>{1e3}, std::vector<double>{1e3});
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Sgd;
  cfg.learning_rate = 10.0;
  cfg.batch_size = 1;
  cfg.epochs = 200;
  EXPECT_THROW(train_mse(Mlp2::random_init(1, 4, 1, 0), data, cfg), TrainingDiverged);
}

TEST(AnalyticQNetwork, MatchesDynamicProgramming) {
  for (int u = 1; u <= 64; ++u) {
    const auto net = build_analytic_q_network(u);
    ASSERT_EQ(net.width, 2);
    const auto v = exact_optimal_values(build_linearq(u).mdp);
    for (StateId s = 0; s < 3 * u + 3; ++s) {
      for (ActionId a = 0; a < 2; ++a) {
        const std::vector<double> x{static_cast<double>(s), static_cast<double>(a)};
        EXPECT_NEAR(net.forward(x)[0], v.q(0, s, a), 1e-9) << "u=" << u << " s=" << s << " a=" << a;
      }
    }
  }
  const auto net4 = build_analytic_q_network(4);
  EXPECT_NEAR(net4.forward(std::vector<double>{0.0, 0.0})[0], 18.0 / 13.0, 1e-15);
  for (double a : {0.0, 1.0}) EXPECT_EQ(net4.forward(std::vector<double>{14.0, a})[0], 0.0);
}

TEST(AnalyticRcslPolicy, WidthIsConstant) {
  for (int u : {1, 2, 7, 50, 200}) EXPECT_EQ(build_analytic_rcsl_policy(u).width, 16);
}

TEST(AnalyticRcslPolicy, ErrsOnlyWhereLabelsConflict) {
  for (int u : {1, 2, 3, 4, 8, 16}) {
    const auto env = build_linearq(u);
    const RcslMlpPolicy pi(build_analytic_rcsl_policy(u), 2, {1.0, 1.0 / env.k});
    const auto rtg = build_rtg_dataset(build_linearq_dataset(u, 1, 0));
    const double grid = env.k / 2;
    const auto conflicts = rcsl::testing::label_conflicts(rtg, 2, grid);
    const auto e = rcsl::testing::classification_errors(pi, rtg, conflicts, grid);
    EXPECT_EQ(e.outside_conflicts, 0u) << "u=" << u;
    EXPECT_GE(e.errors, conflicts.irreducible_errors) << "u=" << u;
  }
}

TEST(AnalyticRcslPolicy, SubOptimalActionContexts) {
  for (int u : {1, 3, 8}) {
    const auto env = build_linearq(u);
    const auto ref = linearq_reference(u);
    const RcslMlpPolicy pi(build_analytic_rcsl_policy(u), 2, {1.0, 1.0 / env.k});
    for (StateId s = 0; s + 1 < env.mdp.n_states(); ++s) {
      const ActionId best = ref.pi_star_action(s);
      const double g_dev = ref.q_star(s, 1 - best);
      EXPECT_EQ(pi.action(s, g_dev), 1 - best) << "u=" << u << " s=" << s;
      EXPECT_EQ(pi.action(s, ref.q_star(s, best)), best) << "u=" << u << " s=" << s;
    }
  }
}

TEST(AnalyticRcslPolicy, NamedQueries) {
  const int u = 4;
  const auto env = build_linearq(u);
  const auto ref = linearq_reference(u);
  const RcslMlpPolicy pi(build_analytic_rcsl_policy(u), 2, {1.0, 1.0 / env.k});
  EXPECT_EQ(pi.action(0, ref.q_star(0, 1)), 1);
  EXPECT_EQ(pi.action(0, ref.v_star_0()), 0);
  EXPECT_NEAR(evaluate_return_conditioned(env.mdp, pi, ref.v_star_0(), 0), ref.v_star_0(), env.k / 10);
}
