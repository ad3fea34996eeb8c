#include "hypernet/train.hpp"
#include "hypernet/composition.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace hypernet {
namespace {

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

MlpSpec linear_spec(Index in, Index out, bool biases = true) {
  MlpSpec s;
  s.widths = {in, out};
  s.use_biases = biases;
  return s;
}

TEST(SgdTest, HandTrace) {
  Eigen::VectorXd theta = v1(1.0), v = v1(0.0);
  sgd_momentum_step(theta, v1(2.0), v, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_DOUBLE_EQ(theta[0], 0.8);
  sgd_momentum_step(theta, v1(1.0), v, 0.1, 0.5);  // v = 1 + 1
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_DOUBLE_EQ(theta[0], 0.6);
  sgd_momentum_step(theta, v1(-1.0), v, 0.1, 0.5);  // v = 1 - 1
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(theta[0], 0.6);
}

TEST(SgdTest, NoMomentumAndZeroGradient) {
  Eigen::VectorXd theta = v1(1.0), v = v1(0.0);
  sgd_momentum_step(theta, v1(3.0), v, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(theta[0], 1.0 - 0.3);
  Eigen::VectorXd t2 = v1(5.0), z = v1(0.0);
  sgd_momentum_step(t2, v1(0.0), z, 0.1, 0.9);
  EXPECT_EQ(t2[0], 5.0);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(sgd_momentum_step(theta, bad, v, 0.1, 0.5), ShapeError);
}

TEST(AdadeltaTest, FirstStep) {
  Eigen::VectorXd theta = v1(0.0), eg = v1(0.0), ed = v1(0.0);
  adadelta_step(theta, v1(1.0), eg, ed, 0.9, 1e-6, 1.0);
  EXPECT_NEAR(theta[0], -std::sqrt(1e-6 / (0.1 + 1e-6)), 1e-15);
  EXPECT_NEAR(theta[0], -3.1623e-3, 1e-7);
}

TEST(AdadeltaTest, ThreeStepTrace) {
  // Scalar recurrences written out step by step.
  const double rho = 0.9, eps = 1e-6, lr = 0.5;
  const double g[3] = {1.0, -2.0, 0.5};
  double th = 0.3, eg2 = 0, ed2 = 0;
  Eigen::VectorXd theta = v1(th), eg = v1(0), ed = v1(0);
  for (double gi : g) {
    eg2 = rho * eg2 + (1 - rho) * gi * gi;
    const double d = -std::sqrt(ed2 + eps) / std::sqrt(eg2 + eps) * gi;
    ed2 = rho * ed2 + (1 - rho) * d * d;
    th += lr * d;
    adadelta_step(theta, v1(gi), eg, ed, rho, eps, lr);
    EXPECT_NEAR(theta[0], th, 1e-15);
    EXPECT_NEAR(eg[0], eg2, 1e-15);
    EXPECT_NEAR(ed[0], ed2, 1e-15);
  }
}

TEST(AdadeltaTest, NoOpCases) {
  Eigen::VectorXd theta = v1(2.0), eg = v1(0.0), ed = v1(0.0);
  adadelta_step(theta, v1(0.0), eg, ed, 0.9, 1e-6, 1.0);
  EXPECT_EQ(theta[0], 2.0);
  adadelta_step(theta, v1(4.0), eg, ed, 0.9, 1e-6, 0.0);
  EXPECT_EQ(theta[0], 2.0);
  EXPECT_THROW(adadelta_step(theta, v1(1.0), eg, ed, 1.0, 1e-6, 1.0), std::invalid_argument);
}

TEST(LossTest, Mse) {
  Graph g;
  const Tensor x = Tensor::vector({1.5, -2.0});
  EXPECT_EQ(mse_loss(g, x, x).item(), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(g, Tensor::vector({0, 0}), Tensor::vector({1, 1})).item(), 1.0);
  EXPECT_THROW(mse_loss(g, x, Tensor::vector({1.0})), ShapeError);
}

TEST(LossTest, NllUniform) {
  Graph g;
  const Tensor lp = log_softmax(g, Tensor::matrix(RowMatrix::Zero(3, 12)));
  const std::vector<int> labels{0, 5, 11};
  EXPECT_NEAR(nll_loss(g, lp, labels).item(), std::log(12.0), 1e-12);
  const std::vector<int> bad{0, 5, 12};
  EXPECT_THROW(nll_loss(g, lp, bad), std::out_of_range);
  const std::vector<int> one{3};
  EXPECT_NEAR(nll_loss(g, log_softmax(g, Tensor::zeros({12})), one).item(), std::log(12.0), 1e-12);
}

TEST(LossTest, NllPicksLabel) {
  Graph g;
  RowMatrix lp(2, 3);
  lp << -0.1, -2.0, -3.0, -1.0, -0.5, -4.0;
  const std::vector<int> labels{0, 2};
  EXPECT_DOUBLE_EQ(nll_loss(g, Tensor::matrix(lp), labels).item(), (0.1 + 4.0) / 2.0);
}

Dataset linear_data(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Dataset d;
  d.x.resize(n, 1);
  d.targets.resize(n, 1);
  for (Index i = 0; i < n; ++i) {
    d.x(i, 0) = u(rng);
    d.targets(i, 0) = 2.0 * d.x(i, 0) + 1.0;
  }
  return d;
}

TEST(TrainLoopTest, FitsLinearToy) {
  std::mt19937_64 rng(1);
  const Dataset data = linear_data(200, rng);
  MlpModel model(linear_spec(1, 1), ParamVector(Eigen::Vector2d(0, 0)));
  TrainConfig cfg;
  cfg.batch_size = 20;
  cfg.epochs = 20;  // 200 steps
  cfg.optimizer = OptimizerSpec::sgd(0.1);
  const History h = train_loop(model, data, &data, cfg);
  ASSERT_EQ(h.epochs.size(), 20u);
  EXPECT_LT(h.epochs.back().eval_metric, 1e-3);
}

TEST(TrainLoopTest, MomentumLossNonIncreasingAfterTransient) {
  std::mt19937_64 rng(2);
  const Dataset data = linear_data(100, rng);
  MlpModel model(linear_spec(1, 1), ParamVector(Eigen::Vector2d(0, 0)));
  TrainConfig cfg;
  cfg.batch_size = 100;  // full batch, so each epoch is one step
  cfg.epochs = 60;
  cfg.optimizer = OptimizerSpec::sgd(0.1, 0.1);
  const History h = train_loop(model, data, &data, cfg);
  for (std::size_t i = 11; i < h.epochs.size(); ++i) {
    EXPECT_LE(h.epochs[i].eval_metric, h.epochs[i - 1].eval_metric) << "step " << i;
  }
}

TEST(TrainLoopTest, DeterministicGivenSeed) {
  std::mt19937_64 rng(3);
  const Dataset data = linear_data(150, rng);
  auto run = [&](std::uint64_t seed) {
    std::mt19937_64 init(9);
    MlpSpec spec;
    spec.widths = {1, 8, 1};
    spec.activation = Activation::kTanh;
    MlpModel model = MlpModel::init(spec, InitScheme::he_uniform(), init);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 3;
    cfg.optimizer = OptimizerSpec::sgd(0.05, 0.5);
    cfg.seed = seed;
    const History h = train_loop(model, data, &data, cfg);
    return std::make_pair(h, model.parameters()[0]);
  };
  const auto a = run(5), b = run(5), c = run(6);
  EXPECT_EQ(a.first.epochs, b.first.epochs);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.second, c.second);
}

TEST(TrainLoopTest, Errors) {
  MlpModel model(linear_spec(1, 1), ParamVector(Eigen::Vector2d(0, 0)));
  TrainConfig cfg;
  Dataset empty;
  empty.x.resize(0, 1);
  EXPECT_THROW(train_loop(model, empty, nullptr, cfg), std::invalid_argument);

  std::mt19937_64 rng(4);
  Dataset data = linear_data(40, rng);
  data.targets *= 1e300;
  cfg.batch_size = 10;
  try {
    train_loop(model, data, nullptr, cfg);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 0"), std::string::npos) << msg;
  }
}

TEST(TrainLoopTest, HistoryCsv) {
  History h;
  h.epochs.push_back({1, 0.5, 0.25});
  std::ostringstream out;
  h.write_csv(out);
  EXPECT_EQ(out.str(), "epoch,train_loss,eval_metric\n1,0.5,0.25\n");
}

TEST(EvaluateTest, Metrics) {
  // Identity map over 12 classes: a perfect classifier on one-hot inputs.
  MlpSpec spec = linear_spec(12, 12, false);
  Eigen::VectorXd eye(144);
  Eigen::Map<RowMatrix>(eye.data(), 12, 12).setIdentity();
  MlpModel perfect(spec, ParamVector(eye));
  Dataset data;
  data.x = RowMatrix::Zero(120, 12);
  for (Index i = 0; i < 120; ++i) {
    data.x(i, i % 12) = 1.0;
    data.labels.push_back(static_cast<int>(i % 12));
  }
  data.targets = data.x;
  EXPECT_EQ(evaluate(perfect, data, Metric::kClassificationError), 0.0);
  EXPECT_EQ(evaluate(perfect, data, Metric::kMse), 0.0);

  MlpSpec biased = linear_spec(12, 12, true);
  Eigen::VectorXd constant = Eigen::VectorXd::Zero(layout_size(biased));
  constant[144] = 1.0;  // always predicts class 0
  MlpModel guess(biased, ParamVector(constant));
  EXPECT_NEAR(evaluate(guess, data, Metric::kClassificationError), 11.0 / 12.0, 1e-15);
}

TEST(OptimizerTest, KeepsStatePerVector) {
  std::vector<ParamVector> params{ParamVector(v1(1.0)), ParamVector(Eigen::Vector2d(0, 0))};
  Optimizer opt(OptimizerSpec::sgd(0.1, 0.5), params);
  const std::vector<Eigen::VectorXd> grads{v1(2.0), Eigen::Vector2d(1, -1)};
  opt.step(params, grads);
  EXPECT_DOUBLE_EQ(params[0].values[0], 0.8);
  EXPECT_DOUBLE_EQ(params[1].values[1], 0.1);
  EXPECT_EQ(opt.first_moment()[1], Eigen::Vector2d(1, -1));
}

TEST(GradCheckTest, HyperAndEmbedModels) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  MlpSpec g{{3, 4, 3}, Activation::kTanh, Head::kLogSoftmax, true};
  MlpSpec f{{2, 5, layout_size(g)}, Activation::kTanh, Head::kNone, true};
  const HyperModel hyper = HyperModel::init(f, g, InitScheme::uniform(-0.5, 0.5), rng);
  const EmbedModel embed = EmbedModel::init(MlpSpec{{2, 4, 2}, Activation::kElu, Head::kNone, true},
                                            MlpSpec{{5, 4, 3}, Activation::kElu, Head::kNone, true},
                                            InitScheme::uniform(-0.5, 0.5), rng);
  Dataset d;
  d.x = RowMatrix::NullaryExpr(4, 3, [&] { return u(rng); });
  d.cond = RowMatrix::NullaryExpr(4, 2, [&] { return u(rng); });
  d.targets = RowMatrix::NullaryExpr(4, 3, [&] { return u(rng); });
  d.labels = {0, 2, 1, 2};

  const GradCheckReport nll = check_model_gradients(hyper, d, LossKind::kNll);
  EXPECT_EQ(nll.coordinates, hyper.trainable_count());
  EXPECT_LT(nll.max_rel_error, 1e-6);
  const GradCheckReport mse = check_model_gradients(embed, d, LossKind::kMse);
  EXPECT_EQ(mse.coordinates, embed.trainable_count());
  EXPECT_LT(mse.max_rel_error, 1e-6);
}

}  // namespace
}  // namespace hypernet
