#include "hypernet/nets.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace hypernet {
namespace {

MlpSpec spec_of(std::vector<Index> widths, Activation a = Activation::kRelu, bool biases = true) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.activation = a;
  s.use_biases = biases;
  return s;
}

ParamVector random_params(const MlpSpec& spec, std::mt19937_64& rng, double scale = 1.0) {
  return mlp_init(spec, InitScheme::uniform(-scale, scale), rng);
}

Eigen::VectorXd random_input(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Eigen::VectorXd forward_one(const MlpSpec& spec, const ParamVector& p, const Eigen::VectorXd& x) {
  Graph g;
  return mlp_forward(g, spec, p.tensor(), Tensor::from_vector(x)).values();
}

TEST(MlpSpecTest, Validation) {
  EXPECT_THROW(spec_of({3}).validate(), std::invalid_argument);
  EXPECT_THROW(spec_of({3, 0, 1}).validate(), std::invalid_argument);
  EXPECT_NO_THROW(spec_of({3, 1}).validate());
}

TEST(MlpForwardTest, ZeroNetworkOutputsZero) {
  for (Activation a : {Activation::kRelu, Activation::kTanh, Activation::kElu}) {
    const MlpSpec spec = spec_of({3, 4, 2}, a);
    const ParamVector zero(Eigen::VectorXd::Zero(layout_size(spec)));
    const Eigen::VectorXd out = forward_one(spec, zero, Eigen::Vector3d(0.3, -2.0, 5.0));
    EXPECT_EQ(out, Eigen::VectorXd::Zero(2)) << to_string(a);
  }
}

TEST(MlpForwardTest, SingleLinearUnit) {
  const MlpSpec spec = spec_of({2, 1}, Activation::kRelu, false);
  const ParamVector p(Eigen::Vector2d(1, 1));
  EXPECT_DOUBLE_EQ(forward_one(spec, p, Eigen::Vector2d(3, 4))[0], 7.0);
}

TEST(MlpForwardTest, HandEvaluatedTwoLayerRelu) {
  const MlpSpec spec = spec_of({2, 2, 1});
  Eigen::VectorXd v(9);
  v << 1, -2, 3, 4, /*b1*/ 0, 0, /*W2*/ 1, 1, /*b2*/ 0;
  EXPECT_DOUBLE_EQ(forward_one(spec, ParamVector(v), Eigen::Vector2d(1, 1))[0], 7.0);
}

TEST(MlpForwardTest, InputWidthMismatchNamesBoth) {
  const MlpSpec spec = spec_of({3, 1});
  Graph g;
  try {
    mlp_forward(g, spec, Tensor::zeros({4}), Tensor::zeros({2}));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2]"), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
  EXPECT_THROW(mlp_forward(g, spec, Tensor::zeros({5}), Tensor::zeros({3})), ShapeError);
}

TEST(MlpForwardTest, GraphPathMatchesLoopOracle) {
  std::mt19937_64 rng(11);
  for (Activation a : {Activation::kRelu, Activation::kSigmoid, Activation::kTanh, Activation::kElu}) {
    for (Head h : {Head::kNone, Head::kSoftmax, Head::kLogSoftmax}) {
      for (bool biases : {true, false}) {
        MlpSpec spec = spec_of({5, 7, 6, 3}, a, biases);
        spec.head = h;
        const ParamVector p = random_params(spec, rng);
        const Index batch = 4;
        RowMatrix xs(batch, 5);
        for (Index r = 0; r < batch; ++r) xs.row(r) = random_input(5, rng, 2.0).transpose();

        Graph g;
        const Tensor batched = mlp_forward(g, spec, p.tensor(), Tensor::matrix(xs));
        const RowMatrix eig = evaluate(spec, p, xs);
        for (Index r = 0; r < batch; ++r) {
          const auto ref = oracle::forward(spec, p.values, oracle::to_std(xs.row(r).transpose()));
          const Eigen::VectorXd single = forward_one(spec, p, xs.row(r).transpose());
          for (Index j = 0; j < 3; ++j) {
            const double want = ref[static_cast<std::size_t>(j)];
            EXPECT_NEAR(batched.as_matrix()(r, j), want, 1e-12);
            EXPECT_NEAR(single[j], want, 1e-12);
            EXPECT_NEAR(eig(r, j), want, 1e-12);
          }
        }
      }
    }
  }
}

TEST(MlpForwardTest, PerSampleParametersMatchSharedEvaluation) {
  std::mt19937_64 rng(12);
  const MlpSpec spec = spec_of({3, 4, 2}, Activation::kTanh);
  const Index batch = 5;
  RowMatrix thetas(batch, layout_size(spec));
  RowMatrix xs(batch, 3);
  for (Index r = 0; r < batch; ++r) {
    thetas.row(r) = random_params(spec, rng).values.transpose();
    xs.row(r) = random_input(3, rng).transpose();
  }
  Graph g;
  const Tensor out = mlp_forward(g, spec, Tensor::matrix(thetas), Tensor::matrix(xs));
  for (Index r = 0; r < batch; ++r) {
    const auto ref = oracle::forward(spec, thetas.row(r).transpose(), oracle::to_std(xs.row(r).transpose()));
    for (Index j = 0; j < 2; ++j) EXPECT_NEAR(out.as_matrix()(r, j), ref[static_cast<std::size_t>(j)], 1e-12);
  }
  EXPECT_THROW(mlp_forward(g, spec, Tensor::matrix(thetas), Tensor::zeros({3})), ShapeError);
}

TEST(MlpInitTest, DeterministicGivenSeed) {
  const MlpSpec spec = spec_of({6, 5, 2});
  std::mt19937_64 a(99), b(99);
  EXPECT_EQ(mlp_init(spec, InitScheme::he_uniform(), a), mlp_init(spec, InitScheme::he_uniform(), b));
}

TEST(MlpInitTest, HeUniformBoundsAndZeroBiases) {
  const MlpSpec spec = spec_of({6, 40});
  std::mt19937_64 rng(5);
  const ParamVector p = mlp_init(spec, InitScheme::he_uniform(), rng);
  const auto layers = unflatten(spec, p);
  EXPECT_LE(layers[0].weight.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_EQ(layers[0].bias, Eigen::VectorXd::Zero(40));
}

TEST(MlpInitTest, FanInUniformBoundsIncludeBiases) {
  const MlpSpec spec = spec_of({16, 400, 3});
  std::mt19937_64 rng(7);
  const auto layers = unflatten(spec, mlp_init(spec, InitScheme::fan_in_uniform(), rng));
  // Bounds 1/sqrt(16) and 1/sqrt(400); a uniform sample of 1200 values nearly reaches them.
  EXPECT_LE(layers[0].weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_GT(layers[0].weight.cwiseAbs().maxCoeff(), 0.24);
  EXPECT_LE(layers[0].bias.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_GT(layers[0].bias.cwiseAbs().maxCoeff(), 0.2);
  EXPECT_LE(layers[1].weight.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LE(layers[1].bias.cwiseAbs().maxCoeff(), 0.05);
}

TEST(MlpInitTest, HeUniformIsCentred) {
  const MlpSpec spec = spec_of({6, 16667}, Activation::kRelu, false);
  std::mt19937_64 rng(6);
  const ParamVector p = mlp_init(spec, InitScheme::he_uniform(), rng);
  ASSERT_GE(p.size(), 100000);
  EXPECT_LT(std::abs(p.values.mean()), 0.01);
}

TEST(ParamCountTest, PrintedFixtures) {
  EXPECT_EQ(param_count(spec_of({1000, 10, 1}), ParamConvention::kWeightsOnly), 10010);
  EXPECT_EQ(param_count(spec_of({42, 10, 3}), ParamConvention::kWeightsOnly), 450);
  EXPECT_EQ(param_count(spec_of({492, 10, 3}), ParamConvention::kWeightsOnly), 4950);
  EXPECT_EQ(param_count(spec_of({3072, 10, 12}), ParamConvention::kWeightsOnly), 30840);
  for (Index n : {1, 7, 100}) {
    EXPECT_EQ(param_count(spec_of({n, 1}), ParamConvention::kWeightsAndBiases), n + 1);
  }
}

TEST(SpectralComplexityTest, HandComputedExamples) {
  {
    const MlpSpec spec = spec_of({2, 2, 1});
    Eigen::VectorXd v(9);
    v << 1, -2, 3, 4, 0, 0, 1, 1, 0;
    EXPECT_DOUBLE_EQ(spectral_complexity(spec, ParamVector(v)), 6.0);
  }
  {
    const MlpSpec spec = spec_of({3, 3, 3}, Activation::kRelu, false);
    Eigen::VectorXd v(18);
    Eigen::Map<RowMatrix>(v.data(), 3, 3).setIdentity();
    Eigen::Map<RowMatrix>(v.data() + 9, 3, 3).setIdentity();
    EXPECT_DOUBLE_EQ(spectral_complexity(spec, ParamVector(v)), 1.0);
  }
  {
    const MlpSpec spec = spec_of({2, 2, 1}, Activation::kSigmoid, false);
    Eigen::VectorXd v(6);
    v << 1, 0, 1, 2, /*W2*/ 2, -1;  // ||W1||_1 = max(2, 2) = 2, ||W2||_1 = 2
    EXPECT_DOUBLE_EQ(spectral_complexity(spec, ParamVector(v)), 1.0);
  }
}

TEST(ActivationInfoTest, LipschitzSpotCheck) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (Activation a : {Activation::kRelu, Activation::kSigmoid, Activation::kTanh, Activation::kElu}) {
    const ActivationInfo info = activation_info(a);
    EXPECT_GT(info.lipschitz, 0.0);
    EXPECT_DOUBLE_EQ(activate(a, 0.0), info.value_at_zero);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng), y = u(rng);
      EXPECT_LE(std::abs(activate(a, x) - activate(a, y)), info.lipschitz * std::abs(x - y) + 1e-15);
    }
  }
}

// Lipschitz bound: ||f(x1) - f(x2)||_1 <= C(f) ||x1 - x2||_1.
TEST(SpectralComplexityTest, BoundsLipschitzConstant) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<Index> width(1, 6);
  const Activation acts[] = {Activation::kRelu, Activation::kSigmoid, Activation::kTanh, Activation::kElu};
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index depth = 1 + trial % 4;
    std::vector<Index> widths{width(rng)};
    for (Index i = 0; i < depth; ++i) widths.push_back(width(rng));
    const MlpSpec spec = spec_of(widths, acts[trial % 4]);
    const ParamVector p = random_params(spec, rng, 1.5);
    const Eigen::VectorXd x1 = random_input(widths[0], rng), x2 = random_input(widths[0], rng);
    const double lhs = (forward_one(spec, p, x1) - forward_one(spec, p, x2)).lpNorm<1>();
    const double rhs = spectral_complexity(spec, p) * (x1 - x2).lpNorm<1>();
    if (lhs > rhs * (1 + 1e-12)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

// Zero-bias output bound: ||f(x)||_1 <= L^{k-1} ||x||_1 prod ||W^i||_1 for s(0) = 0.
TEST(SpectralComplexityTest, BoundsZeroBiasOutput) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<Index> width(1, 6);
  const Activation acts[] = {Activation::kRelu, Activation::kTanh, Activation::kElu};
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Index> widths{width(rng)};
    for (int i = 0; i <= trial % 4; ++i) widths.push_back(width(rng));
    const MlpSpec spec = spec_of(widths, acts[trial % 3], false);
    const ParamVector p = random_params(spec, rng, 1.5);
    const Eigen::VectorXd x = random_input(widths[0], rng, 3.0);
    const double lhs = forward_one(spec, p, x).lpNorm<1>();
    const double rhs = spectral_complexity(spec, p) * x.lpNorm<1>();
    if (lhs > rhs * (1 + 1e-12)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(ParamVectorTest, FlattenUnflattenRoundTripIsExact) {
  std::mt19937_64 rng(31);
  for (bool biases : {true, false}) {
    const MlpSpec spec = spec_of({4, 3, 5, 2}, Activation::kElu, biases);
    const ParamVector p = random_params(spec, rng);
    const auto layers = unflatten(spec, p);
    EXPECT_EQ(flatten(spec, layers), p);
  }
  EXPECT_THROW(unflatten(spec_of({2, 2}), ParamVector(Eigen::VectorXd::Zero(5))), std::invalid_argument);
}

TEST(ParamVectorTest, BinaryFormat) {
  std::mt19937_64 rng(32);
  const ParamVector p = random_params(spec_of({3, 2}), rng);
  std::stringstream ss;
  write_params(ss, p);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u + 8u * static_cast<std::size_t>(p.size()));
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), p.size());  // little-endian count
  for (int i = 1; i < 8; ++i) EXPECT_EQ(bytes[static_cast<std::size_t>(i)], 0);
  std::stringstream in(bytes);
  EXPECT_EQ(read_params(in), p);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_params(truncated), std::runtime_error);
}

TEST(Conv2dTest, TeacherShapes) {
  const Tensor mnist = Tensor::zeros({1, 28, 28});
  const Tensor k1 = Tensor::zeros({20, 1, 10, 10});
  const Tensor h1 = conv2d_forward(mnist, k1, 2);
  EXPECT_EQ(h1.shape(), (Shape{20, 10, 10}));
  const Tensor h2 = conv2d_forward(h1, Tensor::zeros({50, 20, 10, 10}), 2);
  EXPECT_EQ(h2.shape(), (Shape{50, 1, 1}));
  EXPECT_EQ(h2.values(), Eigen::VectorXd::Zero(50));
}

TEST(Conv2dTest, ValidCrossCorrelation) {
  Eigen::VectorXd in(9);
  in << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Eigen::VectorXd k(4);
  k << 1, 0, 0, -1;
  const Tensor out = conv2d_forward(Tensor({1, 3, 3}, in), Tensor({1, 1, 2, 2}, k),
                                    Eigen::VectorXd::Constant(1, 0.5), 1);
  ASSERT_EQ(out.shape(), (Shape{1, 2, 2}));
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(out[i], -4.0 + 0.5);
  EXPECT_THROW(conv2d_forward(Tensor::zeros({1, 3, 3}), Tensor::zeros({1, 1, 4, 4}), 1), ShapeError);
}

}  // namespace
}  // namespace hypernet
