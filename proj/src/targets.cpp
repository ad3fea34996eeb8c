#include "hypernet/targets.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hypernet {
namespace {

constexpr Index kKernel = 10;
constexpr Index kStride = 2;

MlpSpec mlp(std::vector<Index> widths, Activation a, Head h = Head::kNone) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.activation = a;
  s.head = h;
  s.use_biases = true;
  s.validate();
  return s;
}

Index conv_out(Index in) {
  if (in < kKernel) {
    throw ShapeError("conv teacher: input size " + std::to_string(in) + " smaller than kernel");
  }
  return (in - kKernel) / kStride + 1;
}

// Weights and biases from U(-sqrt(6/fan_in), sqrt(6/fan_in)).
std::pair<Tensor, Eigen::VectorXd> conv_layer(Index out, Index in, std::mt19937_64& rng) {
  const Index fan_in = in * kKernel * kKernel;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::VectorXd k(out * fan_in);
  for (Index i = 0; i < k.size(); ++i) k[i] = u(rng);
  Eigen::VectorXd b(out);
  for (Index i = 0; i < out; ++i) b[i] = u(rng);
  return {Tensor({out, in, kKernel, kKernel}, std::move(k)), std::move(b)};
}

Eigen::VectorXd relu_of(const Eigen::VectorXd& v) { return v.cwiseMax(0.0); }

}  // namespace

std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::kType1: return "type1";
    case TargetKind::kType2: return "type2";
    case TargetKind::kType3: return "type3";
    case TargetKind::kConvTeacher: return "conv-teacher";
  }
  return "?";
}

TargetKind parse_target_kind(std::string_view name) {
  for (TargetKind k : {TargetKind::kType1, TargetKind::kType2, TargetKind::kType3, TargetKind::kConvTeacher}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown target kind '" + std::string(name) + "'");
}

Index ConvTeacher::conv1_size() const { return conv_out(height); }
Index ConvTeacher::conv2_size() const { return conv_out(conv1_size()); }

Eigen::VectorXd ConvTeacher::operator()(const Eigen::VectorXd& image) const {
  if (image.size() != channels * height * height) {
    throw ShapeError("conv teacher: image has " + std::to_string(image.size()) + " values, expected " +
                     std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(height));
  }
  const Tensor in({channels, height, height}, image);
  const Tensor h1 = conv2d_forward(in, kernels1, bias1, kStride);
  const Tensor a1(h1.shape(), relu_of(h1.values()));
  const Tensor h2 = conv2d_forward(a1, kernels2, bias2, kStride);
  const Eigen::VectorXd a2 = relu_of(h2.values());
  return evaluate(fc, fc_params, a2.transpose()).row(0).transpose();
}

TargetFn::TargetFn(TargetKind kind, Index x_dim, Index cond_dim, MlpSpec net, ParamVector params)
    : kind_(kind), x_dim_(x_dim), cond_dim_(cond_dim), net_(std::move(net)), params_(std::move(params)) {
  if (kind == TargetKind::kConvTeacher) throw std::invalid_argument("TargetFn: use the ConvTeacher constructor");
  net_.validate();
  check_params(net_, params_);
  Index want_in = cond_dim;
  if (kind == TargetKind::kType2) want_in = x_dim + cond_dim;
  if (kind == TargetKind::kType3 && x_dim != cond_dim) {
    throw std::invalid_argument("type3 target needs d_x == d_I, got " + std::to_string(x_dim) + " and " +
                                std::to_string(cond_dim));
  }
  const Index want_out = kind == TargetKind::kType1 ? x_dim : 1;
  if (net_.input_dim() != want_in || net_.output_dim() != want_out) {
    throw std::invalid_argument("TargetFn: network " + to_string(net_) + " does not fit " +
                                std::string(to_string(kind)) + " with d_x=" + std::to_string(x_dim) +
                                ", d_I=" + std::to_string(cond_dim));
  }
}

TargetFn::TargetFn(ConvTeacher teacher)
    : kind_(TargetKind::kConvTeacher),
      x_dim_(teacher.channels * teacher.height * teacher.height),
      conv_(std::move(teacher)) {
  check_params(conv_->fc, conv_->fc_params);
}

Index TargetFn::output_dim() const { return conv_ ? conv_->fc.output_dim() : 1; }

Eigen::VectorXd TargetFn::operator()(const RowMatrix& x, const RowMatrix& cond) const {
  if (conv_) throw std::logic_error("conv teacher takes images; call teacher()");
  if (x.cols() != x_dim_ || cond.cols() != cond_dim_ || x.rows() != cond.rows()) {
    throw ShapeError("target: inputs " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " and " +
                     std::to_string(cond.rows()) + "x" + std::to_string(cond.cols()) + " do not match d_x=" +
                     std::to_string(x_dim_) + ", d_I=" + std::to_string(cond_dim_));
  }
  switch (kind_) {
    case TargetKind::kType1: {
      const RowMatrix h = evaluate(net_, params_, cond);
      return x.cwiseProduct(h).rowwise().sum();
    }
    case TargetKind::kType2: {
      RowMatrix joined(x.rows(), x_dim_ + cond_dim_);
      joined << x, cond;
      return evaluate(net_, params_, joined).col(0);
    }
    case TargetKind::kType3: {
      const RowMatrix prod = x.cwiseProduct(cond);
      return evaluate(net_, params_, prod).col(0);
    }
    case TargetKind::kConvTeacher: break;
  }
  throw std::logic_error("unreachable target kind");
}

double TargetFn::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& cond) const {
  return (*this)(RowMatrix(x.transpose()), RowMatrix(cond.transpose()))[0];
}

RowMatrix TargetFn::teacher(const RowMatrix& images) const {
  if (!conv_) throw std::logic_error("teacher() is only defined for the conv teacher");
  RowMatrix out(images.rows(), conv_->fc.output_dim());
  for (Index r = 0; r < images.rows(); ++r) out.row(r) = (*conv_)(images.row(r).transpose()).transpose();
  return out;
}

TargetFn make_type1(Index x_dim, Index cond_dim, std::mt19937_64& rng, Index hidden) {
  MlpSpec h = mlp({cond_dim, hidden, hidden, x_dim}, Activation::kSigmoid, Head::kSoftmax);
  ParamVector p = mlp_init(h, InitScheme::he_uniform(), rng);
  return TargetFn(TargetKind::kType1, x_dim, cond_dim, std::move(h), std::move(p));
}

TargetFn make_type2(Index x_dim, Index cond_dim, std::mt19937_64& rng, std::vector<Index> hidden) {
  std::vector<Index> widths{x_dim + cond_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  MlpSpec net = mlp(std::move(widths), Activation::kElu);
  ParamVector p = mlp_init(net, InitScheme::he_uniform(), rng);
  return TargetFn(TargetKind::kType2, x_dim, cond_dim, std::move(net), std::move(p));
}

TargetFn make_type3(Index x_dim, Index cond_dim, std::mt19937_64& rng, std::vector<Index> hidden) {
  if (x_dim != cond_dim) {
    throw std::invalid_argument("type3 target needs d_x == d_I, got " + std::to_string(x_dim) + " and " +
                                std::to_string(cond_dim));
  }
  std::vector<Index> widths{cond_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  MlpSpec net = mlp(std::move(widths), Activation::kElu);
  ParamVector p = mlp_init(net, InitScheme::he_uniform(), rng);
  return TargetFn(TargetKind::kType3, x_dim, cond_dim, std::move(net), std::move(p));
}

TargetFn make_target(TargetKind kind, Index x_dim, Index cond_dim, std::mt19937_64& rng) {
  switch (kind) {
    case TargetKind::kType1: return make_type1(x_dim, cond_dim, rng);
    case TargetKind::kType2: return make_type2(x_dim, cond_dim, rng);
    case TargetKind::kType3: return make_type3(x_dim, cond_dim, rng);
    case TargetKind::kConvTeacher: break;
  }
  throw std::invalid_argument("make_target: use make_conv_teacher for the conv teacher");
}

TargetFn make_conv_teacher(Index channels, std::mt19937_64& rng, Index height) {
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("conv teacher: channels must be 1 or 3, got " + std::to_string(channels));
  }
  ConvTeacher t;
  t.channels = channels;
  t.height = height;
  std::tie(t.kernels1, t.bias1) = conv_layer(20, channels, rng);
  std::tie(t.kernels2, t.bias2) = conv_layer(50, 20, rng);
  const Index s = t.conv2_size();
  t.fc = mlp({50 * s * s, 10}, Activation::kRelu);
  t.fc_params = mlp_init(t.fc, InitScheme::he_uniform(), rng);
  return TargetFn(std::move(t));
}

RowMatrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace hypernet
