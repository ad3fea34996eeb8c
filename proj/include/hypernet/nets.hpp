#pragma once

// Fully connected networks W^k . s(W^{k-1} ... s(W^1 x + b^1) ... ) + b^k whose
// parameters live in a flat vector separate from the architecture, so another
// network can produce them.

#include "hypernet/autodiff.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypernet {

enum class Activation { kRelu, kSigmoid, kTanh, kElu };
enum class Head { kNone, kSoftmax, kLogSoftmax };
enum class ParamConvention { kWeightsOnly, kWeightsAndBiases };

std::string_view to_string(Activation a);
std::string_view to_string(Head h);
Activation parse_activation(std::string_view name);
Head parse_head(std::string_view name);

struct ActivationInfo {
  Activation kind;
  double lipschitz;
  double value_at_zero;
};

ActivationInfo activation_info(Activation a);

/// Scalar activation, usable inside Eigen unaryExpr.
inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0 ? x : 0.0;
    case Activation::kSigmoid:
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::kTanh: return std::tanh(x);
    case Activation::kElu: return x > 0 ? x : std::expm1(x);
  }
  return x;
}

struct MlpSpec {
  std::vector<Index> widths;  // h_1 (input) .. h_{k+1} (output)
  Activation activation = Activation::kRelu;
  Head head = Head::kNone;
  bool use_biases = true;

  Index layers() const { return static_cast<Index>(widths.size()) - 1; }
  Index input_dim() const { return widths.front(); }
  Index output_dim() const { return widths.back(); }

  /// Throws std::invalid_argument unless there is at least one layer and all widths are positive.
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

std::string to_string(const MlpSpec& spec);

/// Offsets of one layer inside the flat layout [W^1 row-major, b^1, ..., W^k, b^k].
struct LayerSlot {
  Index rows = 0;  // h_{i+1}
  Index cols = 0;  // h_i
  Index weight_offset = 0;
  Index bias_offset = -1;  // -1 when the spec has no biases
};

std::vector<LayerSlot> param_layout(const MlpSpec& spec);

/// sum h_i h_{i+1}, plus sum h_{i+1} for weights-and-biases.
Index param_count(const MlpSpec& spec, ParamConvention convention);

/// Length of the flat parameter vector the spec's own layout requires.
Index layout_size(const MlpSpec& spec);

/// Flat parameters for one MlpSpec.
struct ParamVector {
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(Eigen::VectorXd v) : values(std::move(v)) {}

  Index size() const { return values.size(); }
  Tensor tensor() const { return Tensor::from_vector(values); }

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values.size() == b.values.size() && a.values == b.values;
  }
};

/// Throws unless params.size() matches the spec layout.
void check_params(const MlpSpec& spec, const ParamVector& params);

struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;  // empty without biases
};

std::vector<Layer> unflatten(const MlpSpec& spec, const ParamVector& params);
ParamVector flatten(const MlpSpec& spec, std::span<const Layer> layers);

Eigen::Map<const RowMatrix> weight_view(const MlpSpec& spec, const ParamVector& params,
                                        Index layer);

/// Records the forward pass in `graph`.
///
/// `params` is either a shared flat vector [N] or per-sample parameters [B,N];
/// `x` is a single input [h_1] or a batch [B,h_1]. Per-sample parameters require
/// a batched input of matching B.
Tensor mlp_forward(Graph& graph, const MlpSpec& spec, const Tensor& params, const Tensor& x);

/// Graph-free forward over a batch whose rows are samples.
template <typename Derived>
RowMatrix evaluate(const MlpSpec& spec, const ParamVector& params,
                   const Eigen::MatrixBase<Derived>& inputs) {
  check_params(spec, params);
  if (inputs.cols() != spec.input_dim()) {
    throw ShapeError("evaluate: input width " + std::to_string(inputs.cols()) +
                     " does not match spec input " + std::to_string(spec.input_dim()));
  }
  const auto slots = param_layout(spec);
  RowMatrix act = inputs;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    Eigen::Map<const RowMatrix> w(params.values.data() + s.weight_offset, s.rows, s.cols);
    RowMatrix z = act * w.transpose();
    if (s.bias_offset >= 0) {
      z.rowwise() += params.values.segment(s.bias_offset, s.rows).transpose();
    }
    if (i + 1 < slots.size()) {
      const Activation a = spec.activation;
      act = z.unaryExpr([a](double v) { return activate(a, v); });
    } else {
      act = std::move(z);
    }
  }
  if (spec.head != Head::kNone) {
    for (Index r = 0; r < act.rows(); ++r) {
      const double mx = act.row(r).maxCoeff();
      const double lse = mx + std::log((act.row(r).array() - mx).exp().sum());
      if (spec.head == Head::kSoftmax) {
        act.row(r) = (act.row(r).array() - lse).exp();
      } else {
        act.row(r).array() -= lse;
      }
    }
  }
  return act;
}

struct InitScheme {
  enum class Kind { kHeUniform, kUniform, kFanInUniform } kind = Kind::kHeUniform;
  double low = 0.0;
  double high = 0.0;

  static InitScheme he_uniform() { return {}; }
  static InitScheme uniform(double a, double b) { return {Kind::kUniform, a, b}; }
  static InitScheme fan_in_uniform() { return {Kind::kFanInUniform, 0.0, 0.0}; }
};

/// He-uniform draws weights of layer i from U(-sqrt(6/h_i), sqrt(6/h_i)) with zero
/// biases; uniform(a,b) draws weights and biases from U(a,b); fan-in-uniform draws both
/// from U(-1/sqrt(h_i), 1/sqrt(h_i)), the usual framework default for linear layers.
ParamVector mlp_init(const MlpSpec& spec, const InitScheme& scheme, std::mt19937_64& rng);

/// Operator norm induced by the vector L1 norm: the largest absolute column sum.
template <typename Derived>
double induced_l1_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

/// L^{k-1} prod_i ||W^i||_1, biases ignored.
double spectral_complexity(const MlpSpec& spec, const ParamVector& params);

/// Valid cross-correlation of a [C,H,W] input with [C_out,C,K,K] kernels, no padding.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, Index stride);
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Eigen::VectorXd& bias,
                      Index stride);

// Binary parameter files: 8-byte little-endian element count, then little-endian f64 values.
void write_params(std::ostream& out, const ParamVector& params);
ParamVector read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace hypernet
