#include "hypernet/nets.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hypernet {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kElu: return "elu";
  }
  return "?";
}

std::string_view to_string(Head h) {
  switch (h) {
    case Head::kNone: return "none";
    case Head::kSoftmax: return "softmax";
    case Head::kLogSoftmax: return "log-softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::kRelu, Activation::kSigmoid, Activation::kTanh, Activation::kElu}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Head parse_head(std::string_view name) {
  for (Head h : {Head::kNone, Head::kSoftmax, Head::kLogSoftmax}) {
    if (to_string(h) == name) return h;
  }
  throw std::invalid_argument("unknown head '" + std::string(name) + "'");
}

ActivationInfo activation_info(Activation a) {
  switch (a) {
    case Activation::kRelu: return {a, 1.0, 0.0};
    case Activation::kSigmoid: return {a, 0.25, 0.5};
    case Activation::kTanh: return {a, 1.0, 0.0};
    case Activation::kElu: return {a, 1.0, 0.0};
  }
  throw std::logic_error("unhandled activation");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) {
    throw std::invalid_argument("MlpSpec needs at least one weight matrix, got widths " +
                                to_string(widths));
  }
  for (Index w : widths) {
    if (w <= 0) throw std::invalid_argument("MlpSpec widths must be positive: " + to_string(widths));
  }
}

std::string to_string(const MlpSpec& spec) {
  std::ostringstream os;
  for (std::size_t i = 0; i < spec.widths.size(); ++i) os << (i ? "->" : "") << spec.widths[i];
  os << ' ' << to_string(spec.activation);
  if (spec.head != Head::kNone) os << '+' << to_string(spec.head);
  if (!spec.use_biases) os << " (no biases)";
  return os.str();
}

std::vector<LayerSlot> param_layout(const MlpSpec& spec) {
  spec.validate();
  std::vector<LayerSlot> slots;
  slots.reserve(spec.widths.size() - 1);
  Index offset = 0;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    LayerSlot s;
    s.cols = spec.widths[i];
    s.rows = spec.widths[i + 1];
    s.weight_offset = offset;
    offset += s.rows * s.cols;
    if (spec.use_biases) {
      s.bias_offset = offset;
      offset += s.rows;
    }
    slots.push_back(s);
  }
  return slots;
}

Index param_count(const MlpSpec& spec, ParamConvention convention) {
  spec.validate();
  Index n = 0;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    n += spec.widths[i] * spec.widths[i + 1];
    if (convention == ParamConvention::kWeightsAndBiases) n += spec.widths[i + 1];
  }
  return n;
}

Index layout_size(const MlpSpec& spec) {
  return param_count(spec, spec.use_biases ? ParamConvention::kWeightsAndBiases
                                           : ParamConvention::kWeightsOnly);
}

void check_params(const MlpSpec& spec, const ParamVector& params) {
  const Index expected = layout_size(spec);
  if (params.size() != expected) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) +
                                " entries but spec " + to_string(spec) + " needs " +
                                std::to_string(expected));
  }
}

std::vector<Layer> unflatten(const MlpSpec& spec, const ParamVector& params) {
  check_params(spec, params);
  std::vector<Layer> layers;
  for (const LayerSlot& s : param_layout(spec)) {
    Layer layer;
    layer.weight =
        Eigen::Map<const RowMatrix>(params.values.data() + s.weight_offset, s.rows, s.cols);
    if (s.bias_offset >= 0) layer.bias = params.values.segment(s.bias_offset, s.rows);
    layers.push_back(std::move(layer));
  }
  return layers;
}

ParamVector flatten(const MlpSpec& spec, std::span<const Layer> layers) {
  const auto slots = param_layout(spec);
  if (layers.size() != slots.size()) {
    throw std::invalid_argument("flatten: expected " + std::to_string(slots.size()) +
                                " layers, got " + std::to_string(layers.size()));
  }
  Eigen::VectorXd values(layout_size(spec));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    const Layer& layer = layers[i];
    if (layer.weight.rows() != s.rows || layer.weight.cols() != s.cols) {
      throw std::invalid_argument("flatten: layer " + std::to_string(i + 1) + " weight is " +
                                  std::to_string(layer.weight.rows()) + "x" +
                                  std::to_string(layer.weight.cols()));
    }
    Eigen::Map<RowMatrix>(values.data() + s.weight_offset, s.rows, s.cols) = layer.weight;
    if (s.bias_offset >= 0) {
      if (layer.bias.size() != s.rows) {
        throw std::invalid_argument("flatten: layer " + std::to_string(i + 1) + " bias size");
      }
      values.segment(s.bias_offset, s.rows) = layer.bias;
    }
  }
  return ParamVector(std::move(values));
}

Eigen::Map<const RowMatrix> weight_view(const MlpSpec& spec, const ParamVector& params,
                                        Index layer) {
  check_params(spec, params);
  const auto slots = param_layout(spec);
  const LayerSlot& s = slots.at(static_cast<std::size_t>(layer));
  return Eigen::Map<const RowMatrix>(params.values.data() + s.weight_offset, s.rows, s.cols);
}

namespace {

Tensor activation_node(Graph& g, Activation a, const Tensor& z) {
  switch (a) {
    case Activation::kRelu: return relu(g, z);
    case Activation::kSigmoid: return sigmoid(g, z);
    case Activation::kTanh: return tanh(g, z);
    case Activation::kElu: return elu(g, z);
  }
  throw std::logic_error("unhandled activation");
}

}  // namespace

Tensor mlp_forward(Graph& graph, const MlpSpec& spec, const Tensor& params, const Tensor& x) {
  const Index n = layout_size(spec);
  const bool per_sample = params.rank() == 2;
  if (params.rank() > 2 || params.shape().back() != n) {
    throw ShapeError("mlp_forward: parameters " + to_string(params.shape()) + " do not match spec " +
                     to_string(spec) + " (" + std::to_string(n) + " entries)");
  }
  if (x.rank() > 2 || x.shape().back() != spec.input_dim()) {
    throw ShapeError("mlp_forward: input " + to_string(x.shape()) + " does not match input width " +
                     std::to_string(spec.input_dim()));
  }
  const bool batched = x.rank() == 2;
  if (per_sample && (!batched || x.dim(0) != params.dim(0))) {
    throw ShapeError("mlp_forward: per-sample parameters " + to_string(params.shape()) +
                     " need a batch of matching size, got input " + to_string(x.shape()));
  }
  const auto slots = param_layout(spec);
  Tensor act = x;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    const Tensor w_flat = slice(graph, params, s.weight_offset, s.weight_offset + s.rows * s.cols);
    Tensor z;
    if (per_sample) {
      z = batched_matvec(graph, reshape(graph, w_flat, {params.dim(0), s.rows, s.cols}), act);
    } else {
      const Tensor w = reshape(graph, w_flat, {s.rows, s.cols});
      z = batched ? matmul(graph, act, transpose(graph, w)) : matmul(graph, w, act);
    }
    if (s.bias_offset >= 0) {
      z = add(graph, z, slice(graph, params, s.bias_offset, s.bias_offset + s.rows));
    }
    act = i + 1 < slots.size() ? activation_node(graph, spec.activation, z) : z;
  }
  switch (spec.head) {
    case Head::kNone: return act;
    case Head::kSoftmax: return softmax(graph, act);
    case Head::kLogSoftmax: return log_softmax(graph, act);
  }
  return act;
}

ParamVector mlp_init(const MlpSpec& spec, const InitScheme& scheme, std::mt19937_64& rng) {
  const auto slots = param_layout(spec);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(layout_size(spec));
  for (const LayerSlot& s : slots) {
    double lo = scheme.low;
    double hi = scheme.high;
    if (scheme.kind == InitScheme::Kind::kHeUniform) {
      hi = std::sqrt(6.0 / static_cast<double>(s.cols));
      lo = -hi;
    } else if (scheme.kind == InitScheme::Kind::kFanInUniform) {
      hi = 1.0 / std::sqrt(static_cast<double>(s.cols));
      lo = -hi;
    }
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Index j = 0; j < s.rows * s.cols; ++j) values[s.weight_offset + j] = dist(rng);
    if (s.bias_offset >= 0 && scheme.kind != InitScheme::Kind::kHeUniform) {
      for (Index j = 0; j < s.rows; ++j) values[s.bias_offset + j] = dist(rng);
    }
  }
  return ParamVector(std::move(values));
}

double spectral_complexity(const MlpSpec& spec, const ParamVector& params) {
  check_params(spec, params);
  const double lip = activation_info(spec.activation).lipschitz;
  double c = std::pow(lip, static_cast<double>(spec.layers() - 1));
  for (Index i = 0; i < spec.layers(); ++i) c *= induced_l1_norm(weight_view(spec, params, i));
  return c;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, Index stride) {
  return conv2d_forward(input, kernels, Eigen::VectorXd::Zero(kernels.rank() == 4 ? kernels.dim(0) : 0),
                        stride);
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Eigen::VectorXd& bias,
                      Index stride) {
  if (input.rank() != 3 || kernels.rank() != 4 || kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: input " + to_string(input.shape()) + " and kernels " +
                     to_string(kernels.shape()) + " are incompatible");
  }
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  const Index c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const Index co = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  if (kh > h || kw > w) {
    throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                     " larger than input " + std::to_string(h) + "x" + std::to_string(w));
  }
  if (bias.size() != co) throw ShapeError("conv2d: bias size does not match output channels");
  const Index ho = (h - kh) / stride + 1;
  const Index wo = (w - kw) / stride + 1;
  const Eigen::VectorXd& in = input.values();
  const Eigen::VectorXd& k = kernels.values();
  Eigen::VectorXd out(co * ho * wo);
  for (Index o = 0; o < co; ++o) {
    for (Index r = 0; r < ho; ++r) {
      for (Index q = 0; q < wo; ++q) {
        double acc = bias[o];
        for (Index ch = 0; ch < c; ++ch) {
          for (Index u = 0; u < kh; ++u) {
            const double* row = in.data() + (ch * h + r * stride + u) * w + q * stride;
            const double* kr = k.data() + ((o * c + ch) * kh + u) * kw;
            for (Index v = 0; v < kw; ++v) acc += row[v] * kr[v];
          }
        }
        out[(o * ho + r) * wo + q] = acc;
      }
    }
  }
  return Tensor({co, ho, wo}, std::move(out));
}

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

}  // namespace

void write_params(std::ostream& out, const ParamVector& params) {
  const auto count = to_little(static_cast<std::uint64_t>(params.size()));
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (Index i = 0; i < params.size(); ++i) {
    const double v = to_little(params.values[i]);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  if (!out) throw std::runtime_error("write_params: stream write failed");
}

ParamVector read_params(std::istream& in) {
  std::uint64_t count = 0;
  if (!in.read(reinterpret_cast<char*>(&count), sizeof count)) {
    throw std::runtime_error("read_params: missing length header");
  }
  count = to_little(count);
  Eigen::VectorXd values(static_cast<Index>(count));
  for (Index i = 0; i < values.size(); ++i) {
    double v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
      throw std::runtime_error("read_params: truncated after " + std::to_string(i) + " of " +
                               std::to_string(count) + " values");
    }
    values[i] = to_little(v);
  }
  return ParamVector(std::move(values));
}

void save_params(const std::filesystem::path& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_params(out, params);
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_params(in);
}

}  // namespace hypernet
