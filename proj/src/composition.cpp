#include "hypernet/composition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hypernet {
namespace {

void check_pair(const Tensor& x, const Tensor& cond, const char* who) {
  if (x.rank() != cond.rank() || x.rank() < 1 || x.rank() > 2 ||
      (x.rank() == 2 && x.dim(0) != cond.dim(0))) {
    throw ShapeError(std::string(who) + ": task input " + to_string(x.shape()) +
                     " and conditioning input " + to_string(cond.shape()) +
                     " must both be vectors or equal-size batches");
  }
}

std::vector<Tensor> constants(Graph& graph, const std::vector<ParamVector>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const ParamVector& p : params) out.push_back(graph.constant(p.tensor()));
  return out;
}

}  // namespace

Index Model::trainable_count() const {
  Index n = 0;
  for (const ParamVector& p : params_) n += p.size();
  return n;
}

RowMatrix Model::predict(const RowMatrix& x, const RowMatrix& cond, Index chunk) const {
  if (chunk < 1) throw std::invalid_argument("predict: chunk must be positive");
  const Index n = x.rows();
  if (cond_dim() > 0 && cond.rows() != n) {
    throw ShapeError("predict: " + std::to_string(n) + " task inputs but " + std::to_string(cond.rows()) +
                     " conditioning inputs");
  }
  RowMatrix out(n, output_dim());
  for (Index start = 0; start < n; start += chunk) {
    const Index len = std::min(chunk, n - start);
    Graph graph;
    const auto params = constants(graph, params_);
    const Tensor xs = Tensor::matrix(x.middleRows(start, len));
    const Tensor cs = cond_dim() > 0 ? Tensor::matrix(cond.middleRows(start, len)) : Tensor();
    out.middleRows(start, len) = forward(graph, params, xs, cs).as_matrix();
  }
  return out;
}

HyperModel::HyperModel(MlpSpec f_spec, MlpSpec g_spec, ParamVector theta_f)
    : f_spec_(std::move(f_spec)), g_spec_(std::move(g_spec)) {
  f_spec_.validate();
  g_spec_.validate();
  if (f_spec_.output_dim() != layout_size(g_spec_)) {
    throw std::invalid_argument("HyperModel: f outputs " + std::to_string(f_spec_.output_dim()) +
                                " values but g " + to_string(g_spec_) + " has " +
                                std::to_string(layout_size(g_spec_)) + " parameters");
  }
  check_params(f_spec_, theta_f);
  params_.push_back(std::move(theta_f));
}

HyperModel HyperModel::init(MlpSpec f_spec, MlpSpec g_spec, const InitScheme& scheme, std::mt19937_64& rng) {
  f_spec.validate();
  ParamVector theta = mlp_init(f_spec, scheme, rng);
  return HyperModel(std::move(f_spec), std::move(g_spec), std::move(theta));
}

void HyperModel::hyperfan_in_rescale() {
  const LayerSlot out = param_layout(f_spec_).back();
  Eigen::VectorXd& theta = params_[0].values;
  Eigen::Map<RowMatrix> w(theta.data() + out.weight_offset, out.rows, out.cols);
  for (const LayerSlot& g : param_layout(g_spec_)) {
    const double s = 1.0 / std::sqrt(static_cast<double>(g.cols));
    w.middleRows(g.weight_offset, g.rows * g.cols) *= s;
    if (out.bias_offset >= 0) theta.segment(out.bias_offset + g.weight_offset, g.rows * g.cols) *= s;
    if (g.bias_offset >= 0) {
      w.middleRows(g.bias_offset, g.rows) *= s;
      if (out.bias_offset >= 0) theta.segment(out.bias_offset + g.bias_offset, g.rows) *= s;
    }
  }
}

Tensor HyperModel::forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                           const Tensor& cond) const {
  if (params.size() != 1) throw std::invalid_argument("HyperModel::forward expects one parameter tensor");
  return hyper_forward(graph, *this, params[0], x, cond);
}

EmbedModel::EmbedModel(MlpSpec e_spec, MlpSpec q_spec, ParamVector theta_e, ParamVector theta_q)
    : e_spec_(std::move(e_spec)), q_spec_(std::move(q_spec)) {
  e_spec_.validate();
  q_spec_.validate();
  const Index k = e_spec_.output_dim();
  if (k < 1) throw std::invalid_argument("EmbedModel: embedding dimension must be positive");
  if (q_spec_.input_dim() <= k) {
    throw std::invalid_argument("EmbedModel: q input width " + std::to_string(q_spec_.input_dim()) +
                                " leaves no room for x next to a " + std::to_string(k) +
                                "-dim embedding");
  }
  check_params(e_spec_, theta_e);
  check_params(q_spec_, theta_q);
  params_.push_back(std::move(theta_e));
  params_.push_back(std::move(theta_q));
}

EmbedModel EmbedModel::init(MlpSpec e_spec, MlpSpec q_spec, const InitScheme& scheme, std::mt19937_64& rng) {
  e_spec.validate();
  q_spec.validate();
  ParamVector te = mlp_init(e_spec, scheme, rng);
  ParamVector tq = mlp_init(q_spec, scheme, rng);
  return EmbedModel(std::move(e_spec), std::move(q_spec), std::move(te), std::move(tq));
}

Tensor EmbedModel::forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                           const Tensor& cond) const {
  if (params.size() != 2) throw std::invalid_argument("EmbedModel::forward expects two parameter tensors");
  return embed_forward(graph, *this, params[0], params[1], x, cond);
}

MlpModel::MlpModel(MlpSpec spec, ParamVector theta) : spec_(std::move(spec)) {
  spec_.validate();
  check_params(spec_, theta);
  params_.push_back(std::move(theta));
}

MlpModel MlpModel::init(MlpSpec spec, const InitScheme& scheme, std::mt19937_64& rng) {
  spec.validate();
  ParamVector theta = mlp_init(spec, scheme, rng);
  return MlpModel(std::move(spec), std::move(theta));
}

Tensor MlpModel::forward(Graph& graph, std::span<const Tensor> params, const Tensor& x, const Tensor&) const {
  if (params.size() != 1) throw std::invalid_argument("MlpModel::forward expects one parameter tensor");
  return mlp_forward(graph, spec_, params[0], x);
}

Tensor hyper_forward(Graph& graph, const HyperModel& model, const Tensor& theta_f, const Tensor& x,
                     const Tensor& cond) {
  check_pair(x, cond, "hyper_forward");
  const Tensor theta_g = mlp_forward(graph, model.f_spec(), theta_f, cond);
  return mlp_forward(graph, model.g_spec(), theta_g, x);
}

Tensor hyper_forward(Graph& graph, const HyperModel& model, const Tensor& x, const Tensor& cond) {
  return hyper_forward(graph, model, graph.constant(model.theta_f().tensor()), x, cond);
}

Tensor embed_forward(Graph& graph, const EmbedModel& model, const Tensor& theta_e, const Tensor& theta_q,
                     const Tensor& x, const Tensor& cond) {
  check_pair(x, cond, "embed_forward");
  const Tensor z = mlp_forward(graph, model.e_spec(), theta_e, cond);
  const Tensor joined = concat(graph, x, z, x.rank() == 2 ? 1 : 0);
  return mlp_forward(graph, model.q_spec(), theta_q, joined);
}

Tensor embed_forward(Graph& graph, const EmbedModel& model, const Tensor& x, const Tensor& cond) {
  return embed_forward(graph, model, graph.constant(model.theta_e().tensor()),
                       graph.constant(model.theta_q().tensor()), x, cond);
}

Tensor cnp_embed(Graph& graph, const MlpSpec& e_spec, const Tensor& theta_e, std::span<const Tensor> set) {
  if (set.empty()) throw std::invalid_argument("cnp_embed: empty conditioning set");
  Tensor total = mlp_forward(graph, e_spec, theta_e, set[0]);
  for (std::size_t i = 1; i < set.size(); ++i) {
    if (set[i].shape() != set[0].shape()) {
      throw ShapeError("cnp_embed: set element " + to_string(set[i].shape()) + " differs from " +
                       to_string(set[0].shape()));
    }
    total = add(graph, total, mlp_forward(graph, e_spec, theta_e, set[i]));
  }
  return set.size() == 1 ? total : scale(graph, total, 1.0 / static_cast<double>(set.size()));
}

ParamVector EmbedAsHypernet::generated_params(const Eigen::VectorXd& cond) const {
  const RowMatrix z = evaluate(e_spec, theta_e, cond.transpose());
  ParamVector out = fixed;
  out.values.segment(bias_offset, b1.size()) = w12 * z.row(0).transpose() + b1;
  return out;
}

Eigen::VectorXd EmbedAsHypernet::forward(const Eigen::VectorXd& x, const Eigen::VectorXd& cond) const {
  return evaluate(g_spec, generated_params(cond), x.transpose()).row(0).transpose();
}

EmbedAsHypernet embed_as_hypernet(const EmbedModel& model) {
  const MlpSpec& q = model.q_spec();
  if (q.layers() < 2) {
    throw std::invalid_argument("embed_as_hypernet: q " + to_string(q) + " needs a hidden layer");
  }
  const Index k = model.embed_dim();
  const Index dx = model.x_dim();

  EmbedAsHypernet out;
  out.e_spec = model.e_spec();
  out.theta_e = model.theta_e();
  out.g_spec = q;
  out.g_spec.widths[0] = dx;
  out.g_spec.use_biases = true;

  auto layers = unflatten(q, model.theta_q());
  Layer& first = layers[0];
  out.w12 = first.weight.rightCols(k);
  out.b1 = first.bias.size() > 0 ? first.bias : Eigen::VectorXd::Zero(first.weight.rows());
  first.weight = Eigen::MatrixXd(first.weight.leftCols(dx));
  for (Layer& l : layers) {
    if (l.bias.size() == 0) l.bias = Eigen::VectorXd::Zero(l.weight.rows());
  }
  out.fixed = flatten(out.g_spec, layers);
  out.bias_offset = param_layout(out.g_spec)[0].bias_offset;
  return out;
}

}  // namespace hypernet
