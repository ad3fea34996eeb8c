#include "hypernet/autodiff.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace hypernet {

namespace {

std::atomic<std::uint64_t> next_graph_id{1};

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const Eigen::VectorXd& v, Index rows, Index cols) {
  return ConstMap(v.data(), rows, cols);
}

MutMap view(Eigen::VectorXd& v, Index rows, Index cols) { return MutMap(v.data(), rows, cols); }

[[noreturn]] void shape_error(PrimitiveKind kind, const Shape& a, const Shape& b,
                              std::string_view detail = {}) {
  std::ostringstream os;
  os << primitive_name(kind) << ": incompatible shapes " << to_string(a) << " and "
     << to_string(b);
  if (!detail.empty()) os << " (" << detail << ")";
  throw ShapeError(os.str());
}

[[noreturn]] void shape_error(PrimitiveKind kind, const Shape& a, std::string_view detail) {
  std::ostringstream os;
  os << primitive_name(kind) << ": invalid shape " << to_string(a) << " (" << detail << ")";
  throw ShapeError(os.str());
}

std::size_t arity(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kMatmul:
    case PrimitiveKind::kBatchedMatvec:
    case PrimitiveKind::kAdd:
    case PrimitiveKind::kSub:
    case PrimitiveKind::kMul:
    case PrimitiveKind::kConcat:
      return 2;
    default:
      return 1;
  }
}

// Rows/columns of a tensor when softmax-like ops act along the last axis.
std::pair<Index, Index> rows_cols(const Shape& s) {
  if (s.size() == 1) return {1, s[0]};
  return {s[0], shape_size(s) / s[0]};
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string_view primitive_name(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kMatmul: return "matmul";
    case PrimitiveKind::kTranspose: return "transpose";
    case PrimitiveKind::kBatchedMatvec: return "batched_matvec";
    case PrimitiveKind::kAdd: return "add";
    case PrimitiveKind::kSub: return "sub";
    case PrimitiveKind::kMul: return "mul";
    case PrimitiveKind::kScale: return "scale";
    case PrimitiveKind::kConcat: return "concat";
    case PrimitiveKind::kReshape: return "reshape";
    case PrimitiveKind::kSlice: return "slice";
    case PrimitiveKind::kRelu: return "relu";
    case PrimitiveKind::kSigmoid: return "sigmoid";
    case PrimitiveKind::kTanh: return "tanh";
    case PrimitiveKind::kElu: return "elu";
    case PrimitiveKind::kSoftmax: return "softmax";
    case PrimitiveKind::kLogSoftmax: return "log_softmax";
    case PrimitiveKind::kMean: return "mean";
    case PrimitiveKind::kSumOfSquares: return "sum_of_squares";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : Tensor(Shape{0}, Eigen::VectorXd()) {}

Tensor::Tensor(Shape shape, Eigen::VectorXd values)
    : shape_(std::move(shape)),
      values_(std::make_shared<const Eigen::VectorXd>(std::move(values))) {
  if (shape_.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (Index d : shape_) {
    if (d < 0) throw ShapeError("negative extent in shape " + to_string(shape_));
  }
  if (shape_size(shape_) != values_->size()) {
    throw ShapeError("shape " + to_string(shape_) + " holds " + std::to_string(shape_size(shape_)) +
                     " values, got " + std::to_string(values_->size()));
  }
}

Tensor::Tensor(Shape shape, std::shared_ptr<const Eigen::VectorXd> values,
               std::optional<NodeId> node)
    : shape_(std::move(shape)), values_(std::move(values)), node_(node) {}

Tensor Tensor::zeros(Shape shape) {
  const Index n = shape_size(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Zero(n));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, Eigen::VectorXd::Constant(1, value)); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  const Index n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::from_vector(const Eigen::VectorXd& values) { return Tensor({values.size()}, values); }

double Tensor::item() const {
  if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + to_string(shape_));
  return (*values_)[0];
}

Eigen::Map<const RowMatrix> Tensor::as_matrix() const {
  if (rank() == 1) return view(*values_, shape_[0], 1);
  return view(*values_, shape_[0], size() / std::max<Index>(shape_[0], 1));
}

Tensor Tensor::detached() const { return Tensor(shape_, values_, std::nullopt); }

// ---------------------------------------------------------------------------
// Gradients

const Tensor* Gradients::find(const Tensor& t) const {
  const auto& node = t.node();
  if (!node || node->graph != graph_ || node->generation != generation_) return nullptr;
  auto it = grads_.find(node->index);
  return it == grads_.end() ? nullptr : &it->second;
}

const Tensor& Gradients::at(const Tensor& t) const {
  const Tensor* g = find(t);
  if (!g) throw std::out_of_range("no gradient recorded for tensor");
  return *g;
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph() : id_(next_graph_id.fetch_add(1)) {}

void Graph::clear() {
  nodes_.clear();
  ++generation_;
}

Tensor Graph::record(Primitive prim, std::vector<std::size_t> inputs, Shape shape,
                     Eigen::VectorXd values) {
  bool requires_grad = false;
  for (std::size_t i : inputs) requires_grad = requires_grad || nodes_[i].requires_grad;
  const NodeId id{id_, generation_, nodes_.size()};
  Tensor out(std::move(shape), std::make_shared<const Eigen::VectorXd>(std::move(values)), id);
  nodes_.push_back(Node{std::move(prim), std::move(inputs), out.detached(), requires_grad});
  return out;
}

Tensor Graph::variable(const Tensor& value) {
  const NodeId id{id_, generation_, nodes_.size()};
  nodes_.push_back(Node{Primitive::of(PrimitiveKind::kReshape), {}, value.detached(), true});
  return Tensor(value.shape(), value.values_, id);
}

Tensor Graph::constant(const Tensor& value) {
  const NodeId id{id_, generation_, nodes_.size()};
  nodes_.push_back(Node{Primitive::of(PrimitiveKind::kReshape), {}, value.detached(), false});
  return Tensor(value.shape(), value.values_, id);
}

std::size_t Graph::resolve(const Tensor& t) {
  if (!t.node()) return constant(t).node()->index;
  const NodeId& id = *t.node();
  if (id.graph != id_ || id.generation != generation_ || id.index >= nodes_.size()) {
    throw std::logic_error("tensor belongs to a different or cleared graph");
  }
  return id.index;
}

Tensor Graph::apply(const Primitive& prim, std::span<const Tensor> inputs) {
  const PrimitiveKind kind = prim.kind;
  if (inputs.size() != arity(kind)) {
    throw std::invalid_argument(std::string(primitive_name(kind)) + ": expected " +
                                std::to_string(arity(kind)) + " inputs, got " +
                                std::to_string(inputs.size()));
  }
  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (const Tensor& t : inputs) ids.push_back(resolve(t));

  const Tensor& a = inputs[0];
  const Shape& sa = a.shape();
  const Eigen::VectorXd& va = a.values();

  switch (kind) {
    case PrimitiveKind::kMatmul: {
      const Tensor& b = inputs[1];
      const Shape& sb = b.shape();
      if (sa.size() != 2 || sb.size() > 2 || sa[1] != sb[0]) shape_error(kind, sa, sb);
      const Index m = sa[0], n = sa[1];
      const Index p = sb.size() == 2 ? sb[1] : 1;
      Eigen::VectorXd out(m * p);
      view(out, m, p).noalias() = view(va, m, n) * view(b.values(), n, p);
      Shape so = sb.size() == 2 ? Shape{m, p} : Shape{m};
      return record(prim, std::move(ids), std::move(so), std::move(out));
    }
    case PrimitiveKind::kTranspose: {
      if (sa.size() != 2) shape_error(kind, sa, "expected rank 2");
      Eigen::VectorXd out(va.size());
      view(out, sa[1], sa[0]) = view(va, sa[0], sa[1]).transpose();
      return record(prim, std::move(ids), {sa[1], sa[0]}, std::move(out));
    }
    case PrimitiveKind::kBatchedMatvec: {
      const Shape& sb = inputs[1].shape();
      if (sa.size() != 3 || sb.size() != 2 || sa[0] != sb[0] || sa[2] != sb[1]) {
        shape_error(kind, sa, sb, "expected [B,o,i] and [B,i]");
      }
      const Index batch = sa[0], o = sa[1], in = sa[2];
      const Eigen::VectorXd& vb = inputs[1].values();
      Eigen::VectorXd out(batch * o);
      for (Index s = 0; s < batch; ++s) {
        out.segment(s * o, o).noalias() =
            ConstMap(va.data() + s * o * in, o, in) * vb.segment(s * in, in);
      }
      return record(prim, std::move(ids), {batch, o}, std::move(out));
    }
    case PrimitiveKind::kAdd:
    case PrimitiveKind::kSub: {
      const Shape& sb = inputs[1].shape();
      const Eigen::VectorXd& vb = inputs[1].values();
      const double sign = kind == PrimitiveKind::kAdd ? 1.0 : -1.0;
      if (sa == sb) {
        Eigen::VectorXd out = va + sign * vb;
        return record(prim, std::move(ids), sa, std::move(out));
      }
      // Row broadcast of a vector over a batch: [B,n] (+/-) [n].
      if (sa.size() == 2 && sb.size() == 1 && sa[1] == sb[0]) {
        Eigen::VectorXd out = va;
        view(out, sa[0], sa[1]).rowwise() += sign * vb.transpose();
        return record(prim, std::move(ids), sa, std::move(out));
      }
      shape_error(kind, sa, sb);
    }
    case PrimitiveKind::kMul: {
      const Shape& sb = inputs[1].shape();
      if (sa != sb) shape_error(kind, sa, sb);
      Eigen::VectorXd out = va.cwiseProduct(inputs[1].values());
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kScale: {
      Eigen::VectorXd out = prim.factor * va;
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kConcat: {
      const Shape& sb = inputs[1].shape();
      const Eigen::VectorXd& vb = inputs[1].values();
      if (prim.axis == 0 && sa.size() == 1 && sb.size() == 1) {
        Eigen::VectorXd out(va.size() + vb.size());
        out << va, vb;
        const Index n = out.size();
        return record(prim, std::move(ids), {n}, std::move(out));
      }
      if (prim.axis == 1 && sa.size() == 2 && sb.size() == 2 && sa[0] == sb[0]) {
        const Index rows = sa[0], ca = sa[1], cb = sb[1];
        Eigen::VectorXd out(rows * (ca + cb));
        auto o = view(out, rows, ca + cb);
        o.leftCols(ca) = view(va, rows, ca);
        o.rightCols(cb) = view(vb, rows, cb);
        return record(prim, std::move(ids), {rows, ca + cb}, std::move(out));
      }
      shape_error(kind, sa, sb, "axis " + std::to_string(prim.axis));
    }
    case PrimitiveKind::kReshape: {
      if (shape_size(prim.shape) != a.size()) shape_error(kind, sa, prim.shape);
      return record(prim, std::move(ids), prim.shape, va);
    }
    case PrimitiveKind::kSlice: {
      const Index last = sa.back();
      if (sa.size() > 2 || prim.begin < 0 || prim.end > last || prim.begin >= prim.end) {
        shape_error(kind, sa, "range [" + std::to_string(prim.begin) + "," +
                                  std::to_string(prim.end) + ") on last axis");
      }
      const Index width = prim.end - prim.begin;
      if (sa.size() == 1) {
        Eigen::VectorXd out = va.segment(prim.begin, width);
        return record(prim, std::move(ids), {width}, std::move(out));
      }
      Eigen::VectorXd out(sa[0] * width);
      view(out, sa[0], width) = view(va, sa[0], last).middleCols(prim.begin, width);
      return record(prim, std::move(ids), {sa[0], width}, std::move(out));
    }
    case PrimitiveKind::kRelu: {
      Eigen::VectorXd out = va.cwiseMax(0.0);
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kSigmoid: {
      Eigen::VectorXd out = va.unaryExpr(&sigmoid_scalar);
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kTanh: {
      Eigen::VectorXd out = va.array().tanh().matrix();
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kElu: {
      Eigen::VectorXd out = va.unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kSoftmax:
    case PrimitiveKind::kLogSoftmax: {
      if (sa.size() > 2) shape_error(kind, sa, "expected rank 1 or 2");
      const auto [rows, cols] = rows_cols(sa);
      Eigen::VectorXd out(va.size());
      auto in = view(va, rows, cols);
      auto o = view(out, rows, cols);
      for (Index r = 0; r < rows; ++r) {
        const double mx = in.row(r).maxCoeff();
        const double lse = mx + std::log((in.row(r).array() - mx).exp().sum());
        if (kind == PrimitiveKind::kLogSoftmax) {
          o.row(r) = in.row(r).array() - lse;
        } else {
          o.row(r) = (in.row(r).array() - lse).exp();
        }
      }
      return record(prim, std::move(ids), sa, std::move(out));
    }
    case PrimitiveKind::kMean: {
      if (a.size() == 0) shape_error(kind, sa, "empty tensor");
      return record(prim, std::move(ids), {1}, Eigen::VectorXd::Constant(1, va.mean()));
    }
    case PrimitiveKind::kSumOfSquares: {
      return record(prim, std::move(ids), {1}, Eigen::VectorXd::Constant(1, va.squaredNorm()));
    }
  }
  throw std::logic_error("unhandled primitive");
}

void Graph::propagate(const Node& node, const Eigen::VectorXd& grad,
                      std::vector<Eigen::VectorXd>& acc, std::vector<char>& has) {
  auto accumulate = [&](std::size_t id, Eigen::VectorXd contribution) {
    if (!nodes_[id].requires_grad) return;
    if (has[id]) {
      acc[id] += contribution;
    } else {
      acc[id] = std::move(contribution);
      has[id] = 1;
    }
  };
  auto wants = [&](std::size_t k) { return nodes_[node.inputs[k]].requires_grad; };

  const Node& in0 = nodes_[node.inputs[0]];
  const Shape& sa = in0.value.shape();
  const Eigen::VectorXd& va = in0.value.values();
  const Eigen::VectorXd& out = node.value.values();

  switch (node.prim.kind) {
    case PrimitiveKind::kMatmul: {
      const Node& in1 = nodes_[node.inputs[1]];
      const Index m = sa[0], n = sa[1];
      const Index p = in1.value.rank() == 2 ? in1.value.dim(1) : 1;
      auto g = view(grad, m, p);
      if (wants(0)) {
        Eigen::VectorXd da(m * n);
        view(da, m, n).noalias() = g * view(in1.value.values(), n, p).transpose();
        accumulate(node.inputs[0], std::move(da));
      }
      if (wants(1)) {
        Eigen::VectorXd db(n * p);
        view(db, n, p).noalias() = view(va, m, n).transpose() * g;
        accumulate(node.inputs[1], std::move(db));
      }
      break;
    }
    case PrimitiveKind::kTranspose: {
      Eigen::VectorXd da(va.size());
      view(da, sa[0], sa[1]) = view(grad, sa[1], sa[0]).transpose();
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kBatchedMatvec: {
      const Node& in1 = nodes_[node.inputs[1]];
      const Eigen::VectorXd& vb = in1.value.values();
      const Index batch = sa[0], o = sa[1], in = sa[2];
      if (wants(0)) {
        Eigen::VectorXd da(va.size());
        for (Index s = 0; s < batch; ++s) {
          MutMap(da.data() + s * o * in, o, in).noalias() =
              grad.segment(s * o, o) * vb.segment(s * in, in).transpose();
        }
        accumulate(node.inputs[0], std::move(da));
      }
      if (wants(1)) {
        Eigen::VectorXd db(vb.size());
        for (Index s = 0; s < batch; ++s) {
          db.segment(s * in, in).noalias() =
              ConstMap(va.data() + s * o * in, o, in).transpose() * grad.segment(s * o, o);
        }
        accumulate(node.inputs[1], std::move(db));
      }
      break;
    }
    case PrimitiveKind::kAdd:
    case PrimitiveKind::kSub: {
      const double sign = node.prim.kind == PrimitiveKind::kAdd ? 1.0 : -1.0;
      const Shape& sb = nodes_[node.inputs[1]].value.shape();
      if (wants(0)) accumulate(node.inputs[0], grad);
      if (wants(1)) {
        if (sb == sa) {
          accumulate(node.inputs[1], sign * grad);
        } else {
          Eigen::VectorXd db = sign * view(grad, sa[0], sa[1]).colwise().sum().transpose();
          accumulate(node.inputs[1], std::move(db));
        }
      }
      break;
    }
    case PrimitiveKind::kMul: {
      const Eigen::VectorXd& vb = nodes_[node.inputs[1]].value.values();
      if (wants(0)) accumulate(node.inputs[0], grad.cwiseProduct(vb));
      if (wants(1)) accumulate(node.inputs[1], grad.cwiseProduct(va));
      break;
    }
    case PrimitiveKind::kScale:
      accumulate(node.inputs[0], node.prim.factor * grad);
      break;
    case PrimitiveKind::kConcat: {
      const Shape& sb = nodes_[node.inputs[1]].value.shape();
      if (node.prim.axis == 0) {
        if (wants(0)) accumulate(node.inputs[0], grad.head(sa[0]));
        if (wants(1)) accumulate(node.inputs[1], grad.tail(sb[0]));
      } else {
        const Index rows = sa[0], ca = sa[1], cb = sb[1];
        auto g = view(grad, rows, ca + cb);
        if (wants(0)) {
          Eigen::VectorXd da(rows * ca);
          view(da, rows, ca) = g.leftCols(ca);
          accumulate(node.inputs[0], std::move(da));
        }
        if (wants(1)) {
          Eigen::VectorXd db(rows * cb);
          view(db, rows, cb) = g.rightCols(cb);
          accumulate(node.inputs[1], std::move(db));
        }
      }
      break;
    }
    case PrimitiveKind::kReshape:
      accumulate(node.inputs[0], grad);
      break;
    case PrimitiveKind::kSlice: {
      const Index width = node.prim.end - node.prim.begin;
      Eigen::VectorXd da = Eigen::VectorXd::Zero(va.size());
      if (sa.size() == 1) {
        da.segment(node.prim.begin, width) = grad;
      } else {
        view(da, sa[0], sa[1]).middleCols(node.prim.begin, width) = view(grad, sa[0], width);
      }
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kRelu: {
      Eigen::VectorXd da = (va.array() > 0.0).select(grad, 0.0);
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kSigmoid: {
      Eigen::VectorXd da = grad.array() * out.array() * (1.0 - out.array());
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kTanh: {
      Eigen::VectorXd da = grad.array() * (1.0 - out.array().square());
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kElu: {
      Eigen::VectorXd da = (va.array() > 0.0).select(grad, grad.array() * (out.array() + 1.0));
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kSoftmax:
    case PrimitiveKind::kLogSoftmax: {
      const auto [rows, cols] = rows_cols(sa);
      Eigen::VectorXd da(va.size());
      auto g = view(grad, rows, cols);
      auto y = view(out, rows, cols);
      auto d = view(da, rows, cols);
      for (Index r = 0; r < rows; ++r) {
        if (node.prim.kind == PrimitiveKind::kSoftmax) {
          const double dot = g.row(r).dot(y.row(r));
          d.row(r) = y.row(r).array() * (g.row(r).array() - dot);
        } else {
          const double total = g.row(r).sum();
          d.row(r) = g.row(r).array() - y.row(r).array().exp() * total;
        }
      }
      accumulate(node.inputs[0], std::move(da));
      break;
    }
    case PrimitiveKind::kMean:
      accumulate(node.inputs[0],
                 Eigen::VectorXd::Constant(va.size(), grad[0] / static_cast<double>(va.size())));
      break;
    case PrimitiveKind::kSumOfSquares:
      accumulate(node.inputs[0], 2.0 * grad[0] * va);
      break;
  }
}

Gradients Graph::backward(const Tensor& loss) {
  if (!loss.is_scalar()) {
    throw ShapeError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.node()) throw std::logic_error("backward: loss is not part of a graph");
  const std::size_t root = resolve(loss);

  std::vector<Eigen::VectorXd> acc(nodes_.size());
  std::vector<char> has(nodes_.size(), 0);
  Gradients result;
  result.graph_ = id_;
  result.generation_ = generation_;

  if (nodes_[root].requires_grad) {
    acc[root] = Eigen::VectorXd::Ones(1);
    has[root] = 1;
  }
  for (std::size_t i = root + 1; i-- > 0;) {
    if (!has[i]) continue;
    const Node& node = nodes_[i];
    if (!node.inputs.empty()) propagate(node, acc[i], acc, has);
    result.grads_.emplace(i, Tensor(node.value.shape(), std::move(acc[i])));
  }
  clear();
  return result;
}

// ---------------------------------------------------------------------------
// Shorthands

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  return g.apply(Primitive::of(PrimitiveKind::kMatmul), {a, b});
}
Tensor transpose(Graph& g, const Tensor& a) {
  return g.apply(Primitive::of(PrimitiveKind::kTranspose), {a});
}
Tensor batched_matvec(Graph& g, const Tensor& mats, const Tensor& vecs) {
  return g.apply(Primitive::of(PrimitiveKind::kBatchedMatvec), {mats, vecs});
}
Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  return g.apply(Primitive::of(PrimitiveKind::kAdd), {a, b});
}
Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  return g.apply(Primitive::of(PrimitiveKind::kSub), {a, b});
}
Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  return g.apply(Primitive::of(PrimitiveKind::kMul), {a, b});
}
Tensor scale(Graph& g, const Tensor& a, double factor) {
  return g.apply(Primitive::scale(factor), {a});
}
Tensor concat(Graph& g, const Tensor& a, const Tensor& b, Index axis) {
  return g.apply(Primitive::concat(axis), {a, b});
}
Tensor reshape(Graph& g, const Tensor& a, Shape shape) {
  return g.apply(Primitive::reshape(std::move(shape)), {a});
}
Tensor slice(Graph& g, const Tensor& a, Index begin, Index end) {
  return g.apply(Primitive::slice(begin, end), {a});
}
Tensor relu(Graph& g, const Tensor& a) { return g.apply(Primitive::of(PrimitiveKind::kRelu), {a}); }
Tensor sigmoid(Graph& g, const Tensor& a) {
  return g.apply(Primitive::of(PrimitiveKind::kSigmoid), {a});
}
Tensor tanh(Graph& g, const Tensor& a) { return g.apply(Primitive::of(PrimitiveKind::kTanh), {a}); }
Tensor elu(Graph& g, const Tensor& a) { return g.apply(Primitive::of(PrimitiveKind::kElu), {a}); }
Tensor softmax(Graph& g, const Tensor& a) {
  return g.apply(Primitive::of(PrimitiveKind::kSoftmax), {a});
}
Tensor log_softmax(Graph& g, const Tensor& a) {
  return g.apply(Primitive::of(PrimitiveKind::kLogSoftmax), {a});
}
Tensor mean(Graph& g, const Tensor& a) { return g.apply(Primitive::of(PrimitiveKind::kMean), {a}); }
Tensor sum_of_squares(Graph& g, const Tensor& a) {
  return g.apply(Primitive::of(PrimitiveKind::kSumOfSquares), {a});
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& fn, const Tensor& params,
                        double h) {
  if (!(h > 0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Eigen::VectorXd base = params.values();
  Eigen::VectorXd grad(base.size());
  for (Index i = 0; i < base.size(); ++i) {
    const double orig = base[i];
    base[i] = orig + h;
    const double fp = fn(Tensor(params.shape(), base));
    base[i] = orig - h;
    const double fm = fn(Tensor(params.shape(), base));
    base[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::domain_error("finite_diff_grad: non-finite function value at coordinate " +
                              std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return Tensor(params.shape(), std::move(grad));
}

}  // namespace hypernet
