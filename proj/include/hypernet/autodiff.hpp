#pragma once

// Reverse-mode differentiation over dense f64 tensors.
//
// A Graph records every primitive applied to tensors that belong to it and
// replays the records backwards to produce gradients. Tensors are immutable
// values sharing their storage, so handing them around is cheap; a tensor
// created through a graph carries a handle to its node.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hypernet {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string to_string(const Shape& shape);
Index shape_size(const Shape& shape);

/// Raised when operand shapes do not satisfy a primitive's shape rule.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Identifies a node inside one generation of one Graph.
struct NodeId {
  std::uint64_t graph = 0;
  std::uint64_t generation = 0;
  std::size_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, Eigen::VectorXd values);

  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor from_vector(const Eigen::VectorXd& values);
  /// Rank-2 tensor with the matrix's rows as the leading axis.
  template <typename Derived>
  static Tensor matrix(const Eigen::MatrixBase<Derived>& m);

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return values_->size(); }
  bool is_scalar() const { return size() == 1; }

  const Eigen::VectorXd& values() const { return *values_; }
  double operator[](Index i) const { return (*values_)[i]; }
  double item() const;

  /// Row-major view; rank-1 tensors are viewed as a single column.
  Eigen::Map<const RowMatrix> as_matrix() const;

  const std::optional<NodeId>& node() const { return node_; }
  /// Same values, no graph attachment.
  Tensor detached() const;

 private:
  friend class Graph;
  Tensor(Shape shape, std::shared_ptr<const Eigen::VectorXd> values, std::optional<NodeId> node);

  Shape shape_;
  std::shared_ptr<const Eigen::VectorXd> values_;
  std::optional<NodeId> node_;
};

template <typename Derived>
Tensor Tensor::matrix(const Eigen::MatrixBase<Derived>& m) {
  RowMatrix rm = m;
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
  return Tensor({rm.rows(), rm.cols()}, std::move(flat));
}

enum class PrimitiveKind {
  kMatmul,
  kTranspose,
  kBatchedMatvec,
  kAdd,
  kSub,
  kMul,
  kScale,
  kConcat,
  kReshape,
  kSlice,
  kRelu,
  kSigmoid,
  kTanh,
  kElu,
  kSoftmax,
  kLogSoftmax,
  kMean,
  kSumOfSquares,
};

std::string_view primitive_name(PrimitiveKind kind);

/// A primitive together with its static arguments.
struct Primitive {
  PrimitiveKind kind;
  Shape shape{};          // reshape target
  Index begin = 0;        // slice range on the last axis
  Index end = 0;
  double factor = 1.0;    // scale
  Index axis = 0;         // concat axis

  static Primitive of(PrimitiveKind k) { return Primitive{k}; }
  static Primitive reshape(Shape s) { return Primitive{PrimitiveKind::kReshape, std::move(s)}; }
  static Primitive slice(Index b, Index e) { return Primitive{PrimitiveKind::kSlice, {}, b, e}; }
  static Primitive scale(double f) { return Primitive{PrimitiveKind::kScale, {}, 0, 0, f}; }
  static Primitive concat(Index ax) { return Primitive{PrimitiveKind::kConcat, {}, 0, 0, 1.0, ax}; }
};

/// Gradients produced by Graph::backward, keyed by node.
class Gradients {
 public:
  bool contains(const Tensor& t) const { return find(t) != nullptr; }
  const Tensor* find(const Tensor& t) const;
  const Tensor& at(const Tensor& t) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Graph;
  struct Hash {
    std::size_t operator()(std::size_t i) const noexcept { return i; }
  };
  std::uint64_t graph_ = 0;
  std::uint64_t generation_ = 0;
  std::unordered_map<std::size_t, Tensor, Hash> grads_;
};

class Graph {
 public:
  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  /// Registers a differentiable leaf.
  Tensor variable(const Tensor& value);
  /// Registers a leaf that never receives a gradient.
  Tensor constant(const Tensor& value);

  Tensor apply(const Primitive& prim, std::span<const Tensor> inputs);
  Tensor apply(const Primitive& prim, std::initializer_list<Tensor> inputs) {
    return apply(prim, std::span<const Tensor>(inputs.begin(), inputs.size()));
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every differentiable
  /// ancestor. Clears the tape afterwards, invalidating this generation's tensors.
  Gradients backward(const Tensor& loss);

  /// Drops all recorded nodes.
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Primitive prim;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad = false;
  };

  std::size_t resolve(const Tensor& t);
  Tensor record(Primitive prim, std::vector<std::size_t> inputs, Shape shape,
                Eigen::VectorXd values);
  void propagate(const Node& node, const Eigen::VectorXd& grad,
                 std::vector<Eigen::VectorXd>& acc, std::vector<char>& has);

  std::uint64_t id_;
  std::uint64_t generation_ = 0;
  std::vector<Node> nodes_;
};

// Shorthands that record through Graph::apply.
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
Tensor transpose(Graph& g, const Tensor& a);
Tensor batched_matvec(Graph& g, const Tensor& mats, const Tensor& vecs);
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& a, double factor);
Tensor concat(Graph& g, const Tensor& a, const Tensor& b, Index axis);
Tensor reshape(Graph& g, const Tensor& a, Shape shape);
Tensor slice(Graph& g, const Tensor& a, Index begin, Index end);
Tensor relu(Graph& g, const Tensor& a);
Tensor sigmoid(Graph& g, const Tensor& a);
Tensor tanh(Graph& g, const Tensor& a);
Tensor elu(Graph& g, const Tensor& a);
Tensor softmax(Graph& g, const Tensor& a);
Tensor log_softmax(Graph& g, const Tensor& a);
Tensor mean(Graph& g, const Tensor& a);
Tensor sum_of_squares(Graph& g, const Tensor& a);

/// Central-difference gradient (f(p + h e_i) - f(p - h e_i)) / 2h per coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& fn, const Tensor& params,
                        double h = 1e-5);

}  // namespace hypernet
