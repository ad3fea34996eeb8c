#pragma once

// Frozen random teacher functions y(x, I) used as ground truth.

#include "hypernet/nets.hpp"

#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace hypernet {

enum class TargetKind { kType1, kType2, kType3, kConvTeacher };

std::string_view to_string(TargetKind k);
TargetKind parse_target_kind(std::string_view name);

/// fc . ReLU . conv2 . ReLU . conv1 with 10x10 kernels at stride 2.
struct ConvTeacher {
  Index channels = 1;
  Index height = 28;  // square inputs
  Tensor kernels1;    // [20, C, 10, 10]
  Eigen::VectorXd bias1;
  Tensor kernels2;    // [50, 20, 10, 10]
  Eigen::VectorXd bias2;
  MlpSpec fc;         // [50 s s -> 10]
  ParamVector fc_params;

  Index conv1_size() const;
  Index conv2_size() const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& image) const;
};

class TargetFn {
 public:
  /// Types I-III: `net` is h for Type I and the scalar network otherwise.
  TargetFn(TargetKind kind, Index x_dim, Index cond_dim, MlpSpec net, ParamVector params);
  explicit TargetFn(ConvTeacher teacher);

  TargetKind kind() const { return kind_; }
  Index x_dim() const { return x_dim_; }
  Index cond_dim() const { return cond_dim_; }
  Index output_dim() const;

  const MlpSpec& net() const { return net_; }
  const ParamVector& params() const { return params_; }
  const std::optional<ConvTeacher>& conv() const { return conv_; }

  /// y(x_r, I_r) for every row of a batch (Types I-III).
  Eigen::VectorXd operator()(const RowMatrix& x, const RowMatrix& cond) const;
  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& cond) const;

  /// Conv teacher outputs for flattened C x H x W images, one per row.
  RowMatrix teacher(const RowMatrix& images) const;

 private:
  TargetKind kind_;
  Index x_dim_ = 0;
  Index cond_dim_ = 0;
  MlpSpec net_;
  ParamVector params_;
  std::optional<ConvTeacher> conv_;
};

/// y(x, I) = <x, h(I)> with h = d_I -> hidden -> hidden -> d_x, sigmoid, softmax on top.
TargetFn make_type1(Index x_dim, Index cond_dim, std::mt19937_64& rng, Index hidden = 300);

/// y(x, I) = MLP(x || I), (d_x + d_I) -> 100 -> 50 -> 50 -> 1, ELU.
TargetFn make_type2(Index x_dim, Index cond_dim, std::mt19937_64& rng,
                    std::vector<Index> hidden = {100, 50, 50});

/// y(x, I) = MLP(x * I) elementwise, d_I -> 100 -> 100 -> 50 -> 1, ELU. Requires d_x == d_I.
TargetFn make_type3(Index x_dim, Index cond_dim, std::mt19937_64& rng,
                    std::vector<Index> hidden = {100, 100, 50});

TargetFn make_target(TargetKind kind, Index x_dim, Index cond_dim, std::mt19937_64& rng);

/// Teacher for channels x height x height inputs (1x28x28 MNIST, 3x32x32 CIFAR-10).
TargetFn make_conv_teacher(Index channels, std::mt19937_64& rng, Index height = 28);

/// Standard normal matrix, the sampling law for synthetic x and I.
RowMatrix standard_normal(Index rows, Index cols, std::mt19937_64& rng);

}  // namespace hypernet
