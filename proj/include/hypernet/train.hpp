#pragma once

// Optimizers, losses and the minibatch training loop shared by every experiment.

#include "hypernet/composition.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace hypernet {

enum class LossKind { kMse, kNll };
enum class Metric { kMse, kClassificationError };
enum class OptimizerKind { kSgdMomentum, kAdadelta };

std::string_view to_string(LossKind k);
std::string_view to_string(Metric m);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  double lr = 0.01;
  double momentum = 0.0;  // SGD
  double rho = 0.9;       // Adadelta
  double eps = 1e-6;      // Adadelta

  static OptimizerSpec sgd(double lr, double momentum = 0.0) {
    return {OptimizerKind::kSgdMomentum, lr, momentum};
  }
  static OptimizerSpec adadelta(double lr = 1.0, double rho = 0.9, double eps = 1e-6) {
    return {OptimizerKind::kAdadelta, lr, 0.0, rho, eps};
  }
};

/// v <- momentum v + g; theta <- theta - lr v.
void sgd_momentum_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, Eigen::VectorXd& velocity,
                       double lr, double momentum);

/// E[g^2] <- rho E[g^2] + (1-rho) g^2; d = -sqrt(E[d^2]+eps)/sqrt(E[g^2]+eps) g;
/// E[d^2] <- rho E[d^2] + (1-rho) d^2; theta <- theta + lr d.
void adadelta_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, Eigen::VectorXd& sq_grad,
                   Eigen::VectorXd& sq_update, double rho, double eps, double lr);

/// Per-parameter-vector optimizer state.
class Optimizer {
 public:
  Optimizer(const OptimizerSpec& spec, const std::vector<ParamVector>& params);

  void step(std::vector<ParamVector>& params, std::span<const Eigen::VectorXd> grads);

  const OptimizerSpec& spec() const { return spec_; }
  const std::vector<Eigen::VectorXd>& first_moment() const { return first_; }
  const std::vector<Eigen::VectorXd>& second_moment() const { return second_; }

 private:
  OptimizerSpec spec_;
  std::vector<Eigen::VectorXd> first_;   // velocity, or E[g^2]
  std::vector<Eigen::VectorXd> second_;  // E[d^2] (Adadelta only)
};

/// Mean of squared differences over every entry.
Tensor mse_loss(Graph& graph, const Tensor& prediction, const Tensor& target);

/// -mean_b logprobs[b, labels[b]]. A rank-1 prediction is a batch of one.
Tensor nll_loss(Graph& graph, const Tensor& logprobs, std::span<const int> labels);

/// Supervised samples. `targets` is used by MSE, `labels` by NLL and classification error.
struct Dataset {
  RowMatrix x;
  RowMatrix cond;     // empty columns when the model ignores it
  RowMatrix targets;  // [N, out] for regression
  std::vector<int> labels;

  Index size() const { return x.rows(); }
  Dataset rows(std::span<const Index> idx) const;
};

Tensor loss_eval(Graph& graph, LossKind kind, const Tensor& prediction, const Dataset& batch);

struct TrainConfig {
  Index batch_size = 200;
  Index epochs = 10;
  LossKind loss = LossKind::kMse;
  Metric metric = Metric::kMse;
  OptimizerSpec optimizer = OptimizerSpec::sgd(0.01);
  std::uint64_t seed = 0;
};

struct EpochRecord {
  Index epoch = 0;
  double train_loss = 0.0;
  double eval_metric = 0.0;  // NaN without an evaluation set

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct History {
  std::vector<EpochRecord> epochs;

  /// epoch,train_loss,eval_metric
  void write_csv(std::ostream& out) const;
};

using EpochCallback = std::function<void(Index epoch, const Model& model)>;

/// Minibatch training with a fresh shuffle per epoch drawn from config.seed.
/// Throws std::runtime_error naming the epoch and batch if the loss is not finite.
History train_loop(Model& model, const Dataset& train, const Dataset* eval, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// MSE over all outputs, or the fraction of rows whose argmax differs from the label.
double evaluate(const Model& model, const Dataset& data, Metric metric);
double metric_value(const RowMatrix& predictions, const Dataset& data, Metric metric);

struct GradCheckReport {
  double max_rel_error = 0.0;  // max |analytic - numeric| / max(1, |analytic|)
  Index coordinates = 0;
};

/// Backward-pass gradients of the batch loss against central differences with step h,
/// over every parameter vector of the model.
GradCheckReport check_model_gradients(const Model& model, const Dataset& batch, LossKind loss, double h = 1e-5);

}  // namespace hypernet
