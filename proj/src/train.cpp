#include "hypernet/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace hypernet {

std::string_view to_string(LossKind k) { return k == LossKind::kMse ? "mse" : "nll"; }
std::string_view to_string(Metric m) { return m == Metric::kMse ? "mse" : "classification_error"; }

void sgd_momentum_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, Eigen::VectorXd& velocity,
                       double lr, double momentum) {
  if (grads.size() != params.size() || velocity.size() != params.size()) {
    throw ShapeError("sgd_momentum_step: params " + std::to_string(params.size()) + ", grads " +
                     std::to_string(grads.size()) + ", velocity " + std::to_string(velocity.size()));
  }
  velocity = momentum * velocity + grads;
  params -= lr * velocity;
}

void adadelta_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, Eigen::VectorXd& sq_grad,
                   Eigen::VectorXd& sq_update, double rho, double eps, double lr) {
  if (!(rho > 0.0 && rho < 1.0) || !(eps > 0.0)) {
    throw std::invalid_argument("adadelta_step: need 0 < rho < 1 and eps > 0");
  }
  if (grads.size() != params.size() || sq_grad.size() != params.size() || sq_update.size() != params.size()) {
    throw ShapeError("adadelta_step: state sizes do not match " + std::to_string(params.size()) + " parameters");
  }
  sq_grad = rho * sq_grad.array() + (1.0 - rho) * grads.array().square();
  const Eigen::ArrayXd delta =
      -((sq_update.array() + eps).sqrt() / (sq_grad.array() + eps).sqrt()) * grads.array();
  sq_update = rho * sq_update.array() + (1.0 - rho) * delta.square();
  params += lr * delta.matrix();
}

Optimizer::Optimizer(const OptimizerSpec& spec, const std::vector<ParamVector>& params) : spec_(spec) {
  for (const ParamVector& p : params) {
    first_.push_back(Eigen::VectorXd::Zero(p.size()));
    if (spec.kind == OptimizerKind::kAdadelta) second_.push_back(Eigen::VectorXd::Zero(p.size()));
  }
}

void Optimizer::step(std::vector<ParamVector>& params, std::span<const Eigen::VectorXd> grads) {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw std::invalid_argument("Optimizer::step: expected " + std::to_string(first_.size()) +
                                " parameter vectors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (spec_.kind == OptimizerKind::kSgdMomentum) {
      sgd_momentum_step(params[i].values, grads[i], first_[i], spec_.lr, spec_.momentum);
    } else {
      adadelta_step(params[i].values, grads[i], first_[i], second_[i], spec_.rho, spec_.eps, spec_.lr);
    }
  }
}

Tensor mse_loss(Graph& graph, const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse_loss: prediction " + to_string(prediction.shape()) + " vs target " +
                     to_string(target.shape()));
  }
  const Tensor diff = sub(graph, prediction, target);
  return mean(graph, mul(graph, diff, diff));
}

Tensor nll_loss(Graph& graph, const Tensor& logprobs, std::span<const int> labels) {
  const Tensor lp = logprobs.rank() == 1 ? reshape(graph, logprobs, {1, logprobs.dim(0)}) : logprobs;
  if (lp.rank() != 2 || lp.dim(0) != static_cast<Index>(labels.size())) {
    throw ShapeError("nll_loss: log-probabilities " + to_string(logprobs.shape()) + " for " +
                     std::to_string(labels.size()) + " labels");
  }
  const Index b = lp.dim(0), c = lp.dim(1);
  RowMatrix onehot = RowMatrix::Zero(b, c);
  for (Index i = 0; i < b; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= c) {
      throw std::out_of_range("nll_loss: label " + std::to_string(l) + " outside [0," + std::to_string(c) + ")");
    }
    onehot(i, l) = 1.0;
  }
  // mean over B*C entries of onehot*logp, rescaled to a per-sample mean.
  return scale(graph, mean(graph, mul(graph, lp, Tensor::matrix(onehot))), -static_cast<double>(c));
}

Dataset Dataset::rows(std::span<const Index> idx) const {
  Dataset out;
  const std::vector<Index> v(idx.begin(), idx.end());
  out.x = x(v, Eigen::all);
  if (cond.rows() > 0) out.cond = cond(v, Eigen::all);
  if (targets.rows() > 0) out.targets = targets(v, Eigen::all);
  if (!labels.empty()) {
    out.labels.reserve(v.size());
    for (Index i : v) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

Tensor loss_eval(Graph& graph, LossKind kind, const Tensor& prediction, const Dataset& batch) {
  if (kind == LossKind::kMse) return mse_loss(graph, prediction, Tensor::matrix(batch.targets));
  return nll_loss(graph, prediction, batch.labels);
}

void History::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,eval_metric\n";
  const auto old = out.precision(17);
  for (const EpochRecord& r : epochs) out << r.epoch << ',' << r.train_loss << ',' << r.eval_metric << '\n';
  out.precision(old);
}

History train_loop(Model& model, const Dataset& train, const Dataset* eval, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  if (train.size() == 0) throw std::invalid_argument("train_loop: no training data");
  if (config.batch_size < 1 || config.epochs < 1) {
    throw std::invalid_argument("train_loop: batch_size and epochs must be >= 1");
  }
  std::mt19937_64 rng(config.seed);
  Optimizer opt(config.optimizer, model.parameters());
  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});
  History history;
  std::vector<Eigen::VectorXd> grads(model.parameters().size());

  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    Index batch_no = 0;
    for (Index start = 0; start < train.size(); start += config.batch_size, ++batch_no) {
      const Index len = std::min(config.batch_size, train.size() - start);
      const Dataset batch = train.rows(std::span<const Index>(order).subspan(static_cast<std::size_t>(start),
                                                                            static_cast<std::size_t>(len)));
      Graph graph;
      std::vector<Tensor> vars;
      for (const ParamVector& p : model.parameters()) vars.push_back(graph.variable(p.tensor()));
      const Tensor cond = batch.cond.cols() > 0 ? Tensor::matrix(batch.cond) : Tensor();
      const Tensor out = model.forward(graph, vars, Tensor::matrix(batch.x), cond);
      const Tensor loss = loss_eval(graph, config.loss, out, batch);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw std::runtime_error("train_loop: non-finite loss " + std::to_string(value) + " at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(batch_no));
      }
      total += value * static_cast<double>(len);
      const Gradients g = graph.backward(loss);
      for (std::size_t i = 0; i < vars.size(); ++i) {
        const Tensor* gi = g.find(vars[i]);
        grads[i] = gi ? gi->values() : Eigen::VectorXd::Zero(vars[i].size());
      }
      opt.step(model.parameters(), grads);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.eval_metric = eval ? evaluate(model, *eval, config.metric) : std::numeric_limits<double>::quiet_NaN();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, model);
  }
  return history;
}

double metric_value(const RowMatrix& predictions, const Dataset& data, Metric metric) {
  if (predictions.rows() != data.size()) {
    throw ShapeError("metric: " + std::to_string(predictions.rows()) + " predictions for " +
                     std::to_string(data.size()) + " samples");
  }
  if (data.size() == 0) return 0.0;
  if (metric == Metric::kMse) {
    if (predictions.cols() != data.targets.cols()) throw ShapeError("metric: target width mismatch");
    return (predictions - data.targets).array().square().mean();
  }
  Index wrong = 0;
  for (Index r = 0; r < predictions.rows(); ++r) {
    Index arg = 0;
    predictions.row(r).maxCoeff(&arg);
    if (arg != data.labels[static_cast<std::size_t>(r)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

double evaluate(const Model& model, const Dataset& data, Metric metric) {
  return metric_value(model.predict(data.x, data.cond), data, metric);
}

GradCheckReport check_model_gradients(const Model& model, const Dataset& batch, LossKind kind, double h) {
  std::vector<Tensor> params;
  for (const ParamVector& p : model.parameters()) params.push_back(p.tensor());
  const Tensor x = Tensor::matrix(batch.x);
  const Tensor cond = batch.cond.cols() > 0 ? Tensor::matrix(batch.cond) : Tensor();

  Graph graph;
  std::vector<Tensor> vars;
  for (const Tensor& p : params) vars.push_back(graph.variable(p));
  const Tensor loss = loss_eval(graph, kind, model.forward(graph, vars, x, cond), batch);
  const Gradients grads = graph.backward(loss);

  GradCheckReport report;
  for (std::size_t which = 0; which < params.size(); ++which) {
    auto fn = [&](const Tensor& theta) {
      Graph g;
      std::vector<Tensor> ps;
      for (std::size_t i = 0; i < params.size(); ++i) ps.push_back(g.constant(i == which ? theta : params[i]));
      return loss_eval(g, kind, model.forward(g, ps, x, cond), batch).item();
    };
    const Tensor numeric = finite_diff_grad(fn, params[which], h);
    const Tensor* analytic = grads.find(vars[which]);
    for (Index i = 0; i < numeric.size(); ++i) {
      const double a = analytic ? (*analytic)[i] : 0.0;
      report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric[i]) / std::max(1.0, std::abs(a)));
    }
    report.coordinates += numeric.size();
  }
  return report;
}

}  // namespace hypernet
