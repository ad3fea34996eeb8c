#pragma once

// Conditioning architectures. A hypernetwork computes g(x; f(I; theta_f)); an
// embedding method computes q(x || e(I; theta_e); theta_q).

#include "hypernet/nets.hpp"

#include <memory>
#include <random>
#include <span>
#include <vector>

namespace hypernet {

/// Anything trainable by the train module: a list of flat parameter vectors and a
/// graph forward over a batch of task inputs x [B,dx] and conditioning inputs I [B,dI].
class Model {
 public:
  virtual ~Model() = default;

  virtual Index x_dim() const = 0;
  virtual Index cond_dim() const = 0;  // 0 when I is ignored
  virtual Index output_dim() const = 0;

  std::vector<ParamVector>& parameters() { return params_; }
  const std::vector<ParamVector>& parameters() const { return params_; }

  virtual Tensor forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                         const Tensor& cond) const = 0;

  Index trainable_count() const;

  /// Forward with the current parameters held constant, in chunks of `chunk` rows.
  RowMatrix predict(const RowMatrix& x, const RowMatrix& cond, Index chunk = 500) const;

  virtual std::unique_ptr<Model> clone() const = 0;

 protected:
  std::vector<ParamVector> params_;
};

/// h(x, I) = g(x; f(I; theta_f)); g has no parameters of its own.
class HyperModel final : public Model {
 public:
  /// Throws std::invalid_argument unless f's output width equals g's layout size.
  HyperModel(MlpSpec f_spec, MlpSpec g_spec, ParamVector theta_f);
  static HyperModel init(MlpSpec f_spec, MlpSpec g_spec, const InitScheme& scheme, std::mt19937_64& rng);

  const MlpSpec& f_spec() const { return f_spec_; }
  const MlpSpec& g_spec() const { return g_spec_; }
  const ParamVector& theta_f() const { return params_[0]; }

  /// Divides the rows of f's output layer that produce g's layer j by sqrt(h_j), the fan-in
  /// of that layer. With a He-initialized f this gives generated weights roughly He variance
  /// for g instead of O(1) variance.
  void hyperfan_in_rescale();

  Index x_dim() const override { return g_spec_.input_dim(); }
  Index cond_dim() const override { return f_spec_.input_dim(); }
  Index output_dim() const override { return g_spec_.output_dim(); }

  Tensor forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                 const Tensor& cond) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<HyperModel>(*this); }

 private:
  MlpSpec f_spec_;
  MlpSpec g_spec_;
};

/// h(x, I) = q(x || e(I; theta_e); theta_q).
class EmbedModel final : public Model {
 public:
  /// Throws std::invalid_argument when e's output width k is 0 or q's input is not dx + k.
  EmbedModel(MlpSpec e_spec, MlpSpec q_spec, ParamVector theta_e, ParamVector theta_q);
  static EmbedModel init(MlpSpec e_spec, MlpSpec q_spec, const InitScheme& scheme, std::mt19937_64& rng);

  const MlpSpec& e_spec() const { return e_spec_; }
  const MlpSpec& q_spec() const { return q_spec_; }
  const ParamVector& theta_e() const { return params_[0]; }
  const ParamVector& theta_q() const { return params_[1]; }
  Index embed_dim() const { return e_spec_.output_dim(); }

  Index x_dim() const override { return q_spec_.input_dim() - embed_dim(); }
  Index cond_dim() const override { return e_spec_.input_dim(); }
  Index output_dim() const override { return q_spec_.output_dim(); }

  Tensor forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                 const Tensor& cond) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<EmbedModel>(*this); }

 private:
  MlpSpec e_spec_;
  MlpSpec q_spec_;
};

/// Plain network of x alone; the conditioning input is ignored.
class MlpModel final : public Model {
 public:
  MlpModel(MlpSpec spec, ParamVector theta);
  static MlpModel init(MlpSpec spec, const InitScheme& scheme, std::mt19937_64& rng);

  const MlpSpec& spec() const { return spec_; }

  Index x_dim() const override { return spec_.input_dim(); }
  Index cond_dim() const override { return 0; }
  Index output_dim() const override { return spec_.output_dim(); }

  Tensor forward(Graph& graph, std::span<const Tensor> params, const Tensor& x,
                 const Tensor& cond) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }

 private:
  MlpSpec spec_;
};

/// theta_I = f(I; theta_f), then g(x; theta_I). x and I are both single vectors or both batches.
Tensor hyper_forward(Graph& graph, const HyperModel& model, const Tensor& theta_f, const Tensor& x,
                     const Tensor& cond);
Tensor hyper_forward(Graph& graph, const HyperModel& model, const Tensor& x, const Tensor& cond);

Tensor embed_forward(Graph& graph, const EmbedModel& model, const Tensor& theta_e, const Tensor& theta_q,
                     const Tensor& x, const Tensor& cond);
Tensor embed_forward(Graph& graph, const EmbedModel& model, const Tensor& x, const Tensor& cond);

/// Mean of e(I_i) over a non-empty set of conditioning inputs.
Tensor cnp_embed(Graph& graph, const MlpSpec& e_spec, const Tensor& theta_e, std::span<const Tensor> set);

/// An embedding model rewritten as a hypernetwork that generates only the first-layer bias
/// of g = q with W^1 = [W^{1,1} | W^{1,2}]: the generated bias is W^{1,2} e(I) + b^1.
struct EmbedAsHypernet {
  MlpSpec e_spec;
  ParamVector theta_e;
  MlpSpec g_spec;             // q with input width dx; always carries biases
  ParamVector fixed;          // g parameters; the first bias segment is overwritten per I
  Eigen::MatrixXd w12;        // [h_2, k]
  Eigen::VectorXd b1;         // [h_2]
  Index bias_offset = 0;

  ParamVector generated_params(const Eigen::VectorXd& cond) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x, const Eigen::VectorXd& cond) const;
};

/// Throws std::invalid_argument unless q has at least one hidden layer.
EmbedAsHypernet embed_as_hypernet(const EmbedModel& model);

}  // namespace hypernet
