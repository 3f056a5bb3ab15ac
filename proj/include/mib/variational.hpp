// Copyright 2026 The mibounds Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIB_VARIATIONAL_HPP
#define MIB_VARIATIONAL_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mib/model.hpp"
#include "mib/rng.hpp"
#include "mib/tape.hpp"

namespace mib {

// Base distribution q(z|x) used as proposal by every bound.  Implementations:
// the model prior (the "q = p(z)" special case of InfoNCE / MINE), an
// amortized diagonal Gaussian, and a conditional table for discrete models.
class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual std::string name() const = 0;
  virtual VectorXd sample(const VectorXd& x, RngStream& rng) const = 0;
  virtual double log_density(const VectorXd& x, const VectorXd& z) const = 0;
  // Gradient of log q(z|x) in z, for HMC over energy-tilted proposals.
  virtual void grad_log_density_z(const VectorXd& x, const VectorXd& z,
                                  VectorXd& grad) const = 0;
  // Diagonal-Gaussian parameters when the proposal is Gaussian (enables
  // perfect transitions on Gaussian bridges).
  virtual bool gaussian_params(const VectorXd& x, VectorXd& mean,
                               VectorXd& std) const {
    (void)x; (void)mean; (void)std;
    return false;
  }
};

// q(z|x) = p(z): the model prior, ignoring x.
class PriorProposal final : public Proposal {
 public:
  explicit PriorProposal(const JointModel& model) : model_(&model) {}
  std::string name() const override { return "prior"; }
  VectorXd sample(const VectorXd&, RngStream& rng) const override {
    return model_->sample_prior(rng);
  }
  double log_density(const VectorXd&, const VectorXd& z) const override {
    return model_->log_prior(z);
  }
  void grad_log_density_z(const VectorXd&, const VectorXd& z,
                          VectorXd& grad) const override {
    model_->grad_log_prior(z, grad);
  }
  bool gaussian_params(const VectorXd& x, VectorXd& mean, VectorXd& std) const override;

 private:
  const JointModel* model_;
};

// Conditional table q(z = j | x = i) for discrete models; rows sum to 1.
class TableProposal final : public Proposal {
 public:
  explicit TableProposal(MatrixXd table);
  std::string name() const override { return "table"; }
  VectorXd sample(const VectorXd& x, RngStream& rng) const override;
  double log_density(const VectorXd& x, const VectorXd& z) const override;
  void grad_log_density_z(const VectorXd&, const VectorXd&, VectorXd&) const override {
    throw UnsupportedCapabilityError("table proposal has no z-gradient");
  }
  const MatrixXd& table() const { return table_; }

 private:
  MatrixXd table_;
};

// ---------------------------------------------------------------------------
// Flat-parameter MLP with ReLU hidden layers and linear output.
struct MlpShape {
  int in = 0;
  std::vector<int> hidden;
  int out = 0;

  int param_count() const;
};

// Parameter layout: [W1 (in x h1) col-major, b1, W2, b2, ..., Wout, bout].
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpShape shape, std::uint64_t init_seed);

  const MlpShape& shape() const { return shape_; }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  // Y = mlp(X), X is n x in.
  MatrixXd forward(const MatrixXd& X) const;

  // Graph construction on a tape; returns the output node.  Fresh parameter
  // leaves are created and reported through param_nodes for gradient readout.
  Tape::Var build(Tape& tape, Tape::Var X, std::vector<Tape::Var>& param_nodes) const;

  // Scatter per-layer gradient nodes back into a flat vector.
  Eigen::VectorXd collect_grad(const Tape& tape,
                               const std::vector<Tape::Var>& param_nodes) const;

  // Views of one layer's weight/bias inside a flat vector.
  Eigen::Map<const MatrixXd> weight(const Eigen::VectorXd& flat, int layer) const;
  Eigen::Map<const Eigen::RowVectorXd> bias(const Eigen::VectorXd& flat, int layer) const;
  Eigen::Map<MatrixXd> weight(Eigen::VectorXd& flat, int layer) const;
  Eigen::Map<Eigen::RowVectorXd> bias(Eigen::VectorXd& flat, int layer) const;
  int layers() const { return static_cast<int>(dims_.size()) - 1; }

 private:
  friend class MlpCritic;
  MlpShape shape_;
  std::vector<int> dims_;     // in, h1, ..., out
  std::vector<int> w_off_, b_off_;
  Eigen::VectorXd theta_;
};

// ---------------------------------------------------------------------------
// Amortized diagonal Gaussian q_theta(z|x).  The encoder maps x to
// (mean, log_std); either a single affine map or a 2-layer ReLU MLP.
class ConditionalGaussian final : public Proposal {
 public:
  enum class Encoder { kAffine, kMlp };

  ConditionalGaussian(int obs_dim, int latent_dim, Encoder enc,
                      std::uint64_t init_seed, int hidden_width = 64);

  // Zero-parameter affine encoder: q(z|x) = N(0, I), i.e. the standard-normal
  // prior special case.
  static ConditionalGaussian standard_normal(int obs_dim, int latent_dim);

  std::string name() const override {
    return encoder_ == Encoder::kAffine ? "cond_gaussian_affine" : "cond_gaussian_mlp";
  }

  int obs_dim() const { return obs_dim_; }
  int latent_dim() const { return latent_dim_; }
  Encoder encoder() const { return encoder_; }
  int hidden_width() const { return hidden_width_; }

  Eigen::VectorXd& params() { return net_.params(); }
  const Eigen::VectorXd& params() const { return net_.params(); }

  // Encoder outputs for a batch of x rows.
  void encode(const MatrixXd& X, MatrixXd& mean, MatrixXd& log_std) const;

  VectorXd sample(const VectorXd& x, RngStream& rng) const override;
  double log_density(const VectorXd& x, const VectorXd& z) const override;
  void grad_log_density_z(const VectorXd& x, const VectorXd& z,
                          VectorXd& grad) const override;
  bool gaussian_params(const VectorXd& x, VectorXd& mean, VectorXd& std) const override;

  // Reparameterized batch sample Z = mean + exp(log_std) .* eps; eps returned.
  MatrixXd sample_batch(const MatrixXd& X, RngStream& rng, MatrixXd* eps_out = nullptr) const;

  // log q(z|x) rows on a tape; param_nodes receive the encoder leaves.
  Tape::Var build_log_density(Tape& tape, const MatrixXd& X, const MatrixXd& Z,
                              std::vector<Tape::Var>& param_nodes) const;
  // Reparameterized sample node from fixed eps (pathwise gradients flow to
  // the encoder parameters).
  Tape::Var build_rsample(Tape& tape, const MatrixXd& X, const MatrixXd& eps,
                          std::vector<Tape::Var>& param_nodes) const;
  Eigen::VectorXd collect_grad(const Tape& tape,
                               const std::vector<Tape::Var>& param_nodes) const {
    return net_.collect_grad(tape, param_nodes);
  }

 private:
  // Heads (mean | log_std) on the encoder trunk output.
  Tape::Var build_heads(Tape& tape, const MatrixXd& X,
                        std::vector<Tape::Var>& param_nodes) const;

  int obs_dim_, latent_dim_, hidden_width_;
  Encoder encoder_;
  Mlp net_;  // output dim = 2 * latent_dim (mean, log_std)
};

// ---------------------------------------------------------------------------
// Scalar critic T_phi(x, z).
class Critic {
 public:
  virtual ~Critic() = default;
  virtual std::string name() const = 0;
  virtual double eval(const VectorXd& x, const VectorXd& z) const = 0;
  virtual VectorXd eval_batch(const MatrixXd& X, const MatrixXd& Z) const;
  virtual void grad_z(const VectorXd& x, const VectorXd& z, VectorXd& grad) const = 0;
};

// Critic fixed at the true log importance weights T*(x,z) = log p(x,z) - log q(z|x),
// the optimum shared by the contrastive and energy-based bounds.
class OptimalCritic final : public Critic {
 public:
  OptimalCritic(const JointModel& model, const Proposal& q)
      : model_(&model), q_(&q) {}
  std::string name() const override { return "optimal"; }
  double eval(const VectorXd& x, const VectorXd& z) const override {
    return model_->log_joint(x, z) - q_->log_density(x, z);
  }
  void grad_z(const VectorXd& x, const VectorXd& z, VectorXd& grad) const override {
    VectorXd gp, gl, gq;
    model_->grad_log_prior(z, gp);
    model_->grad_log_likelihood_z(x, z, gl);
    q_->grad_log_density_z(x, z, gq);
    grad = gp + gl - gq;
  }

 private:
  const JointModel* model_;
  const Proposal* q_;
};

// Table critic over discrete (x, z) pairs; parameters are the entries.
class TableCritic final : public Critic {
 public:
  explicit TableCritic(MatrixXd values) : values_(std::move(values)) {}
  std::string name() const override { return "table"; }
  double eval(const VectorXd& x, const VectorXd& z) const override;
  void grad_z(const VectorXd&, const VectorXd&, VectorXd&) const override {
    throw UnsupportedCapabilityError("table critic has no z-gradient");
  }
  MatrixXd& values() { return values_; }
  const MatrixXd& values() const { return values_; }

 private:
  MatrixXd values_;
};

// MLP critic on concat(x, z); default two hidden ReLU layers of width 256.
class MlpCritic final : public Critic {
 public:
  MlpCritic(int obs_dim, int latent_dim, std::uint64_t init_seed,
            std::vector<int> hidden = {256, 256});

  std::string name() const override { return constant_mode_ ? "mlp_const" : "mlp"; }
  int obs_dim() const { return obs_dim_; }
  int latent_dim() const { return latent_dim_; }
  const std::vector<int>& hidden() const { return net_.shape().hidden; }

  Eigen::VectorXd& params() { return net_.params(); }
  const Eigen::VectorXd& params() const { return net_.params(); }

  // Zeroes the output layer and pins its bias, making T(x,z) = c everywhere.
  void set_constant_mode(double c);
  bool constant_mode() const { return constant_mode_; }

  double eval(const VectorXd& x, const VectorXd& z) const override;
  VectorXd eval_batch(const MatrixXd& X, const MatrixXd& Z) const override;
  void grad_z(const VectorXd& x, const VectorXd& z, VectorXd& grad) const override;

  // Batched value + d/dz rows; the workhorse inside HMC on the energy
  // posterior.  The x-dependent part of the first layer can be cached across
  // leapfrog steps since x does not move.
  struct XCache {
    MatrixXd a1x;  // n x h1 = X * W1x + b1
  };
  XCache make_x_cache(const MatrixXd& X) const;
  void value_grad_z(const XCache& cache, const MatrixXd& Z, VectorXd& values,
                    MatrixXd& grad_z) const;
  VectorXd value(const XCache& cache, const MatrixXd& Z) const;

  // Flat-parameter gradient of sum_i w_i T(x_i, z_i).
  Eigen::VectorXd grad_params(const MatrixXd& X, const MatrixXd& Z,
                              const VectorXd& row_weights) const;

  // Tape graph for objectives that differentiate through the critic.
  Tape::Var build(Tape& tape, Tape::Var XZ, std::vector<Tape::Var>& param_nodes) const {
    return net_.build(tape, XZ, param_nodes);
  }
  Eigen::VectorXd collect_grad(const Tape& tape,
                               const std::vector<Tape::Var>& param_nodes) const {
    return net_.collect_grad(tape, param_nodes);
  }

 private:
  int obs_dim_, latent_dim_;
  bool constant_mode_ = false;
  Mlp net_;
};

// ---------------------------------------------------------------------------
// Adam with the usual bias correction.  A zero gradient leaves parameters
// unchanged.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(Eigen::Index dim, double lr = 1e-4, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::int64_t iterations() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

// ---------------------------------------------------------------------------
// Bit-exact checkpoints: architecture metadata plus parameters encoded as hex
// of the raw little-endian doubles.
std::string save_critic_checkpoint(const MlpCritic& critic);
MlpCritic load_critic_checkpoint(const std::string& text);
std::string save_cond_gaussian_checkpoint(const ConditionalGaussian& q);
ConditionalGaussian load_cond_gaussian_checkpoint(const std::string& text);

}  // namespace mib

#endif  // MIB_VARIATIONAL_HPP
