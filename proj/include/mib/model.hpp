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

#ifndef MIB_MODEL_HPP
#define MIB_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mib/error.hpp"
#include "mib/rng.hpp"

namespace mib {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Capability flags declared by a joint model.  Estimators check these before
// consuming the corresponding operation.
enum Cap : unsigned {
  kSampleJoint = 1u << 0,
  kLogpPrior = 1u << 1,
  kLogpLikelihood = 1u << 2,
  kExactPosteriorSample = 1u << 3,
  kAnalyticMI = 1u << 4,
  kEnumerable = 1u << 5,
};
using Caps = unsigned;

// A joint distribution over (x, z): p(z) prior, p(x|z) likelihood.
// Immutable after construction; all randomness comes from caller streams.
class JointModel {
 public:
  virtual ~JointModel() = default;

  virtual std::string name() const = 0;
  virtual int latent_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual Caps capabilities() const = 0;

  bool has(Cap c) const { return (capabilities() & c) != 0; }
  void require(Cap c, const char* op) const;

  // One pair (x, z) ~ p(x, z).
  virtual void sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const = 0;

  virtual VectorXd sample_prior(RngStream& rng) const = 0;
  virtual double log_prior(const VectorXd& z) const = 0;
  virtual double log_likelihood(const VectorXd& x, const VectorXd& z) const = 0;

  // Single code path for the joint density: prior + likelihood.
  double log_joint(const VectorXd& x, const VectorXd& z) const {
    return log_prior(z) + log_likelihood(x, z);
  }

  virtual VectorXd sample_posterior(const VectorXd& x, RngStream& rng) const;
  virtual double analytic_mi() const;

  // Gradients in z for HMC; continuous models only.
  virtual void grad_log_prior(const VectorXd& z, VectorXd& grad) const;
  virtual void grad_log_likelihood_z(const VectorXd& x, const VectorXd& z,
                                     VectorXd& grad) const;
  bool has_z_gradients() const { return z_gradients_; }

 protected:
  bool z_gradients_ = false;
};

// Batched convenience wrappers built on sample_joint.
struct JointBatch {
  MatrixXd x;  // n x obs_dim
  MatrixXd z;  // n x latent_dim
};
JointBatch sample_joint_batch(const JointModel& model, std::int64_t n,
                              RngStream rng);

// ---------------------------------------------------------------------------
// Linear Gaussian decoder: z ~ N(0, I), x = W z + b + obs_std * eps.
// Everything is closed form: posterior, evidence, and the mutual information
// (1/2) log det(I + W W^T / obs_std^2).
class LinearGaussianVae final : public JointModel {
 public:
  // W drawn entrywise from N(0, 1) with the given seed (recorded and surfaced
  // in run metadata, since the MI depends on the realized W).
  LinearGaussianVae(int latent_dim, int obs_dim, std::uint64_t weight_seed,
                    double obs_std = 1.0);
  // Explicit weights.
  LinearGaussianVae(MatrixXd W, VectorXd b, double obs_std = 1.0);

  std::string name() const override { return "linear_gaussian_vae"; }
  int latent_dim() const override { return static_cast<int>(W_.cols()); }
  int obs_dim() const override { return static_cast<int>(W_.rows()); }
  Caps capabilities() const override {
    return kSampleJoint | kLogpPrior | kLogpLikelihood |
           kExactPosteriorSample | kAnalyticMI;
  }

  void sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const override;
  VectorXd sample_prior(RngStream& rng) const override;
  double log_prior(const VectorXd& z) const override;
  double log_likelihood(const VectorXd& x, const VectorXd& z) const override;
  VectorXd sample_posterior(const VectorXd& x, RngStream& rng) const override;
  double analytic_mi() const override;

  void grad_log_prior(const VectorXd& z, VectorXd& grad) const override;
  void grad_log_likelihood_z(const VectorXd& x, const VectorXd& z,
                             VectorXd& grad) const override;

  // Exact log p(x) under the Gaussian marginal N(b, obs_std^2 I + W W^T).
  double log_evidence(const VectorXd& x) const;

  void posterior_moments(const VectorXd& x, VectorXd& mean, MatrixXd& cov) const;

  const MatrixXd& weights() const { return W_; }
  const VectorXd& bias() const { return b_; }
  double obs_std() const { return obs_std_; }
  std::uint64_t weight_seed() const { return weight_seed_; }

 private:
  void finish_setup();

  MatrixXd W_;
  VectorXd b_;
  double obs_std_ = 1.0;
  std::uint64_t weight_seed_ = 0;

  // Cached factorizations.
  MatrixXd post_prec_;                  // I + W^T W / s^2
  Eigen::LLT<MatrixXd> post_prec_llt_;  // for posterior solve/sampling
  Eigen::LLT<MatrixXd> marg_cov_llt_;   // obs-space marginal covariance
  double marg_logdet_ = 0.0;
  double mi_ = 0.0;
};

// ---------------------------------------------------------------------------
// Fully enumerable finite joint: table(ix, iz) >= 0 summing to 1.
// x and z are carried as 1-d vectors holding the (integral) index so the
// estimator code paths are shared with continuous models.
class DiscreteJoint final : public JointModel {
 public:
  explicit DiscreteJoint(MatrixXd table);

  // Deterministic pseudo-random instance with correlation control in [0, 1].
  static DiscreteJoint random(int nx, int nz, std::uint64_t seed,
                              double correlation = 0.5);

  std::string name() const override { return "discrete_joint"; }
  int latent_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  Caps capabilities() const override {
    return kSampleJoint | kLogpPrior | kLogpLikelihood |
           kExactPosteriorSample | kAnalyticMI | kEnumerable;
  }

  void sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const override;
  VectorXd sample_prior(RngStream& rng) const override;
  double log_prior(const VectorXd& z) const override;
  double log_likelihood(const VectorXd& x, const VectorXd& z) const override;
  VectorXd sample_posterior(const VectorXd& x, RngStream& rng) const override;
  double analytic_mi() const override;  // exact enumeration

  int nx() const { return static_cast<int>(table_.rows()); }
  int nz() const { return static_cast<int>(table_.cols()); }
  const MatrixXd& table() const { return table_; }
  const VectorXd& x_marginal() const { return px_; }
  const VectorXd& z_marginal() const { return pz_; }
  // p(z | x = ix) as a row.
  VectorXd posterior_row(int ix) const;

  static int index_of(const VectorXd& v);
  static VectorXd encode(int index);

 private:
  MatrixXd table_;  // nx x nz
  VectorXd px_, pz_;
};

// ---------------------------------------------------------------------------
// Mixture-of-Gaussians prior with Gaussian likelihood x | z ~ N(z, obs_std^2 I)
// in a 1- or 2-d latent.  The posterior is itself a mixture, so it is exactly
// sampleable while being multi-modal whenever component means differ; a
// diagonal-Gaussian q then has an irreducible BA gap.  MI is computed with
// Gauss-Hermite quadrature (the marginal p(x) is a closed-form mixture).
class GaussianMixturePosteriorModel final : public JointModel {
 public:
  GaussianMixturePosteriorModel(VectorXd weights, MatrixXd means,
                                MatrixXd stds, double obs_std);

  std::string name() const override { return "gaussian_mixture_posterior"; }
  int latent_dim() const override { return static_cast<int>(means_.cols()); }
  int obs_dim() const override { return static_cast<int>(means_.cols()); }
  Caps capabilities() const override {
    return kSampleJoint | kLogpPrior | kLogpLikelihood |
           kExactPosteriorSample | kAnalyticMI;
  }

  void sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const override;
  VectorXd sample_prior(RngStream& rng) const override;
  double log_prior(const VectorXd& z) const override;
  double log_likelihood(const VectorXd& x, const VectorXd& z) const override;
  VectorXd sample_posterior(const VectorXd& x, RngStream& rng) const override;
  double analytic_mi() const override;

  void grad_log_prior(const VectorXd& z, VectorXd& grad) const override;
  void grad_log_likelihood_z(const VectorXd& x, const VectorXd& z,
                             VectorXd& grad) const override;

  // Posterior mixture responsibilities for a given x (sum to 1).
  VectorXd posterior_responsibilities(const VectorXd& x) const;
  double log_marginal_x(const VectorXd& x) const;
  int components() const { return static_cast<int>(weights_.size()); }

 private:
  VectorXd weights_;  // M
  MatrixXd means_;    // M x d
  MatrixXd stds_;     // M x d
  double obs_std_;
};

// Model construction from a config description (kind + parameters); used by
// the config file loader and the CLI.
struct ModelSpec {
  std::string kind;  // "linear_gaussian_vae" | "discrete_joint" | "gaussian_mixture"
  int latent_dim = 10;
  int obs_dim = 100;
  std::uint64_t seed = 1;
  double obs_std = 1.0;
  // discrete_joint: either an explicit row-major table or (nx, nz, correlation)
  int nx = 8, nz = 8;
  double correlation = 0.5;
  std::vector<double> table;  // row-major; empty means "use random(nx, nz, seed)"
  // gaussian_mixture
  std::vector<double> mix_weights, mix_means, mix_stds;  // flattened M x d
  int mix_dim = 1;
};

std::unique_ptr<JointModel> make_model(const ModelSpec& spec);

}  // namespace mib

#endif  // MIB_MODEL_HPP
