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

#ifndef MIB_AIS_HPP
#define MIB_AIS_HPP

#include <memory>
#include <vector>

#include "mib/estimate.hpp"
#include "mib/model.hpp"
#include "mib/variational.hpp"

namespace mib {

// ---------------------------------------------------------------------------
// Geometric bridge between a normalized base pi_0(z|x) and an unnormalized
// target pi_T(x, z), bound to a fixed x.  The annealed density is always
// evaluated from the two endpoint log-densities:
//   log pi_beta(z) = (1 - beta) log pi_0(z) + beta log pi_T(z).
class Bridge {
 public:
  virtual ~Bridge() = default;
  virtual int dim() const = 0;
  virtual double log_base(const VectorXd& z) const = 0;    // normalized
  virtual double log_target(const VectorXd& z) const = 0;  // unnormalized
  virtual VectorXd sample_base(RngStream& rng) const = 0;

  double log_ratio(const VectorXd& z) const { return log_target(z) - log_base(z); }
  double log_annealed(const VectorXd& z, double beta) const {
    return (1.0 - beta) * log_base(z) + beta * log_target(z);
  }

  virtual bool has_gradients() const { return false; }
  virtual void grad_log_annealed(const VectorXd& z, double beta, VectorXd& grad) const;

  // Endpoint quadratic forms -0.5 z'Lz + eta'z (+ const) when both ends are
  // Gaussian in z; enables exact intermediate sampling.
  struct GaussianForm {
    MatrixXd prec;
    VectorXd lin;
  };
  virtual bool gaussian_form(GaussianForm& base, GaussianForm& target) const {
    (void)base; (void)target;
    return false;
  }

  // Endpoint log-density tables over a finite support; enables exact
  // intermediate sampling on enumerable models.
  virtual bool discrete_form(VectorXd& log_base_tab, VectorXd& log_target_tab) const {
    (void)log_base_tab; (void)log_target_tab;
    return false;
  }
};

// Bridge from a proposal to a joint model's unnormalized posterior at x.
class ModelBridge final : public Bridge {
 public:
  ModelBridge(const JointModel& model, const Proposal& base, VectorXd x);
  int dim() const override { return model_->latent_dim(); }
  double log_base(const VectorXd& z) const override { return base_->log_density(x_, z); }
  double log_target(const VectorXd& z) const override { return model_->log_joint(x_, z); }
  VectorXd sample_base(RngStream& rng) const override { return base_->sample(x_, rng); }
  bool has_gradients() const override;
  void grad_log_annealed(const VectorXd& z, double beta, VectorXd& grad) const override;
  bool gaussian_form(GaussianForm& base, GaussianForm& target) const override;
  bool discrete_form(VectorXd& log_base_tab, VectorXd& log_target_tab) const override;
  const VectorXd& x() const { return x_; }

 private:
  const JointModel* model_;
  const Proposal* base_;
  VectorXd x_;
};

// Diagonal Gaussian base N(m0, s0^2) to unnormalized c * N(m1, s1^2); the
// test stand for the perfect-transition gap law.
class GaussianBridge final : public Bridge {
 public:
  GaussianBridge(VectorXd mean0, VectorXd std0, VectorXd mean1, VectorXd std1,
                 double log_c = 0.0);
  int dim() const override { return static_cast<int>(mean0_.size()); }
  double log_base(const VectorXd& z) const override;
  double log_target(const VectorXd& z) const override;
  VectorXd sample_base(RngStream& rng) const override;
  bool has_gradients() const override { return true; }
  void grad_log_annealed(const VectorXd& z, double beta, VectorXd& grad) const override;
  bool gaussian_form(GaussianForm& base, GaussianForm& target) const override;

  // Closed-form KL(base || target-normalized) + KL(target-normalized || base).
  double symmetrized_kl() const;
  double log_normalizer() const { return log_c_; }

 private:
  VectorXd mean0_, std0_, mean1_, std1_;
  double log_c_;
};

// Base q(z|x) tilted by a critic: target = q(z|x) e^{T(x,z)}.  The log ratio
// is the critic value itself, so the annealing increments never lose
// precision to cancellation.
class EnergyBridge final : public Bridge {
 public:
  EnergyBridge(const Proposal& base, const Critic& critic, VectorXd x, int latent_dim);
  int dim() const override { return dim_; }
  double log_base(const VectorXd& z) const override { return base_->log_density(x_, z); }
  double log_target(const VectorXd& z) const override {
    return base_->log_density(x_, z) + critic_->eval(x_, z);
  }
  VectorXd sample_base(RngStream& rng) const override { return base_->sample(x_, rng); }
  bool has_gradients() const override { return true; }
  void grad_log_annealed(const VectorXd& z, double beta, VectorXd& grad) const override;

 private:
  const Proposal* base_;
  const Critic* critic_;
  VectorXd x_;
  int dim_;
};

// ---------------------------------------------------------------------------
// Annealing schedules: beta_0 = 0 < beta_1 < ... < beta_T = 1.
enum class ScheduleKind { kLinear, kSigmoid };

std::vector<double> make_schedule(ScheduleKind kind, int T);

// ---------------------------------------------------------------------------
// Transition kernels invariant for pi_beta.
struct KernelStats {
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  std::int64_t divergences = 0;

  double accept_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0;
  }
  KernelStats& operator+=(const KernelStats& o) {
    proposed += o.proposed;
    accepted += o.accepted;
    divergences += o.divergences;
    return *this;
  }
};

class TransitionKernel {
 public:
  virtual ~TransitionKernel() = default;
  virtual void move(const Bridge& bridge, double beta, VectorXd& z,
                    RngStream& rng, KernelStats& stats) const = 0;
};

// Metropolis-corrected HMC with identity mass.  Divergent trajectories
// (non-finite energy mid-leapfrog) are rejected and counted, never fatal.
class HmcKernel final : public TransitionKernel {
 public:
  explicit HmcKernel(int leapfrog_steps = 20, double step_size = 0.1)
      : leapfrog_(leapfrog_steps), eps0_(step_size) {
    if (leapfrog_ < 1) throw ParameterError("hmc: leapfrog steps must be >= 1");
    if (!(step_size > 0.0)) throw ParameterError("hmc: step size must be positive");
  }

  void move(const Bridge& bridge, double beta, VectorXd& z, RngStream& rng,
            KernelStats& stats) const override;

  int leapfrog_steps() const { return leapfrog_; }
  double base_step_size() const { return eps0_; }
  void set_base_step_size(double eps) { eps0_ = eps; }
  // Per-beta tuned step sizes (piecewise-linear interpolation in beta).
  void set_schedule(std::vector<double> betas, std::vector<double> eps);
  double step_size_at(double beta) const;
  bool has_schedule() const { return !sched_beta_.empty(); }

 private:
  int leapfrog_;
  double eps0_;
  std::vector<double> sched_beta_, sched_eps_;
};

// Exact sampler from the annealed density; available when the bridge exposes
// Gaussian endpoint forms or a finite support.
class PerfectKernel final : public TransitionKernel {
 public:
  void move(const Bridge& bridge, double beta, VectorXd& z, RngStream& rng,
            KernelStats& stats) const override;
};

// ---------------------------------------------------------------------------
// Single annealing chains.
//
// Weight convention (fixed project-wide): walking the grid, the increment
// (beta_t - beta_{t-1}) * log_ratio(z) is accumulated at the current state,
// then the state moves with a kernel invariant for the upcoming intermediate.
// Forward chains weight at states targeting beta_0 .. beta_{T-1} and move
// toward beta_{t}; backward chains start at z_T, weight at states targeting
// beta_T .. beta_1, and move toward beta_{t-1}.  The two traversals are exact
// mirrors, the realized weight equals the log density ratio of the extended
// proposal/target pair, and a T=1 chain consumes no kernel moves at all
// (which is what makes the T=1 reductions to IWAE / reverse IWAE exact).
struct ChainRecord {
  double log_weight = 0.0;
  std::vector<double> increments;  // per-rung contributions, in traversal order
  std::vector<double> r_values;    // log_ratio at each weighted state
  VectorXd final_state;
  KernelStats stats;
  bool divergent = false;  // non-finite log ratio encountered (weight -inf)
};

ChainRecord ais_forward(const Bridge& bridge, const std::vector<double>& betas,
                        const TransitionKernel& kernel, RngStream& rng);
ChainRecord ais_backward(const Bridge& bridge, const std::vector<double>& betas,
                         const TransitionKernel& kernel, const VectorXd& z_start,
                         RngStream& rng);

// ---------------------------------------------------------------------------
// Warmup step-size adaptation toward a target acceptance rate, walking the
// schedule once with a small population of chains.  The returned schedule is
// frozen before any weighted run so adaptation cannot bias the bounds.
struct AdaptResult {
  std::vector<double> betas;
  std::vector<double> eps;
  double realized_accept = 1.0;
  bool tuning_failure = false;  // acceptance pinned at 0 or 1 after warmup
};

AdaptResult adapt_step_size(const Bridge& bridge, const std::vector<double>& betas,
                            HmcKernel& kernel, double target_accept = 0.65,
                            int warmup_rounds = 3, int warmup_chains = 8,
                            std::uint64_t seed = 0);

// Measured EUBO - ELBO gap over n forward/backward chain pairs.
struct GapMeasurement {
  double gap = 0.0;
  double std_error = 0.0;
  double elbo = 0.0, eubo = 0.0;
};

GapMeasurement perfect_transition_gap(const Bridge& bridge, int T, std::int64_t n,
                                      std::uint64_t seed, Exec exec = Exec::kParallel);

}  // namespace mib

#endif  // MIB_AIS_HPP
