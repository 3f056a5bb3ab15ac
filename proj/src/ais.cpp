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

#include "mib/ais.hpp"

#include <algorithm>
#include <cmath>

namespace mib {

void Bridge::grad_log_annealed(const VectorXd&, double, VectorXd&) const {
  throw UnsupportedCapabilityError("bridge has no z-gradients");
}

// ---------------------------------------------------------------------------
// ModelBridge

ModelBridge::ModelBridge(const JointModel& model, const Proposal& base, VectorXd x)
    : model_(&model), base_(&base), x_(std::move(x)) {}

bool ModelBridge::has_gradients() const { return model_->has_z_gradients(); }

void ModelBridge::grad_log_annealed(const VectorXd& z, double beta,
                                    VectorXd& grad) const {
  VectorXd gq, gp, gl;
  base_->grad_log_density_z(x_, z, gq);
  model_->grad_log_prior(z, gp);
  model_->grad_log_likelihood_z(x_, z, gl);
  grad = (1.0 - beta) * gq + beta * (gp + gl);
}

bool ModelBridge::gaussian_form(GaussianForm& base, GaussianForm& target) const {
  VectorXd mean, std;
  if (!base_->gaussian_params(x_, mean, std)) return false;
  const auto* lg = dynamic_cast<const LinearGaussianVae*>(model_);
  if (lg == nullptr) return false;
  const int d = lg->latent_dim();
  VectorXd prec_diag = std.array().square().inverse();
  base.prec = prec_diag.asDiagonal();
  base.lin = prec_diag.cwiseProduct(mean);
  const double s2 = lg->obs_std() * lg->obs_std();
  target.prec = MatrixXd::Identity(d, d) +
                lg->weights().transpose() * lg->weights() / s2;
  target.lin = lg->weights().transpose() * (x_ - lg->bias()) / s2;
  return true;
}

bool ModelBridge::discrete_form(VectorXd& log_base_tab, VectorXd& log_target_tab) const {
  const auto* dj = dynamic_cast<const DiscreteJoint*>(model_);
  if (dj == nullptr) return false;
  const int nz = dj->nz();
  log_base_tab.resize(nz);
  log_target_tab.resize(nz);
  for (int j = 0; j < nz; ++j) {
    const VectorXd z = DiscreteJoint::encode(j);
    log_base_tab[j] = base_->log_density(x_, z);
    log_target_tab[j] = model_->log_joint(x_, z);
  }
  return true;
}

// ---------------------------------------------------------------------------
// GaussianBridge

GaussianBridge::GaussianBridge(VectorXd mean0, VectorXd std0, VectorXd mean1,
                               VectorXd std1, double log_c)
    : mean0_(std::move(mean0)), std0_(std::move(std0)),
      mean1_(std::move(mean1)), std1_(std::move(std1)), log_c_(log_c) {
  if (mean0_.size() != std0_.size() || mean1_.size() != std1_.size() ||
      mean0_.size() != mean1_.size())
    throw DimensionError("gaussian bridge: endpoint shapes differ");
  if ((std0_.array() <= 0).any() || (std1_.array() <= 0).any())
    throw DomainError("gaussian bridge: stds must be positive");
}

namespace {
double diag_gauss_logpdf(const VectorXd& z, const VectorXd& mean, const VectorXd& std) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double u = (z[i] - mean[i]) / std[i];
    acc += -0.5 * (u * u + kLog2Pi) - std::log(std[i]);
  }
  return acc;
}
}  // namespace

double GaussianBridge::log_base(const VectorXd& z) const {
  return diag_gauss_logpdf(z, mean0_, std0_);
}

double GaussianBridge::log_target(const VectorXd& z) const {
  return log_c_ + diag_gauss_logpdf(z, mean1_, std1_);
}

VectorXd GaussianBridge::sample_base(RngStream& rng) const {
  return mean0_ + std0_.cwiseProduct(rng.normal_vector(mean0_.size()));
}

void GaussianBridge::grad_log_annealed(const VectorXd& z, double beta,
                                       VectorXd& grad) const {
  grad = (1.0 - beta) * ((mean0_ - z).array() / std0_.array().square()).matrix() +
         beta * ((mean1_ - z).array() / std1_.array().square()).matrix();
}

bool GaussianBridge::gaussian_form(GaussianForm& base, GaussianForm& target) const {
  VectorXd p0 = std0_.array().square().inverse();
  VectorXd p1 = std1_.array().square().inverse();
  base.prec = p0.asDiagonal();
  base.lin = p0.cwiseProduct(mean0_);
  target.prec = p1.asDiagonal();
  target.lin = p1.cwiseProduct(mean1_);
  return true;
}

double GaussianBridge::symmetrized_kl() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean0_.size(); ++i) {
    const double v0 = std0_[i] * std0_[i];
    const double v1 = std1_[i] * std1_[i];
    const double dm = mean1_[i] - mean0_[i];
    // KL(N0||N1) + KL(N1||N0)
    acc += 0.5 * (v0 / v1 + v1 / v0 - 2.0) + 0.5 * dm * dm * (1.0 / v0 + 1.0 / v1);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// EnergyBridge

EnergyBridge::EnergyBridge(const Proposal& base, const Critic& critic, VectorXd x,
                           int latent_dim)
    : base_(&base), critic_(&critic), x_(std::move(x)), dim_(latent_dim) {}

void EnergyBridge::grad_log_annealed(const VectorXd& z, double beta,
                                     VectorXd& grad) const {
  VectorXd gq, gt;
  base_->grad_log_density_z(x_, z, gq);
  critic_->grad_z(x_, z, gt);
  grad = gq + beta * gt;
}

// ---------------------------------------------------------------------------
// Schedules

std::vector<double> make_schedule(ScheduleKind kind, int T) {
  if (T < 1) throw ParameterError("schedule: T must be >= 1");
  std::vector<double> betas(static_cast<std::size_t>(T) + 1);
  if (kind == ScheduleKind::kLinear) {
    for (int t = 0; t <= T; ++t)
      betas[static_cast<std::size_t>(t)] = static_cast<double>(t) / T;
  } else {
    // Rescaled logistic ramp: flat near the endpoints, steep in the middle.
    const double delta = 4.0;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double lo = sig(-delta), hi = sig(delta);
    for (int t = 0; t <= T; ++t) {
      const double u = static_cast<double>(t) / T;
      betas[static_cast<std::size_t>(t)] = (sig(delta * (2.0 * u - 1.0)) - lo) / (hi - lo);
    }
    betas.front() = 0.0;
    betas.back() = 1.0;
  }
  for (std::size_t t = 1; t < betas.size(); ++t)
    if (!(betas[t] > betas[t - 1])) throw ParameterError("schedule must be strictly increasing");
  return betas;
}

// ---------------------------------------------------------------------------
// HMC kernel

void HmcKernel::set_schedule(std::vector<double> betas, std::vector<double> eps) {
  if (betas.size() != eps.size() || betas.empty())
    throw ParameterError("hmc schedule: size mismatch");
  sched_beta_ = std::move(betas);
  sched_eps_ = std::move(eps);
}

double HmcKernel::step_size_at(double beta) const {
  if (sched_beta_.empty()) return eps0_;
  if (beta <= sched_beta_.front()) return sched_eps_.front();
  if (beta >= sched_beta_.back()) return sched_eps_.back();
  auto it = std::upper_bound(sched_beta_.begin(), sched_beta_.end(), beta);
  const std::size_t hi = static_cast<std::size_t>(it - sched_beta_.begin());
  const std::size_t lo = hi - 1;
  const double w = (beta - sched_beta_[lo]) / (sched_beta_[hi] - sched_beta_[lo]);
  return (1.0 - w) * sched_eps_[lo] + w * sched_eps_[hi];
}

void HmcKernel::move(const Bridge& bridge, double beta, VectorXd& z,
                     RngStream& rng, KernelStats& stats) const {
  const double eps = step_size_at(beta);
  const int d = bridge.dim();
  VectorXd p = rng.normal_vector(d);
  const double u_accept = rng.uniform();  // drawn up front: fixed consumption

  const double logp0 = bridge.log_annealed(z, beta);
  const double h0 = -logp0 + 0.5 * p.squaredNorm();
  ++stats.proposed;

  VectorXd zn = z;
  VectorXd grad(d);
  bridge.grad_log_annealed(zn, beta, grad);
  bool divergent = !grad.allFinite();
  if (!divergent) {
    p += 0.5 * eps * grad;
    for (int l = 0; l < leapfrog_; ++l) {
      zn += eps * p;
      if (!zn.allFinite()) { divergent = true; break; }
      bridge.grad_log_annealed(zn, beta, grad);
      if (!grad.allFinite()) { divergent = true; break; }
      p += (l + 1 < leapfrog_ ? eps : 0.5 * eps) * grad;
    }
  }
  if (!divergent) {
    const double logp1 = bridge.log_annealed(zn, beta);
    const double h1 = -logp1 + 0.5 * p.squaredNorm();
    if (!std::isfinite(h1)) {
      divergent = true;
    } else if (std::log(u_accept) < h0 - h1) {
      z = zn;
      ++stats.accepted;
      return;
    }
  }
  if (divergent) ++stats.divergences;
  // rejected: state unchanged
}

// ---------------------------------------------------------------------------
// Perfect kernel

void PerfectKernel::move(const Bridge& bridge, double beta, VectorXd& z,
                         RngStream& rng, KernelStats& stats) const {
  ++stats.proposed;
  ++stats.accepted;
  Bridge::GaussianForm base, target;
  if (bridge.gaussian_form(base, target)) {
    MatrixXd prec = (1.0 - beta) * base.prec + beta * target.prec;
    VectorXd lin = (1.0 - beta) * base.lin + beta * target.lin;
    Eigen::LLT<MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw DomainError("perfect kernel: intermediate precision not SPD");
    VectorXd mean = llt.solve(lin);
    VectorXd eps = rng.normal_vector(bridge.dim());
    z = mean + llt.matrixU().solve(eps);
    return;
  }
  VectorXd log_b, log_t;
  if (bridge.discrete_form(log_b, log_t)) {
    VectorXd logits(log_b.size());
    for (Eigen::Index j = 0; j < log_b.size(); ++j) {
      if (beta >= 1.0)
        logits[j] = log_t[j];
      else if (log_b[j] == kNegInf)
        logits[j] = kNegInf;
      else
        logits[j] = (1.0 - beta) * log_b[j] + beta * log_t[j];
    }
    const Eigen::Index j = categorical_sample_log(logits, rng.uniform());
    z = DiscreteJoint::encode(static_cast<int>(j));
    return;
  }
  throw UnsupportedCapabilityError(
      "perfect transitions need Gaussian endpoints or a finite support");
}

// ---------------------------------------------------------------------------
// Chains

ChainRecord ais_forward(const Bridge& bridge, const std::vector<double>& betas,
                        const TransitionKernel& kernel, RngStream& rng) {
  const int T = static_cast<int>(betas.size()) - 1;
  ChainRecord rec;
  rec.increments.reserve(T);
  rec.r_values.reserve(T);
  VectorXd z = bridge.sample_base(rng);
  for (int t = 1; t <= T; ++t) {
    const double r = bridge.log_ratio(z);
    const double inc = (betas[t] - betas[t - 1]) * r;
    rec.r_values.push_back(r);
    rec.increments.push_back(inc);
    if (!std::isfinite(r)) {
      rec.divergent = true;
      rec.log_weight = kNegInf;
      rec.final_state = z;
      return rec;
    }
    rec.log_weight += inc;
    if (t < T) kernel.move(bridge, betas[t], z, rng, rec.stats);
  }
  rec.final_state = z;
  return rec;
}

ChainRecord ais_backward(const Bridge& bridge, const std::vector<double>& betas,
                         const TransitionKernel& kernel, const VectorXd& z_start,
                         RngStream& rng) {
  const int T = static_cast<int>(betas.size()) - 1;
  ChainRecord rec;
  rec.increments.reserve(T);
  rec.r_values.reserve(T);
  VectorXd z = z_start;
  for (int t = T; t >= 1; --t) {
    const double r = bridge.log_ratio(z);
    const double inc = (betas[t] - betas[t - 1]) * r;
    rec.r_values.push_back(r);
    rec.increments.push_back(inc);
    if (!std::isfinite(r)) {
      rec.divergent = true;
      rec.log_weight = kNegInf;
      rec.final_state = z;
      return rec;
    }
    rec.log_weight += inc;
    if (t > 1) kernel.move(bridge, betas[t - 1], z, rng, rec.stats);
  }
  rec.final_state = z;
  return rec;
}

// ---------------------------------------------------------------------------
// Step-size adaptation

AdaptResult adapt_step_size(const Bridge& bridge, const std::vector<double>& betas,
                            HmcKernel& kernel, double target_accept,
                            int warmup_rounds, int warmup_chains,
                            std::uint64_t seed) {
  const int T = static_cast<int>(betas.size()) - 1;
  AdaptResult out;
  RngStream rng(seed, 0x41444150u /* adapt stream tag */);
  std::vector<VectorXd> chains(static_cast<std::size_t>(warmup_chains));
  for (auto& c : chains) c = bridge.sample_base(rng);

  double eps = kernel.base_step_size();
  std::int64_t round_counter = 0;
  std::int64_t tail_proposed = 0, tail_accepted = 0;
  // Walk the move grid beta_1 .. beta_{T-1}; a T=1 schedule has no moves and
  // nothing to tune.
  for (int t = 1; t < T; ++t) {
    const double beta = betas[t];
    for (int r = 0; r < warmup_rounds; ++r) {
      HmcKernel probe(kernel.leapfrog_steps(), eps);
      KernelStats stats;
      for (auto& c : chains) probe.move(bridge, beta, c, rng, stats);
      const double acc = stats.accept_rate();
      const double gain = std::max(0.5 / (1.0 + static_cast<double>(round_counter) / 10.0), 0.05);
      eps *= std::exp(gain * (acc - target_accept));
      ++round_counter;
      if (t > (T - 1) / 2) {  // second half counts as the post-transient read
        tail_proposed += stats.proposed;
        tail_accepted += stats.accepted;
      }
    }
    out.betas.push_back(beta);
    out.eps.push_back(eps);
  }
  if (out.betas.empty()) {
    out.betas = {0.5};
    out.eps = {eps};
  }
  out.realized_accept =
      tail_proposed > 0
          ? static_cast<double>(tail_accepted) / static_cast<double>(tail_proposed)
          : 1.0;
  out.tuning_failure =
      tail_proposed > 0 && (tail_accepted == 0 || tail_accepted == tail_proposed);
  kernel.set_schedule(out.betas, out.eps);
  return out;
}

// ---------------------------------------------------------------------------

GapMeasurement perfect_transition_gap(const Bridge& bridge, int T, std::int64_t n,
                                      std::uint64_t seed, Exec exec) {
  Bridge::GaussianForm b, t;
  VectorXd lb, lt;
  if (!bridge.gaussian_form(b, t) && !bridge.discrete_form(lb, lt))
    throw UnsupportedCapabilityError(
        "perfect_transition_gap: bridge does not support perfect transitions");
  const std::vector<double> betas = make_schedule(ScheduleKind::kLinear, T);
  PerfectKernel kernel;
  std::vector<double> fwd(n), bwd(n);
  run_draws(n, exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    ChainRecord f = ais_forward(bridge, betas, kernel, rng);
    // Backward chains start from an exact target draw, available here since
    // the bridge endpoints admit perfect sampling at beta = 1.
    VectorXd z = f.final_state;
    KernelStats stats;
    RngStream rng_b = rng.child(0);
    kernel.move(bridge, 1.0, z, rng_b, stats);
    ChainRecord bk = ais_backward(bridge, betas, kernel, z, rng_b);
    fwd[i] = f.log_weight;
    bwd[i] = bk.log_weight;
  });
  GapMeasurement out;
  const MeanSE mf = mean_and_se(fwd);
  const MeanSE mb = mean_and_se(bwd);
  out.elbo = mf.mean;
  out.eubo = mb.mean;
  out.gap = mb.mean - mf.mean;
  out.std_error = std::sqrt(mf.std_error * mf.std_error + mb.std_error * mb.std_error);
  return out;
}

}  // namespace mib
