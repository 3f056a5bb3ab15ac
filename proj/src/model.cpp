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

#include "mib/model.hpp"

#include <cmath>

#include "mib/math.hpp"

namespace mib {

void JointModel::require(Cap c, const char* op) const {
  if (!has(c)) {
    throw UnsupportedCapabilityError(std::string(op) + ": model '" + name() +
                                     "' lacks the required capability");
  }
}

VectorXd JointModel::sample_posterior(const VectorXd&, RngStream&) const {
  throw UnsupportedCapabilityError(name() + ": exact posterior sampling unavailable");
}

double JointModel::analytic_mi() const {
  throw UnsupportedCapabilityError(name() + ": analytic MI unavailable");
}

void JointModel::grad_log_prior(const VectorXd&, VectorXd&) const {
  throw UnsupportedCapabilityError(name() + ": prior gradient unavailable");
}

void JointModel::grad_log_likelihood_z(const VectorXd&, const VectorXd&,
                                       VectorXd&) const {
  throw UnsupportedCapabilityError(name() + ": likelihood gradient unavailable");
}

JointBatch sample_joint_batch(const JointModel& model, std::int64_t n,
                              RngStream rng) {
  model.require(kSampleJoint, "sample_joint");
  JointBatch out;
  out.x.resize(n, model.obs_dim());
  out.z.resize(n, model.latent_dim());
  VectorXd x, z;
  for (std::int64_t i = 0; i < n; ++i) {
    model.sample_joint(rng, x, z);
    out.x.row(i) = x;
    out.z.row(i) = z;
  }
  return out;
}

// ---------------------------------------------------------------------------
// LinearGaussianVae

LinearGaussianVae::LinearGaussianVae(int latent_dim, int obs_dim,
                                     std::uint64_t weight_seed, double obs_std)
    : obs_std_(obs_std), weight_seed_(weight_seed) {
  if (latent_dim < 1 || obs_dim < 1) throw ParameterError("dims must be positive");
  if (!(obs_std > 0.0)) throw ParameterError("obs_std must be positive");
  RngStream rng(weight_seed, 0x57454947u /* weight stream tag */);
  W_.resize(obs_dim, latent_dim);
  rng.fill_normal(W_);
  b_ = VectorXd::Zero(obs_dim);
  finish_setup();
}

LinearGaussianVae::LinearGaussianVae(MatrixXd W, VectorXd b, double obs_std)
    : W_(std::move(W)), b_(std::move(b)), obs_std_(obs_std) {
  if (b_.size() != W_.rows()) throw DimensionError("bias length != obs dim");
  if (!(obs_std > 0.0)) throw ParameterError("obs_std must be positive");
  finish_setup();
}

void LinearGaussianVae::finish_setup() {
  z_gradients_ = true;
  const double s2 = obs_std_ * obs_std_;
  const int d = latent_dim();
  post_prec_ = MatrixXd::Identity(d, d) + W_.transpose() * W_ / s2;
  post_prec_llt_.compute(post_prec_);
  if (post_prec_llt_.info() != Eigen::Success)
    throw DomainError("posterior precision not positive definite");

  MatrixXd marg = s2 * MatrixXd::Identity(obs_dim(), obs_dim()) + W_ * W_.transpose();
  marg_cov_llt_.compute(marg);
  if (marg_cov_llt_.info() != Eigen::Success)
    throw DomainError("marginal covariance not positive definite");
  marg_logdet_ = 0.0;
  for (int i = 0; i < obs_dim(); ++i)
    marg_logdet_ += 2.0 * std::log(marg_cov_llt_.matrixL()(i, i));

  // MI via the latent-space eigenvalues: det(I + W W^T / s^2) equals
  // det(I + W^T W / s^2), so the log-det needs only a d x d eigensolve.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W_.transpose() * W_ / s2);
  mi_ = 0.5 * (es.eigenvalues().array() + 1.0).log().sum();
}

void LinearGaussianVae::sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const {
  z = rng.normal_vector(latent_dim());
  x = W_ * z + b_ + obs_std_ * rng.normal_vector(obs_dim());
}

VectorXd LinearGaussianVae::sample_prior(RngStream& rng) const {
  return rng.normal_vector(latent_dim());
}

double LinearGaussianVae::log_prior(const VectorXd& z) const {
  require_finite(z, "log_prior(z)");
  if (z.size() != latent_dim()) throw DimensionError("log_prior: z dim");
  return -0.5 * (z.squaredNorm() + latent_dim() * kLog2Pi);
}

double LinearGaussianVae::log_likelihood(const VectorXd& x, const VectorXd& z) const {
  require_finite(x, "log_likelihood(x)");
  require_finite(z, "log_likelihood(z)");
  if (x.size() != obs_dim() || z.size() != latent_dim())
    throw DimensionError("log_likelihood: dims");
  const VectorXd r = x - W_ * z - b_;
  const double s2 = obs_std_ * obs_std_;
  return -0.5 * (r.squaredNorm() / s2 +
                 obs_dim() * (kLog2Pi + 2.0 * std::log(obs_std_)));
}

VectorXd LinearGaussianVae::sample_posterior(const VectorXd& x, RngStream& rng) const {
  require_finite(x, "sample_posterior(x)");
  const double s2 = obs_std_ * obs_std_;
  VectorXd mean = post_prec_llt_.solve(W_.transpose() * (x - b_) / s2);
  // Posterior covariance is P^{-1} = L^{-T} L^{-1}; a draw is mean + L^{-T} eps.
  VectorXd eps = rng.normal_vector(latent_dim());
  VectorXd corr = post_prec_llt_.matrixU().solve(eps);
  return mean + corr;
}

double LinearGaussianVae::analytic_mi() const { return mi_; }

void LinearGaussianVae::grad_log_prior(const VectorXd& z, VectorXd& grad) const {
  grad = -z;
}

void LinearGaussianVae::grad_log_likelihood_z(const VectorXd& x, const VectorXd& z,
                                              VectorXd& grad) const {
  const double s2 = obs_std_ * obs_std_;
  grad.noalias() = W_.transpose() * (x - W_ * z - b_) / s2;
}

double LinearGaussianVae::log_evidence(const VectorXd& x) const {
  VectorXd r = x - b_;
  VectorXd half = marg_cov_llt_.matrixL().solve(r);
  return -0.5 * (half.squaredNorm() + marg_logdet_ + obs_dim() * kLog2Pi);
}

void LinearGaussianVae::posterior_moments(const VectorXd& x, VectorXd& mean,
                                          MatrixXd& cov) const {
  const double s2 = obs_std_ * obs_std_;
  mean = post_prec_llt_.solve(W_.transpose() * (x - b_) / s2);
  cov = post_prec_llt_.solve(MatrixXd::Identity(latent_dim(), latent_dim()));
}

// ---------------------------------------------------------------------------
// DiscreteJoint

namespace {
constexpr int kMaxAlphabet = 64;  // keeps exhaustive bound enumeration sub-second
}

DiscreteJoint::DiscreteJoint(MatrixXd table) : table_(std::move(table)) {
  if (table_.rows() < 1 || table_.cols() < 1) throw ParameterError("empty table");
  if (table_.rows() > kMaxAlphabet || table_.cols() > kMaxAlphabet)
    throw SizeError("discrete alphabets limited to 64 x 64");
  if ((table_.array() < 0.0).any()) throw DomainError("negative table entry");
  const double total = table_.sum();
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("table must sum to 1");
  table_ /= total;
  px_ = table_.rowwise().sum();
  pz_ = table_.colwise().sum();
}

DiscreteJoint DiscreteJoint::random(int nx, int nz, std::uint64_t seed,
                                    double correlation) {
  if (correlation < 0.0 || correlation > 1.0)
    throw ParameterError("correlation must lie in [0, 1]");
  RngStream rng(seed, 0x44495343u /* table stream tag */);
  MatrixXd t(nx, nz);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j) t(i, j) = -std::log(rng.uniform_pos());
  t /= t.sum();
  // Blend toward a (cyclic) diagonal to control dependence strength.
  MatrixXd diag = MatrixXd::Zero(nx, nz);
  const int m = std::min(nx, nz);
  for (int i = 0; i < std::max(nx, nz); ++i) diag(i % nx, i % nz) += 1.0;
  diag /= diag.sum();
  MatrixXd blended = (1.0 - correlation) * t + correlation * diag;
  return DiscreteJoint(std::move(blended));
}

int DiscreteJoint::index_of(const VectorXd& v) {
  if (v.size() != 1) throw DimensionError("discrete state must be 1-d");
  require_finite(v, "discrete index");
  const double r = std::round(v[0]);
  if (std::abs(v[0] - r) > 1e-9) throw DomainError("discrete state must be integral");
  return static_cast<int>(r);
}

VectorXd DiscreteJoint::encode(int index) {
  VectorXd v(1);
  v[0] = static_cast<double>(index);
  return v;
}

void DiscreteJoint::sample_joint(RngStream& rng, VectorXd& x, VectorXd& z) const {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < nx(); ++i) {
    for (int j = 0; j < nz(); ++j) {
      cum += table_(i, j);
      if (u < cum) {
        x = encode(i);
        z = encode(j);
        return;
      }
    }
  }
  x = encode(nx() - 1);
  z = encode(nz() - 1);
}

VectorXd DiscreteJoint::sample_prior(RngStream& rng) const {
  return encode(static_cast<int>(categorical_sample(pz_, rng.uniform())));
}

double DiscreteJoint::log_prior(const VectorXd& z) const {
  const int j = index_of(z);
  if (j < 0 || j >= nz()) throw DomainError("z index out of range");
  return std::log(pz_[j]);
}

double DiscreteJoint::log_likelihood(const VectorXd& x, const VectorXd& z) const {
  const int i = index_of(x);
  const int j = index_of(z);
  if (i < 0 || i >= nx() || j < 0 || j >= nz())
    throw DomainError("index out of range");
  // log p(x | z) = log p(x, z) - log p(z)
  return std::log(table_(i, j)) - std::log(pz_[j]);
}

VectorXd DiscreteJoint::sample_posterior(const VectorXd& x, RngStream& rng) const {
  const int i = index_of(x);
  if (i < 0 || i >= nx()) throw DomainError("x index out of range");
  VectorXd row = table_.row(i).transpose() / px_[i];
  return encode(static_cast<int>(categorical_sample(row, rng.uniform())));
}

VectorXd DiscreteJoint::posterior_row(int ix) const {
  return table_.row(ix).transpose() / px_[ix];
}

double DiscreteJoint::analytic_mi() const {
  double mi = 0.0;
  for (int i = 0; i < nx(); ++i) {
    for (int j = 0; j < nz(); ++j) {
      const double p = table_(i, j);
      if (p > 0.0) mi += p * std::log(p / (px_[i] * pz_[j]));
    }
  }
  return mi;
}

// ---------------------------------------------------------------------------
// GaussianMixturePosteriorModel

namespace {

double diag_normal_logpdf(const VectorXd& v, const VectorXd& mean,
                          const VectorXd& std) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double u = (v[i] - mean[i]) / std[i];
    acc += -0.5 * (u * u + kLog2Pi) - std::log(std[i]);
  }
  return acc;
}

// 40-node Gauss-Hermite rule (probabilists' weights folded in), generated by
// Golub-Welsch on the Hermite recurrence at double precision.
void gauss_hermite_40(std::vector<double>& nodes, std::vector<double>& weights) {
  // Solve the symmetric tridiagonal eigenproblem for the Hermite recurrence:
  // nodes are eigenvalues, weights are squared first eigenvector components.
  constexpr int n = 40;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(static_cast<double>(i));
    J(i, i - 1) = off;
    J(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;  // sums to 1 for the standard normal measure
  }
}

}  // namespace

GaussianMixturePosteriorModel::GaussianMixturePosteriorModel(VectorXd weights,
                                                             MatrixXd means,
                                                             MatrixXd stds,
                                                             double obs_std)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      stds_(std::move(stds)),
      obs_std_(obs_std) {
  const int M = static_cast<int>(weights_.size());
  if (M < 1) throw ParameterError("need at least one mixture component");
  if (means_.rows() != M || stds_.rows() != M || means_.cols() != stds_.cols())
    throw DimensionError("mixture parameter shapes inconsistent");
  if (means_.cols() != 1 && means_.cols() != 2)
    throw ParameterError("mixture latent must be 1- or 2-d");
  if ((weights_.array() <= 0.0).any()) throw DomainError("weights must be positive");
  if ((stds_.array() <= 0.0).any()) throw DomainError("stds must be positive");
  if (!(obs_std_ > 0.0)) throw ParameterError("obs_std must be positive");
  weights_ /= weights_.sum();
  z_gradients_ = true;
}

void GaussianMixturePosteriorModel::sample_joint(RngStream& rng, VectorXd& x,
                                                 VectorXd& z) const {
  z = sample_prior(rng);
  x = z + obs_std_ * rng.normal_vector(obs_dim());
}

VectorXd GaussianMixturePosteriorModel::sample_prior(RngStream& rng) const {
  const int m = static_cast<int>(categorical_sample(weights_, rng.uniform()));
  const int d = latent_dim();
  VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = means_(m, i) + stds_(m, i) * rng.normal();
  return z;
}

double GaussianMixturePosteriorModel::log_prior(const VectorXd& z) const {
  require_finite(z, "log_prior(z)");
  if (z.size() != latent_dim()) throw DimensionError("log_prior: z dim");
  VectorXd comps(components());
  for (int m = 0; m < components(); ++m)
    comps[m] = std::log(weights_[m]) +
               diag_normal_logpdf(z, means_.row(m), stds_.row(m));
  return log_sum_exp(comps);
}

double GaussianMixturePosteriorModel::log_likelihood(const VectorXd& x,
                                                     const VectorXd& z) const {
  require_finite(x, "log_likelihood(x)");
  require_finite(z, "log_likelihood(z)");
  const double s2 = obs_std_ * obs_std_;
  return -0.5 * ((x - z).squaredNorm() / s2 +
                 obs_dim() * (kLog2Pi + 2.0 * std::log(obs_std_)));
}

VectorXd GaussianMixturePosteriorModel::posterior_responsibilities(
    const VectorXd& x) const {
  // p(m | x) from the closed-form component evidences N(x; mu_m, S_m + s^2 I).
  VectorXd logr(components());
  for (int m = 0; m < components(); ++m) {
    VectorXd std_conv(latent_dim());
    for (int i = 0; i < latent_dim(); ++i)
      std_conv[i] = std::sqrt(stds_(m, i) * stds_(m, i) + obs_std_ * obs_std_);
    logr[m] = std::log(weights_[m]) +
              diag_normal_logpdf(x, means_.row(m), std_conv);
  }
  const double lse = log_sum_exp(logr);
  return (logr.array() - lse).exp();
}

double GaussianMixturePosteriorModel::log_marginal_x(const VectorXd& x) const {
  VectorXd comps(components());
  for (int m = 0; m < components(); ++m) {
    VectorXd std_conv(latent_dim());
    for (int i = 0; i < latent_dim(); ++i)
      std_conv[i] = std::sqrt(stds_(m, i) * stds_(m, i) + obs_std_ * obs_std_);
    comps[m] = std::log(weights_[m]) +
               diag_normal_logpdf(x, means_.row(m), std_conv);
  }
  return log_sum_exp(comps);
}

VectorXd GaussianMixturePosteriorModel::sample_posterior(const VectorXd& x,
                                                         RngStream& rng) const {
  VectorXd resp = posterior_responsibilities(x);
  const int m = static_cast<int>(categorical_sample(resp, rng.uniform()));
  // Conjugate per-component conditional: precision 1/S_m + 1/s^2 per dim.
  const double s2 = obs_std_ * obs_std_;
  VectorXd z(latent_dim());
  for (int i = 0; i < latent_dim(); ++i) {
    const double v_m = stds_(m, i) * stds_(m, i);
    const double var = 1.0 / (1.0 / v_m + 1.0 / s2);
    const double mean = var * (means_(m, i) / v_m + x[i] / s2);
    z[i] = mean + std::sqrt(var) * rng.normal();
  }
  return z;
}

double GaussianMixturePosteriorModel::analytic_mi() const {
  // I = E_p(x)[-log p(x)] - H(x|z); the entropy of p(x) is evaluated with a
  // tensor-product Gauss-Hermite rule per mixture component.
  std::vector<double> nodes, wts;
  gauss_hermite_40(nodes, wts);
  const int d = latent_dim();
  const double s2 = obs_std_ * obs_std_;
  double e_logpx = 0.0;
  for (int m = 0; m < components(); ++m) {
    VectorXd std_conv(d);
    for (int i = 0; i < d; ++i)
      std_conv[i] = std::sqrt(stds_(m, i) * stds_(m, i) + s2);
    if (d == 1) {
      double acc = 0.0;
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        VectorXd x(1);
        x[0] = means_(m, 0) + std_conv[0] * nodes[a];
        acc += wts[a] * log_marginal_x(x);
      }
      e_logpx += weights_[m] * acc;
    } else {
      double acc = 0.0;
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = 0; b < nodes.size(); ++b) {
          VectorXd x(2);
          x[0] = means_(m, 0) + std_conv[0] * nodes[a];
          x[1] = means_(m, 1) + std_conv[1] * nodes[b];
          acc += wts[a] * wts[b] * log_marginal_x(x);
        }
      }
      e_logpx += weights_[m] * acc;
    }
  }
  const double h_x_given_z =
      0.5 * obs_dim() * (1.0 + kLog2Pi + 2.0 * std::log(obs_std_));
  return -e_logpx - h_x_given_z;
}

void GaussianMixturePosteriorModel::grad_log_prior(const VectorXd& z,
                                                   VectorXd& grad) const {
  VectorXd logr(components());
  for (int m = 0; m < components(); ++m)
    logr[m] = std::log(weights_[m]) +
              diag_normal_logpdf(z, means_.row(m), stds_.row(m));
  const double lse = log_sum_exp(logr);
  grad = VectorXd::Zero(latent_dim());
  for (int m = 0; m < components(); ++m) {
    const double r = std::exp(logr[m] - lse);
    for (int i = 0; i < latent_dim(); ++i) {
      const double v = stds_(m, i) * stds_(m, i);
      grad[i] += r * (means_(m, i) - z[i]) / v;
    }
  }
}

void GaussianMixturePosteriorModel::grad_log_likelihood_z(const VectorXd& x,
                                                          const VectorXd& z,
                                                          VectorXd& grad) const {
  grad = (x - z) / (obs_std_ * obs_std_);
}

// ---------------------------------------------------------------------------

std::unique_ptr<JointModel> make_model(const ModelSpec& spec) {
  if (spec.kind == "linear_gaussian_vae") {
    return std::make_unique<LinearGaussianVae>(spec.latent_dim, spec.obs_dim,
                                               spec.seed, spec.obs_std);
  }
  if (spec.kind == "discrete_joint") {
    if (!spec.table.empty()) {
      if (static_cast<int>(spec.table.size()) != spec.nx * spec.nz)
        throw ConfigError("discrete table size != nx * nz");
      MatrixXd t(spec.nx, spec.nz);
      for (int i = 0; i < spec.nx; ++i)
        for (int j = 0; j < spec.nz; ++j) t(i, j) = spec.table[i * spec.nz + j];
      return std::make_unique<DiscreteJoint>(std::move(t));
    }
    return std::make_unique<DiscreteJoint>(
        DiscreteJoint::random(spec.nx, spec.nz, spec.seed, spec.correlation));
  }
  if (spec.kind == "gaussian_mixture") {
    const int M = static_cast<int>(spec.mix_weights.size());
    const int d = spec.mix_dim;
    if (M < 1 || static_cast<int>(spec.mix_means.size()) != M * d ||
        static_cast<int>(spec.mix_stds.size()) != M * d)
      throw ConfigError("gaussian_mixture: weights/means/stds sizes inconsistent");
    VectorXd w(M);
    MatrixXd mu(M, d), sd(M, d);
    for (int m = 0; m < M; ++m) {
      w[m] = spec.mix_weights[m];
      for (int i = 0; i < d; ++i) {
        mu(m, i) = spec.mix_means[m * d + i];
        sd(m, i) = spec.mix_stds[m * d + i];
      }
    }
    return std::make_unique<GaussianMixturePosteriorModel>(w, mu, sd, spec.obs_std);
  }
  throw ConfigError("unknown model kind '" + spec.kind + "'");
}

}  // namespace mib
