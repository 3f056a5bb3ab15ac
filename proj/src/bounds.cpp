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

#include "mib/bounds.hpp"

#include <cmath>

namespace mib {

namespace {

EstimatorMeta meta_for(const char* name, int K, std::uint64_t seed) {
  EstimatorMeta m;
  m.estimator = name;
  m.K = K;
  m.T = 1;
  m.seed = seed;
  return m;
}

DecomposedBound finalize_decomposition(const std::vector<double>& ba,
                                       const std::vector<double>& contrast) {
  DecomposedBound d;
  const MeanSE mb = mean_and_se(ba);
  const MeanSE mc = mean_and_se(contrast);
  d.ba_term = mb.mean;
  d.contrastive_term = mc.mean;
  d.total = mb.mean + mc.mean;
  d.contrastive_se = mc.std_error;
  return d;
}

}  // namespace

BoundEstimate ba_lower(const JointModel& model, const Proposal& q,
                       std::int64_t n, std::uint64_t seed, const McOptions& opt) {
  model.require(kSampleJoint, "ba_lower");
  model.require(kLogpPrior, "ba_lower");
  std::vector<double> vals(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    vals[i] = q.log_density(x, z) - model.log_prior(z);
  });
  return finalize_estimate(vals, Direction::kLowerMI, /*stochastic=*/true,
                           meta_for("ba_lower", 1, seed));
}

BoundEstimate ba_upper(const JointModel& model, const Proposal& q,
                       std::int64_t n, std::uint64_t seed, const McOptions& opt) {
  model.require(kSampleJoint, "ba_upper");
  model.require(kLogpLikelihood, "ba_upper");
  std::vector<double> vals(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    // -H(x|z) term from the joint draw plus the reverse-direction term from
    // a proposal draw at the same x.
    const double cond = model.log_likelihood(x, z);
    VectorXd zq = q.sample(x, rng);
    vals[i] = cond + q.log_density(x, zq) - model.log_joint(x, zq);
  });
  return finalize_estimate(vals, Direction::kUpperMI, /*stochastic=*/true,
                           meta_for("ba_upper", 1, seed));
}

std::pair<BoundEstimate, DecomposedBound> iwae_lower_mi(
    const JointModel& model, const Proposal& q, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt) {
  if (K < 1) throw ParameterError("iwae_lower_mi: K must be >= 1");
  model.require(kSampleJoint, "iwae_lower_mi");
  model.require(kLogpLikelihood, "iwae_lower_mi");
  std::vector<double> ba(n), contrast(n), total(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    VectorXd logw(K);
    logw[0] = model.log_joint(x, z) - q.log_density(x, z);
    for (int k = 1; k < K; ++k) {
      RngStream slot = rng.child(static_cast<std::uint64_t>(k));
      VectorXd zk = q.sample(x, slot);
      logw[k] = model.log_joint(x, zk) - q.log_density(x, zk);
    }
    ba[i] = q.log_density(x, z) - model.log_prior(z);
    contrast[i] = logw[0] - log_mean_exp(logw);
    total[i] = ba[i] + contrast[i];
  });
  BoundEstimate est = finalize_estimate(total, Direction::kLowerMI, true,
                                        meta_for("iwae_lower", K, seed));
  return {est, finalize_decomposition(ba, contrast)};
}

BoundEstimate iwae_upper_mi(const JointModel& model, const Proposal& q, int K,
                            std::int64_t n, std::uint64_t seed,
                            const McOptions& opt) {
  if (K < 1) throw ParameterError("iwae_upper_mi: K must be >= 1");
  model.require(kSampleJoint, "iwae_upper_mi");
  model.require(kLogpLikelihood, "iwae_upper_mi");
  std::vector<double> vals(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    const double cond = model.log_likelihood(x, z);
    VectorXd logw(K);
    for (int k = 0; k < K; ++k) {
      RngStream slot = rng.child(static_cast<std::uint64_t>(k + 1));
      VectorXd zk = q.sample(x, slot);
      logw[k] = model.log_joint(x, zk) - q.log_density(x, zk);
    }
    vals[i] = cond - log_mean_exp(logw);
  });
  return finalize_estimate(vals, Direction::kUpperMI, true,
                           meta_for("iwae_upper", K, seed));
}

std::pair<BoundEstimate, BoundEstimate> riwae_bounds(
    const JointModel& model, const Proposal& q, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt) {
  if (K < 1) throw ParameterError("riwae_bounds: K must be >= 1");
  model.require(kSampleJoint, "riwae_bounds");
  model.require(kLogpLikelihood, "riwae_bounds");
  model.require(kExactPosteriorSample, "riwae_bounds");
  std::vector<double> lower(n), upper(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    const double cond = model.log_likelihood(x, z);
    // Upper bound on log p(x): K posterior samples (the joint draw plus
    // K-1 extra, which is why the estimator is flagged impractical).
    VectorXd neg_logw(K);
    neg_logw[0] = q.log_density(x, z) - model.log_joint(x, z);
    for (int k = 1; k < K; ++k) {
      RngStream slot = rng.child(static_cast<std::uint64_t>(k));
      VectorXd zk = model.sample_posterior(x, slot);
      neg_logw[k] = q.log_density(x, zk) - model.log_joint(x, zk);
    }
    const double upper_logz = -log_mean_exp(neg_logw);
    // Lower bound on log p(x): one proposal sample, K-1 posterior samples.
    VectorXd neg_logw_l(K);
    {
      RngStream slot = rng.child(0, 1);
      VectorXd z1 = q.sample(x, slot);
      neg_logw_l[0] = q.log_density(x, z1) - model.log_joint(x, z1);
    }
    for (int k = 1; k < K; ++k) {
      RngStream slot = rng.child(static_cast<std::uint64_t>(k), 1);
      VectorXd zk = model.sample_posterior(x, slot);
      neg_logw_l[k] = q.log_density(x, zk) - model.log_joint(x, zk);
    }
    const double lower_logz = -log_mean_exp(neg_logw_l);
    lower[i] = cond - upper_logz;   // lower bound on MI
    upper[i] = cond - lower_logz;   // upper bound on MI
  });
  EstimatorMeta ml = meta_for("riwae", K, seed);
  ml.note = "impractical: consumes multiple posterior samples";
  EstimatorMeta mu = ml;
  BoundEstimate lo = finalize_estimate(lower, Direction::kLowerMI, true, ml);
  BoundEstimate hi = finalize_estimate(upper, Direction::kUpperMI, true, mu);
  return {lo, hi};
}

std::pair<BoundEstimate, DecomposedBound> giwae_lower(
    const JointModel& model, const Proposal& q, const Critic& critic, int K,
    std::int64_t n, std::uint64_t seed, const McOptions& opt) {
  if (K < 1) throw ParameterError("giwae_lower: K must be >= 1");
  model.require(kSampleJoint, "giwae_lower");
  model.require(kLogpPrior, "giwae_lower");
  std::vector<double> ba(n), contrast(n), total(n);
  run_draws(n, opt.exec, [&](std::int64_t i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    VectorXd x, z;
    model.sample_joint(rng, x, z);
    VectorXd logits(K);
    logits[0] = critic.eval(x, z);
    for (int k = 1; k < K; ++k) {
      RngStream slot = rng.child(static_cast<std::uint64_t>(k));
      VectorXd zk = q.sample(x, slot);
      logits[k] = critic.eval(x, zk);
    }
    ba[i] = q.log_density(x, z) - model.log_prior(z);
    contrast[i] = logits[0] - log_mean_exp(logits);
    total[i] = ba[i] + contrast[i];
  });
  BoundEstimate est = finalize_estimate(total, Direction::kLowerMI, true,
                                        meta_for("giwae", K, seed));
  return {est, finalize_decomposition(ba, contrast)};
}

std::pair<BoundEstimate, DecomposedBound> infonce_lower(
    const JointModel& model, const Critic& critic, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt) {
  PriorProposal prior(model);
  auto result = giwae_lower(model, prior, critic, K, n, seed, opt);
  result.first.meta.estimator = "infonce";
  return result;
}

std::pair<BoundEstimate, DecomposedBound> structured_infonce_lower(
    const JointModel& model, int K, std::int64_t n, std::uint64_t seed,
    const McOptions& opt) {
  PriorProposal prior(model);
  auto result = iwae_lower_mi(model, prior, K, n, seed, opt);
  result.first.meta.estimator = "s_infonce";
  return result;
}

BoundEstimate structured_infonce_upper(const JointModel& model, int K,
                                       std::int64_t n, std::uint64_t seed,
                                       const McOptions& opt) {
  PriorProposal prior(model);
  BoundEstimate est = iwae_upper_mi(model, prior, K, n, seed, opt);
  est.meta.estimator = "s_infonce_upper";
  return est;
}

}  // namespace mib
