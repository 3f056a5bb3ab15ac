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

#include "mib/multisample.hpp"

#include <atomic>
#include <cmath>

namespace mib {

namespace {

enum class Variant { kSingle, kIm, kIr, kCr };

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kSingle: return "ais";
    case Variant::kIm: return "im_ais";
    case Variant::kIr: return "ir_ais";
    case Variant::kCr: return "cr_ais";
  }
  return "?";
}

std::unique_ptr<TransitionKernel> make_kernel(const AisConfig& cfg) {
  if (cfg.kernel == KernelKind::kPerfect) return std::make_unique<PerfectKernel>();
  return std::make_unique<HmcKernel>(cfg.leapfrog, cfg.step_size);
}

struct DrawOut {
  double elbo = 0.0, eubo = 0.0;
  double cond = 0.0;
  KernelStats stats;
  int divergent_weights = 0;
};

// Per-draw chain wiring for all variants.  Stream layout (draw stream rng,
// chain slots via rng.child):
//   forward lower-bound chains:   child(1) .. child(K)
//   upper-bound chains:           child(0) .. child(K-1), chain 0 from z*
//   reverse-variant lower side:   forward child(1), posterior starts child(k, 1)
// which lines up slot-for-slot with the static IWAE / reverse-IWAE layouts,
// making the T=1 reductions exact value matches.
DrawOut run_draw(Variant variant, const JointModel& model, const Proposal& base,
                 const std::vector<double>& betas, const TransitionKernel& kernel,
                 int K, std::uint64_t seed, std::int64_t i) {
  DrawOut out;
  RngStream rng(seed, static_cast<std::uint64_t>(i));
  VectorXd x, zstar;
  model.sample_joint(rng, x, zstar);
  out.cond = model.log_likelihood(x, zstar);
  ModelBridge bridge(model, base, x);

  auto account = [&out](const ChainRecord& rec) {
    out.stats += rec.stats;
    if (rec.divergent) ++out.divergent_weights;
    return rec.log_weight;
  };

  switch (variant) {
    case Variant::kSingle: {
      RngStream rf = rng.child(1);
      out.elbo = account(ais_forward(bridge, betas, kernel, rf));
      RngStream rb = rng.child(0);
      out.eubo = account(ais_backward(bridge, betas, kernel, zstar, rb));
      break;
    }
    case Variant::kIm: {
      VectorXd wf(K);
      for (int k = 0; k < K; ++k) {
        RngStream rc = rng.child(static_cast<std::uint64_t>(k + 1));
        wf[k] = account(ais_forward(bridge, betas, kernel, rc));
      }
      out.elbo = log_mean_exp(wf);
      VectorXd wu(K);
      {
        RngStream rc = rng.child(0);
        wu[0] = account(ais_backward(bridge, betas, kernel, zstar, rc));
      }
      for (int k = 1; k < K; ++k) {
        RngStream rc = rng.child(static_cast<std::uint64_t>(k));
        wu[k] = account(ais_forward(bridge, betas, kernel, rc));
      }
      out.eubo = log_mean_exp(wu);
      break;
    }
    case Variant::kIr: {
      // Lower: one forward chain, K-1 backward chains from fresh posterior
      // samples.  Upper: K backward chains (z* plus K-1 fresh).
      VectorXd wl(K);
      {
        RngStream rc = rng.child(1);
        wl[0] = account(ais_forward(bridge, betas, kernel, rc));
      }
      for (int k = 1; k < K; ++k) {
        RngStream rc = rng.child(static_cast<std::uint64_t>(k), 1);
        VectorXd zt = model.sample_posterior(x, rc);
        wl[k] = account(ais_backward(bridge, betas, kernel, zt, rc));
      }
      out.elbo = -log_mean_exp(-wl);
      VectorXd wu(K);
      {
        RngStream rc = rng.child(0);
        wu[0] = account(ais_backward(bridge, betas, kernel, zstar, rc));
      }
      for (int k = 1; k < K; ++k) {
        RngStream rc = rng.child(static_cast<std::uint64_t>(k));
        VectorXd zt = model.sample_posterior(x, rc);
        wu[k] = account(ais_backward(bridge, betas, kernel, zt, rc));
      }
      out.eubo = -log_mean_exp(-wu);
      break;
    }
    case Variant::kCr: {
      // Lower: one forward chain supplies the shared coupling state; K-1
      // backward chains run from it.
      VectorXd wl(K);
      {
        RngStream rc = rng.child(1);
        ChainRecord f = ais_forward(bridge, betas, kernel, rc);
        wl[0] = account(f);
        for (int k = 1; k < K; ++k) {
          RngStream rb = rng.child(static_cast<std::uint64_t>(k + 1));
          wl[k] = account(ais_backward(bridge, betas, kernel, f.final_state, rb));
        }
      }
      out.elbo = -log_mean_exp(-wl);
      // Upper: K backward chains all from the single posterior sample z*.
      VectorXd wu(K);
      for (int k = 0; k < K; ++k) {
        RngStream rc = rng.child(static_cast<std::uint64_t>(k));
        wu[k] = account(ais_backward(bridge, betas, kernel, zstar, rc));
      }
      out.eubo = -log_mean_exp(-wu);
      break;
    }
  }
  return out;
}

MiSandwich run_variant(Variant variant, const JointModel& model,
                       const Proposal& base, const AisConfig& cfg, int K,
                       std::int64_t n, std::uint64_t seed) {
  if (K < 1) throw ParameterError("multisample ais: K must be >= 1");
  if (cfg.T < 1) throw ParameterError("multisample ais: T must be >= 1");
  model.require(kSampleJoint, "multisample ais");
  model.require(kLogpPrior, "multisample ais");
  model.require(kLogpLikelihood, "multisample ais");
  // All lower-MI directions consume the draw's posterior sample; the reverse
  // variants additionally draw fresh ones.
  model.require(kExactPosteriorSample, "multisample ais (posterior-side chains)");

  const std::vector<double> betas = make_schedule(cfg.schedule, cfg.T);
  auto kernel = make_kernel(cfg);

  MiSandwich result;
  if (cfg.kernel == KernelKind::kHmc && cfg.adapt && cfg.T >= 2) {
    // Tune once on the first draw's x and freeze; posterior geometry is
    // x-stationary for the models in scope.
    RngStream peek(seed, 0);
    VectorXd x0, z0;
    model.sample_joint(peek, x0, z0);
    ModelBridge bridge0(model, base, x0);
    auto* hmc = static_cast<HmcKernel*>(kernel.get());
    AdaptResult ar = adapt_step_size(bridge0, betas, *hmc, cfg.target_accept,
                                     cfg.warmup_rounds, cfg.warmup_chains, seed);
    result.tuned_accept = ar.realized_accept;
    result.tuning_failure = ar.tuning_failure;
  }

  std::vector<double> elbo(n), eubo(n), mi_lo(n), mi_hi(n);
  std::vector<KernelStats> stats(n);
  std::vector<int> divw(n);
  run_draws(n, cfg.exec, [&](std::int64_t i) {
    DrawOut d = run_draw(variant, model, base, betas, *kernel, K, seed, i);
    elbo[i] = d.elbo;
    eubo[i] = d.eubo;
    mi_hi[i] = d.cond - d.elbo;
    mi_lo[i] = d.cond - d.eubo;
    stats[i] = d.stats;
    divw[i] = d.divergent_weights;
  });

  EstimatorMeta meta;
  meta.estimator = variant_name(variant);
  meta.K = K;
  meta.T = cfg.T;
  meta.seed = seed;
  result.lower_logz = finalize_estimate(elbo, Direction::kLowerLogZ, true, meta);
  result.upper_logz = finalize_estimate(eubo, Direction::kUpperLogZ, true, meta);
  result.upper_mi = finalize_estimate(mi_hi, Direction::kUpperMI, true, meta);
  result.lower_mi = finalize_estimate(mi_lo, Direction::kLowerMI, true, meta);
  KernelStats total;
  for (const auto& s : stats) total += s;
  std::int64_t dw = 0;
  for (int d : divw) dw += d;
  result.accept_rate = total.accept_rate();
  result.divergences = total.divergences;
  result.divergent_weights = dw;
  return result;
}

}  // namespace

MiSandwich ais_mi(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, std::int64_t n, std::uint64_t seed) {
  return run_variant(Variant::kSingle, model, base, cfg, 1, n, seed);
}

MiSandwich im_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed) {
  return run_variant(Variant::kIm, model, base, cfg, K, n, seed);
}

MiSandwich ir_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed) {
  return run_variant(Variant::kIr, model, base, cfg, K, n, seed);
}

MiSandwich cr_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed) {
  return run_variant(Variant::kCr, model, base, cfg, K, n, seed);
}

MiSandwich bdmc(const JointModel& model, const Proposal& base,
                const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed) {
  MiSandwich im = im_ais(model, base, cfg, K, n, seed);
  MiSandwich cr = cr_ais(model, base, cfg, K, n, seed);
  MiSandwich out;
  out.lower_logz = im.lower_logz;
  out.upper_logz = cr.upper_logz;
  out.upper_mi = im.upper_mi;
  out.lower_mi = cr.lower_mi;
  out.lower_logz.meta.estimator = "bdmc";
  out.upper_logz.meta.estimator = "bdmc";
  out.upper_mi.meta.estimator = "bdmc";
  out.lower_mi.meta.estimator = "bdmc";
  out.accept_rate = 0.5 * (im.accept_rate + cr.accept_rate);
  out.divergences = im.divergences + cr.divergences;
  out.divergent_weights = im.divergent_weights + cr.divergent_weights;
  out.tuned_accept = im.tuned_accept;
  out.tuning_failure = im.tuning_failure || cr.tuning_failure;
  return out;
}

}  // namespace mib
