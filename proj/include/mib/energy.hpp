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

#ifndef MIB_ENERGY_HPP
#define MIB_ENERGY_HPP

#include <functional>

#include "mib/enumerate.hpp"
#include "mib/multisample.hpp"

namespace mib {

// Energy-tilted posterior approximation pi(z|x) = q(z|x) e^{T(x,z)} / Z(x).
// With a constant critic it collapses to q exactly, and Z(x) = e^c.
struct EnergyPosterior {
  const Proposal* base = nullptr;
  const Critic* critic = nullptr;
};

// ---------------------------------------------------------------------------
// Generalized energy-based lower bounds on MI.  With q = p(z) these are the
// standard single-marginal estimators; the base term then vanishes.

// value = BA(q) + E_joint[T] - log E_{p(x) q}[e^T].  The log-partition term is
// a single batch log-mean-exp, so the Monte Carlo value is a consistent but
// per-batch-biased estimate; its standard error combines the two pieces by
// the delta method.
BoundEstimate mine_dv(const JointModel& model, const Proposal& q,
                      const Critic& critic, std::int64_t n, std::uint64_t seed,
                      const McOptions& opt = {});
// value = BA(q) + E_joint[T] - E_{p(x) q}[e^{T-1}]; linear in expectations.
BoundEstimate mine_f(const JointModel& model, const Proposal& q,
                     const Critic& critic, std::int64_t n, std::uint64_t seed,
                     const McOptions& opt = {});

// Exact implicit bound on enumerable models (BA of the energy-tilted
// posterior, with the log partition function summed exactly).
inline double ibal_value_exact(const DiscreteJoint& model, const MatrixXd& q_table,
                               const MatrixXd& critic_table) {
  return enum_ibal(model, q_table, critic_table);
}

// ---------------------------------------------------------------------------
// Energy-based critic training with posterior-initialized MCMC negatives.

struct MineAisTrainConfig {
  int steps = 5000;
  int batch = 64;
  int mcmc_steps = 10;      // M: transitions per negative sample
  int leapfrog = 20;        // L
  double step_size = 0.05;  // HMC step size for the negative chains
  double lr = 1e-4;
  bool train_base = false;  // also update q via its score-difference gradient
  std::uint64_t seed = 1;
  int monitor_every = 0;    // 0 disables
  std::function<void(int step, const MlpCritic& critic)> monitor;
};

struct TrainState {
  std::vector<double> loss_curve;  // E_pos[T] - E_neg[T] per step
  std::int64_t divergences = 0;
  std::int64_t skipped_batches = 0;
  double final_accept = 0.0;
  int steps_run = 0;
};

// Gradient ascent on the implicit bound: grad_phi = E_pos[dT] - E_neg[dT],
// negatives produced by M HMC steps targeting q(z|x) e^{T(x,z)} initialized
// at the draw's posterior sample.  M = 0 makes the gradient identically zero.
TrainState train_mine_ais(const JointModel& model, const Proposal& q,
                          MlpCritic& critic, const MineAisTrainConfig& cfg,
                          ConditionalGaussian* trainable_base = nullptr);

// ---------------------------------------------------------------------------
// Annealed evaluation of the implicit bound.  The bridge runs from q(z|x) to
// q(z|x) e^{T(x,z)}; the log ratio at every rung is the critic value itself.

enum class IbalEvalMode { kUpper, kApproxLower };

struct IbalEvalConfig {
  int T = 1000;
  int K = 8;
  ScheduleKind schedule = ScheduleKind::kLinear;
  int leapfrog = 20;
  double step_size = 0.05;
  bool adapt = true;
  int warmup_rounds = 3;
  int warmup_chains = 8;
  double target_accept = 0.65;
};

struct IbalEvalResult {
  BoundEstimate estimate;
  double accept_rate = 1.0;
  std::int64_t divergences = 0;
  double tuned_accept = 1.0;
  bool tuning_failure = false;
};

// kUpper: lower-bounds log Z(x) with K independent forward chains (a true
// stochastic upper bound on the implicit bound).  kApproxLower: upper-bounds
// log Z(x) with K coupled backward chains initialized at the draw's true
// posterior sample; exact when the critic is optimal, approximate otherwise,
// and always marked as approximate in the output.  At T = 1 the approximate
// lower mode collapses to ba_lower(q) value-for-value.
IbalEvalResult eval_ibal_ais(const JointModel& model, const Proposal& q,
                             const Critic& critic, IbalEvalMode mode,
                             const IbalEvalConfig& cfg, std::int64_t n,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stochastic-gradient training of the static contrastive/energy objectives.

enum class BoundObjective { kBa, kGiwae, kInfoNce, kMineDv, kMineF };

struct BoundTrainConfig {
  int steps = 2000;
  int batch = 64;
  int K = 100;           // contrastive sample count (giwae / infonce)
  double lr = 1e-3;
  std::uint64_t seed = 1;
  // "joint" trains (q, critic) together; "staged" pre-trains q on the BA
  // objective for stage_steps, freezes it, then trains the critic alone.
  std::string schedule = "joint";
  int stage_steps = 1000;
  bool train_q = true;   // ignored for infonce (q pinned to the prior)
};

TrainState train_bound(BoundObjective objective, const JointModel& model,
                       ConditionalGaussian* q, MlpCritic* critic,
                       const BoundTrainConfig& cfg);

}  // namespace mib

#endif  // MIB_ENERGY_HPP
