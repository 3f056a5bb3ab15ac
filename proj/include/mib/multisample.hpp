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

#ifndef MIB_MULTISAMPLE_HPP
#define MIB_MULTISAMPLE_HPP

#include "mib/ais.hpp"
#include "mib/bounds.hpp"

namespace mib {

enum class KernelKind { kHmc, kPerfect };

struct AisConfig {
  ScheduleKind schedule = ScheduleKind::kLinear;
  int T = 1;
  KernelKind kernel = KernelKind::kHmc;
  int leapfrog = 20;
  double step_size = 0.1;
  bool adapt = true;  // HMC warmup step-size tuning, frozen before weighted runs
  int warmup_rounds = 3;
  int warmup_chains = 8;
  double target_accept = 0.65;
  Exec exec = Exec::kParallel;
};

// Both log-partition bounds from one run plus their MI translations (the
// conditional term comes from the same joint draws).
struct MiSandwich {
  BoundEstimate lower_logz, upper_logz;  // bounds on E_x log p(x)
  BoundEstimate lower_mi, upper_mi;
  double accept_rate = 1.0;
  std::int64_t divergences = 0;
  std::int64_t divergent_weights = 0;
  double tuned_accept = 1.0;
  bool tuning_failure = false;
};

// Single-chain annealed bounds (the K = 1 case every variant reduces to).
MiSandwich ais_mi(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, std::int64_t n, std::uint64_t seed);

// K independent forward chains for the lower log Z bound; one backward chain
// from the joint draw's posterior sample plus K-1 forward chains for the
// upper.  Reduces to IWAE at T=1 and to single-chain annealing at K=1,
// exactly, on shared seeds.
MiSandwich im_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed);

// Reverse variant with K independent backward chains (impractical: consumes
// K posterior samples per draw).  Reduces to reverse IWAE at T=1.
MiSandwich ir_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed);

// Coupled reverse variant: K backward chains share a single starting state,
// either the joint draw's posterior sample (upper log Z) or the endpoint of
// one forward chain (lower log Z).  Practical at every K.
MiSandwich cr_ais(const JointModel& model, const Proposal& base,
                  const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed);

// Bidirectional pairing: the independent-chain lower bound with the coupled
// reverse upper bound, exactly as produced by the two constituents.
MiSandwich bdmc(const JointModel& model, const Proposal& base,
                const AisConfig& cfg, int K, std::int64_t n, std::uint64_t seed);

}  // namespace mib

#endif  // MIB_MULTISAMPLE_HPP
