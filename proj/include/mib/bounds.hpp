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

#ifndef MIB_BOUNDS_HPP
#define MIB_BOUNDS_HPP

#include <utility>

#include "mib/estimate.hpp"
#include "mib/model.hpp"
#include "mib/variational.hpp"

namespace mib {

// Non-MCMC bounds on mutual information.  Per-draw RNG layout is shared
// across estimators: draw i uses stream (seed, i), and proposal slot k >= 2
// uses its child stream (i, k).  That layout is what makes the exact
// reductions (K=1 to BA, constant critic to BA, T=1 AIS to IWAE) hold
// value-for-value on a shared seed, not just in expectation.

struct McOptions {
  Exec exec = Exec::kParallel;
};

// Barber-Agakov bounds.  The lower bound needs only log p(z); the upper
// bound additionally evaluates log p(x|z) under the model.
BoundEstimate ba_lower(const JointModel& model, const Proposal& q,
                       std::int64_t n, std::uint64_t seed,
                       const McOptions& opt = {});
BoundEstimate ba_upper(const JointModel& model, const Proposal& q,
                       std::int64_t n, std::uint64_t seed,
                       const McOptions& opt = {});

// Importance-weighted bounds with K proposal samples.  The MI lower bound
// mixes the single posterior sample from the joint draw with K-1 fresh
// proposal samples; the upper bound uses K fresh proposal samples.
std::pair<BoundEstimate, DecomposedBound> iwae_lower_mi(
    const JointModel& model, const Proposal& q, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt = {});
BoundEstimate iwae_upper_mi(const JointModel& model, const Proposal& q, int K,
                            std::int64_t n, std::uint64_t seed,
                            const McOptions& opt = {});

// Reverse importance sampling over K posterior samples (impractical; needs
// exact posterior sampling).  Returns (lower_mi, upper_mi).
std::pair<BoundEstimate, BoundEstimate> riwae_bounds(
    const JointModel& model, const Proposal& q, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt = {});

// Contrastive lower bound with a learned critic in place of the true
// importance weights.  Constant critic or K=1 reduce exactly to ba_lower.
std::pair<BoundEstimate, DecomposedBound> giwae_lower(
    const JointModel& model, const Proposal& q, const Critic& critic, int K,
    std::int64_t n, std::uint64_t seed, const McOptions& opt = {});

// InfoNCE = GIWAE with the prior as proposal; Structured InfoNCE = IWAE with
// the prior as proposal.
std::pair<BoundEstimate, DecomposedBound> infonce_lower(
    const JointModel& model, const Critic& critic, int K, std::int64_t n,
    std::uint64_t seed, const McOptions& opt = {});
std::pair<BoundEstimate, DecomposedBound> structured_infonce_lower(
    const JointModel& model, int K, std::int64_t n, std::uint64_t seed,
    const McOptions& opt = {});
BoundEstimate structured_infonce_upper(const JointModel& model, int K,
                                       std::int64_t n, std::uint64_t seed,
                                       const McOptions& opt = {});

}  // namespace mib

#endif  // MIB_BOUNDS_HPP
