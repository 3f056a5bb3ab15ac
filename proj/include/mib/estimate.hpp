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

#ifndef MIB_ESTIMATE_HPP
#define MIB_ESTIMATE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mib/math.hpp"
#include "mib/rng.hpp"

namespace mib {

enum class Direction { kLowerMI, kUpperMI, kLowerLogZ, kUpperLogZ };

const char* direction_name(Direction d);

enum class EstimateStatus { kOk, kFailed };

struct EstimatorMeta {
  std::string estimator;
  int K = 1;
  int T = 1;
  std::uint64_t seed = 0;
  std::string note;
};

// One estimator output: a Monte Carlo mean over outer draws with its
// per-draw standard error.  `stochastic` marks bounds that hold only in
// expectation, not per realization.
struct BoundEstimate {
  double value = 0.0;
  double std_error = 0.0;
  Direction direction = Direction::kLowerMI;
  bool stochastic = true;
  std::int64_t n_outer = 0;
  EstimatorMeta meta;
  EstimateStatus status = EstimateStatus::kOk;
  std::string failure_reason;

  bool ok() const { return status == EstimateStatus::kOk; }
};

// Additive split of a multi-sample lower bound into its variational term and
// its contrastive term; total == ba_term + contrastive_term on the same draws.
struct DecomposedBound {
  double ba_term = 0.0;
  double contrastive_term = 0.0;
  double total = 0.0;
  double contrastive_se = 0.0;
};

// Serial reference or OpenMP execution of the outer-draw loop.  Results are
// identical under either policy (and any thread count): draw i derives its
// own stream and writes slot i, and the reduction runs in index order.
enum class Exec { kSerial, kParallel };

// fn(i, out_row) fills per-draw outputs; out has n rows pre-sized by caller.
void run_draws(std::int64_t n, Exec exec,
               const std::function<void(std::int64_t)>& fn);

BoundEstimate finalize_estimate(const std::vector<double>& per_draw,
                                Direction dir, bool stochastic,
                                EstimatorMeta meta);

}  // namespace mib

#endif  // MIB_ESTIMATE_HPP
