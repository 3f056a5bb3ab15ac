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

#include "mib/estimate.hpp"

#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mib {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kLowerMI: return "lower_mi";
    case Direction::kUpperMI: return "upper_mi";
    case Direction::kLowerLogZ: return "lower_logz";
    case Direction::kUpperLogZ: return "upper_logz";
  }
  return "?";
}

void run_draws(std::int64_t n, Exec exec,
               const std::function<void(std::int64_t)>& fn) {
  if (exec == Exec::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) fn(i);
#else
  for (std::int64_t i = 0; i < n; ++i) fn(i);
#endif
}

BoundEstimate finalize_estimate(const std::vector<double>& per_draw,
                                Direction dir, bool stochastic,
                                EstimatorMeta meta) {
  BoundEstimate est;
  const MeanSE ms = mean_and_se(per_draw);
  est.value = ms.mean;
  est.std_error = ms.std_error;
  est.direction = dir;
  est.stochastic = stochastic;
  est.n_outer = ms.n;
  est.meta = std::move(meta);
  if (!std::isfinite(est.value)) {
    est.status = EstimateStatus::kFailed;
    est.failure_reason = "non-finite estimate";
  }
  return est;
}

}  // namespace mib
