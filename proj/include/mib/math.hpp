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

#ifndef MIB_MATH_HPP
#define MIB_MATH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mib/error.hpp"

namespace mib {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Max-subtracted log(sum_i exp(v_i)).  Safe for |v_i| <= ~700 and for -inf
// entries; returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

inline double log_mean_exp(std::span<const double> v) {
  if (v.empty()) throw ParameterError("log_mean_exp: empty input");
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

inline double log_mean_exp(const Eigen::VectorXd& v) {
  return log_mean_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Inverse-CDF sample from a categorical given by probabilities, using one
// uniform.  Exact ties in the cumulative sum resolve toward the lower index.
inline Eigen::Index categorical_sample(const Eigen::VectorXd& probs, double u) {
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // Guard against cum < 1 from rounding: last index with nonzero mass.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i)
    if (probs[i] > 0.0) return i;
  throw DomainError("categorical_sample: all-zero probability vector");
}

// Same, from unnormalized log-weights (the SNIS case).
inline Eigen::Index categorical_sample_log(const Eigen::VectorXd& logw, double u) {
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse)) throw DomainError("categorical_sample_log: degenerate weights");
  Eigen::VectorXd probs = (logw.array() - lse).exp();
  return categorical_sample(probs, u);
}

struct MeanSE {
  double mean = 0.0;
  double std_error = 0.0;  // sample std of realizations / sqrt(n)
  std::int64_t n = 0;
};

// Two-pass mean and standard error over per-draw realizations.  The pass
// order is fixed so results do not depend on how draws were scheduled.
inline MeanSE mean_and_se(std::span<const double> xs) {
  MeanSE out;
  out.n = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - out.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

inline MeanSE mean_and_se(const std::vector<double>& xs) {
  return mean_and_se(std::span<const double>(xs.data(), xs.size()));
}

// Ordinary least squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ParameterError("ols_slope: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

inline void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string("non-finite input: ") + what);
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite input: ") + what);
}

}  // namespace mib

#endif  // MIB_MATH_HPP
