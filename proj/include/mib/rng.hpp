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

#ifndef MIB_RNG_HPP
#define MIB_RNG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace mib {

// Counter-derivable random stream: xoshiro256** seeded through SplitMix64.
//
// Streams are addressed by (seed, id0, id1, id2).  Deriving the same address
// twice yields bit-identical draws, which is what makes estimator results
// independent of thread scheduling: every outer draw / chain owns the stream
// derived from its index, never a shared generator.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t id0 = 0,
                     std::uint64_t id1 = 0, std::uint64_t id2 = 0) {
    std::uint64_t h = seed;
    h = splitmix(h ^ (0x9e3779b97f4a7c15ULL + id0));
    h = splitmix(h ^ (0xbf58476d1ce4e5b9ULL + id1));
    h = splitmix(h ^ (0x94d049bb133111ebULL + id2));
    for (auto& word : state_) {
      h = splitmix(h);
      word = h;
    }
    have_cached_normal_ = false;
    cached_normal_ = 0.0;
  }

  // Child stream addressed relative to this one.  Used for per-chain streams
  // inside an outer draw.
  RngStream child(std::uint64_t id0, std::uint64_t id1 = 0) const {
    return RngStream(state_[0] ^ rotl(state_[2], 17), id0, id1, state_[3]);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; positive, so log() is always finite.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_normal_ = radius * std::sin(angle);
    have_cached_normal_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  void fill_normal(Eigen::Ref<Eigen::MatrixXd> out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal();
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool have_cached_normal_;
  double cached_normal_;
};

}  // namespace mib

#endif  // MIB_RNG_HPP
