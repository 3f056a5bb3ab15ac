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

#ifndef MIB_ENUMERATE_HPP
#define MIB_ENUMERATE_HPP

#include <vector>

#include "mib/model.hpp"
#include "mib/variational.hpp"

namespace mib {

// Exact expectations of every estimator on enumerable models: no sampling,
// pure sums over the finite outcome space.  These are the oracles the Monte
// Carlo estimators are checked against.  All MI-direction values are the
// estimator's exact expectation in nats.
//
// Requests whose outcome product exceeds the term budget throw SizeError.

MatrixXd tabulate_proposal(const DiscreteJoint& model, const Proposal& q);
MatrixXd tabulate_critic(const DiscreteJoint& model, const Critic& critic);

double enum_ba_lower(const DiscreteJoint& model, const MatrixXd& q);
double enum_ba_upper(const DiscreteJoint& model, const MatrixXd& q);
double enum_iwae_lower(const DiscreteJoint& model, const MatrixXd& q, int K);
double enum_iwae_upper(const DiscreteJoint& model, const MatrixXd& q, int K);
double enum_riwae_lower(const DiscreteJoint& model, const MatrixXd& q, int K);
double enum_riwae_upper(const DiscreteJoint& model, const MatrixXd& q, int K);
double enum_giwae_lower(const DiscreteJoint& model, const MatrixXd& q,
                        const MatrixXd& critic, int K);

// GIWAE exact value for large K via multinomial enumeration of the negative
// sample counts; needs a small latent alphabet rather than small K.
double enum_giwae_lower_counts(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic, int K);

// Gap between the true-weight and critic-weight index posteriors:
// iwae_lower - giwae_lower, as an explicit expected KL.
double enum_index_kl_gap(const DiscreteJoint& model, const MatrixXd& q,
                         const MatrixXd& critic, int K);

// E_x KL(p(z|x) || q(z|x)): the BA-lower gap and the cap on the energy-based
// contrastive term.
double enum_posterior_kl(const DiscreteJoint& model, const MatrixXd& q);

double enum_mine_dv(const DiscreteJoint& model, const MatrixXd& q,
                    const MatrixXd& critic);
double enum_mine_f(const DiscreteJoint& model, const MatrixXd& q,
                   const MatrixXd& critic);
double enum_ibal(const DiscreteJoint& model, const MatrixXd& q,
                 const MatrixXd& critic);
// KL(p(x) || pi(x)) where pi(x) is the energy-tilted joint's x-marginal;
// equals enum_ibal - enum_mine_dv exactly.
double enum_energy_marginal_kl(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic);
// Exact gradient of enum_ibal in the critic table entries.
MatrixXd enum_ibal_critic_grad(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic);

// Annealed-bound enumeration under perfect transitions with the project's
// weight convention.  Values are the exact expectations of the corresponding
// Monte Carlo estimators run with the perfect kernel.
enum class AisVariant { kSingle, kIm, kIr, kCr };

struct EnumAisResult {
  double lower_logz = 0.0;  // E_x of the lower bound realization
  double upper_logz = 0.0;
  double lower_mi = 0.0;
  double upper_mi = 0.0;
};

EnumAisResult enum_ais(const DiscreteJoint& model, const MatrixXd& q,
                       const std::vector<double>& betas, AisVariant variant,
                       int K);

// Generic string-keyed entry point used by the CLI selftest and config files.
struct EnumBoundSpec {
  std::string estimator;  // ba_lower, iwae_lower, giwae, mine_dv, ibal, ais, ...
  int K = 1;
  int T = 1;
};
double enumerate_bound(const DiscreteJoint& model, const MatrixXd& q,
                       const MatrixXd* critic, const EnumBoundSpec& spec);

}  // namespace mib

#endif  // MIB_ENUMERATE_HPP
