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

#include "mib/enumerate.hpp"

#include <cmath>
#include <functional>

#include "mib/math.hpp"

namespace mib {

namespace {

constexpr double kTermBudget = 1e7;

void check_budget(double terms) {
  if (terms > kTermBudget)
    throw SizeError("enumeration outcome space exceeds the term budget");
}

// E[fn(indices)] over a product of categoricals, walked with an odometer so
// the recursion depth never grows with the slot count.
double expect_product(const std::vector<const VectorXd*>& slots,
                      const std::function<double(const std::vector<int>&)>& fn) {
  double terms = 1.0;
  for (const auto* s : slots) terms *= static_cast<double>(s->size());
  check_budget(terms);
  const int S = static_cast<int>(slots.size());
  std::vector<int> idx(S, 0);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (int s = 0; s < S; ++s) w *= (*slots[s])[idx[s]];
    if (w > 0.0) acc += w * fn(idx);
    int s = S - 1;
    while (s >= 0) {
      if (++idx[s] < slots[s]->size()) break;
      idx[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
  return acc;
}

struct XContext {
  int ix = 0;
  double px = 0.0;
  VectorXd post;        // p(z | x)
  VectorXd qrow;        // q(z | x)
  VectorXd log_joint;   // log p(x, z)
  VectorXd log_q;       // log q(z | x)
  VectorXd log_lik;     // log p(x | z)
  VectorXd log_w;       // log p(x,z) - log q(z|x)
};

std::vector<XContext> contexts(const DiscreteJoint& model, const MatrixXd& q) {
  if (q.rows() != model.nx() || q.cols() != model.nz())
    throw DimensionError("proposal table shape != model alphabet");
  std::vector<XContext> out;
  out.reserve(static_cast<std::size_t>(model.nx()));
  for (int i = 0; i < model.nx(); ++i) {
    XContext c;
    c.ix = i;
    c.px = model.x_marginal()[i];
    if (c.px <= 0.0) continue;
    c.post = model.posterior_row(i);
    c.qrow = q.row(i).transpose();
    const int nz = model.nz();
    c.log_joint.resize(nz);
    c.log_q.resize(nz);
    c.log_lik.resize(nz);
    c.log_w.resize(nz);
    for (int j = 0; j < nz; ++j) {
      c.log_joint[j] = std::log(model.table()(i, j));
      c.log_q[j] = std::log(c.qrow[j]);
      c.log_lik[j] = c.log_joint[j] - std::log(model.z_marginal()[j]);
      c.log_w[j] = c.log_joint[j] - c.log_q[j];
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

MatrixXd tabulate_proposal(const DiscreteJoint& model, const Proposal& q) {
  MatrixXd out(model.nx(), model.nz());
  for (int i = 0; i < model.nx(); ++i)
    for (int j = 0; j < model.nz(); ++j)
      out(i, j) = std::exp(
          q.log_density(DiscreteJoint::encode(i), DiscreteJoint::encode(j)));
  return out;
}

MatrixXd tabulate_critic(const DiscreteJoint& model, const Critic& critic) {
  MatrixXd out(model.nx(), model.nz());
  for (int i = 0; i < model.nx(); ++i)
    for (int j = 0; j < model.nz(); ++j)
      out(i, j) = critic.eval(DiscreteJoint::encode(i), DiscreteJoint::encode(j));
  return out;
}

double enum_ba_lower(const DiscreteJoint& model, const MatrixXd& q) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q))
    for (int j = 0; j < model.nz(); ++j) {
      const double pj = c.px * c.post[j];
      if (pj > 0.0) acc += pj * (c.log_q[j] - std::log(model.z_marginal()[j]));
    }
  return acc;
}

double enum_ba_upper(const DiscreteJoint& model, const MatrixXd& q) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    double cond = 0.0, rev = 0.0;
    for (int j = 0; j < model.nz(); ++j) {
      if (c.post[j] > 0.0) cond += c.post[j] * c.log_lik[j];
      if (c.qrow[j] > 0.0) rev += c.qrow[j] * (c.log_q[j] - c.log_joint[j]);
    }
    acc += c.px * (cond + rev);
  }
  return acc;
}

double enum_iwae_lower(const DiscreteJoint& model, const MatrixXd& q, int K) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    std::vector<const VectorXd*> slots;
    slots.push_back(&c.post);
    for (int k = 1; k < K; ++k) slots.push_back(&c.qrow);
    acc += c.px * expect_product(slots, [&](const std::vector<int>& idx) {
      VectorXd lw(K);
      for (int k = 0; k < K; ++k) lw[k] = c.log_w[idx[static_cast<std::size_t>(k)]];
      return c.log_lik[idx[0]] - log_mean_exp(lw);
    });
  }
  return acc;
}

double enum_iwae_upper(const DiscreteJoint& model, const MatrixXd& q, int K) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    double cond = 0.0;
    for (int j = 0; j < model.nz(); ++j)
      if (c.post[j] > 0.0) cond += c.post[j] * c.log_lik[j];
    std::vector<const VectorXd*> slots(static_cast<std::size_t>(K), &c.qrow);
    const double elbo = expect_product(slots, [&](const std::vector<int>& idx) {
      VectorXd lw(K);
      for (int k = 0; k < K; ++k) lw[k] = c.log_w[idx[static_cast<std::size_t>(k)]];
      return log_mean_exp(lw);
    });
    acc += c.px * (cond - elbo);
  }
  return acc;
}

double enum_riwae_lower(const DiscreteJoint& model, const MatrixXd& q, int K) {
  // lower MI: conditional term from the shared posterior slot, minus the
  // upper log-partition bound from K posterior slots.
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    std::vector<const VectorXd*> slots(static_cast<std::size_t>(K), &c.post);
    acc += c.px * expect_product(slots, [&](const std::vector<int>& idx) {
      VectorXd neg(K);
      for (int k = 0; k < K; ++k) neg[k] = -c.log_w[idx[static_cast<std::size_t>(k)]];
      return c.log_lik[idx[0]] + log_mean_exp(neg);
    });
  }
  return acc;
}

double enum_riwae_upper(const DiscreteJoint& model, const MatrixXd& q, int K) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    double cond = 0.0;
    for (int j = 0; j < model.nz(); ++j)
      if (c.post[j] > 0.0) cond += c.post[j] * c.log_lik[j];
    std::vector<const VectorXd*> slots;
    slots.push_back(&c.qrow);
    for (int k = 1; k < K; ++k) slots.push_back(&c.post);
    const double lower_logz =
        expect_product(slots, [&](const std::vector<int>& idx) {
          VectorXd neg(K);
          for (int k = 0; k < K; ++k) neg[k] = -c.log_w[idx[static_cast<std::size_t>(k)]];
          return -log_mean_exp(neg);
        });
    acc += c.px * (cond - lower_logz);
  }
  return acc;
}

double enum_giwae_lower(const DiscreteJoint& model, const MatrixXd& q,
                        const MatrixXd& critic, int K) {
  const double ba = enum_ba_lower(model, q);
  double contrast = 0.0;
  for (const auto& c : contexts(model, q)) {
    std::vector<const VectorXd*> slots;
    slots.push_back(&c.post);
    for (int k = 1; k < K; ++k) slots.push_back(&c.qrow);
    contrast += c.px * expect_product(slots, [&](const std::vector<int>& idx) {
      VectorXd logits(K);
      for (int k = 0; k < K; ++k)
        logits[k] = critic(c.ix, idx[static_cast<std::size_t>(k)]);
      return logits[0] - log_mean_exp(logits);
    });
  }
  return ba + contrast;
}

namespace {

void for_each_composition(int total, int bins,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  std::function<void(int, int)> rec = [&](int bin, int remaining) {
    if (bin == bins - 1) {
      counts[static_cast<std::size_t>(bin)] = remaining;
      fn(counts);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(bin)] = c;
      rec(bin + 1, remaining - c);
    }
  };
  rec(0, total);
}

}  // namespace

double enum_giwae_lower_counts(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic, int K) {
  const double ba = enum_ba_lower(model, q);
  const int nz = model.nz();
  // Composition count C(K-1+nz-1, nz-1) per (x, z1).
  double comps = 1.0;
  for (int b = 1; b < nz; ++b) comps *= static_cast<double>(K - 1 + b) / b;
  check_budget(comps * model.nx() * nz);

  std::vector<double> lgamma_tab(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) lgamma_tab[static_cast<std::size_t>(k)] = std::lgamma(k + 1.0);

  double contrast = 0.0;
  for (const auto& c : contexts(model, q)) {
    VectorXd log_q = c.log_q;
    const double tmax = critic.row(c.ix).maxCoeff();
    VectorXd e_t(nz);
    for (int j = 0; j < nz; ++j) e_t[j] = std::exp(critic(c.ix, j) - tmax);
    for (int j1 = 0; j1 < nz; ++j1) {
      if (c.post[j1] <= 0.0) continue;
      double inner = 0.0;  // E_counts log( (e^{T1} + sum_j c_j e^{Tj}) / K )
      for_each_composition(K - 1, nz, [&](const std::vector<int>& counts) {
        double logp = lgamma_tab[static_cast<std::size_t>(K - 1)];
        double tilted = e_t[j1];
        for (int j = 0; j < nz; ++j) {
          const int cj = counts[static_cast<std::size_t>(j)];
          if (cj > 0) {
            if (c.qrow[j] <= 0.0) { logp = kNegInf; break; }
            logp += cj * log_q[j] - lgamma_tab[static_cast<std::size_t>(cj)];
          }
          tilted += cj * e_t[j];
        }
        if (logp != kNegInf)
          inner += std::exp(logp) * (std::log(tilted) + tmax - std::log(static_cast<double>(K)));
      });
      contrast += c.px * c.post[j1] * (critic(c.ix, j1) - inner);
    }
  }
  return ba + contrast;
}

double enum_index_kl_gap(const DiscreteJoint& model, const MatrixXd& q,
                         const MatrixXd& critic, int K) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q)) {
    std::vector<const VectorXd*> slots;
    slots.push_back(&c.post);
    for (int k = 1; k < K; ++k) slots.push_back(&c.qrow);
    acc += c.px * expect_product(slots, [&](const std::vector<int>& idx) {
      VectorXd lw(K), lt(K);
      for (int k = 0; k < K; ++k) {
        lw[k] = c.log_w[idx[static_cast<std::size_t>(k)]];
        lt[k] = critic(c.ix, idx[static_cast<std::size_t>(k)]);
      }
      const double zw = log_sum_exp(lw);
      const double zt = log_sum_exp(lt);
      double kl = 0.0;
      for (int k = 0; k < K; ++k) {
        const double rho = std::exp(lw[k] - zw);
        if (rho > 0.0) kl += rho * ((lw[k] - zw) - (lt[k] - zt));
      }
      return kl;
    });
  }
  return acc;
}

double enum_posterior_kl(const DiscreteJoint& model, const MatrixXd& q) {
  double acc = 0.0;
  for (const auto& c : contexts(model, q))
    for (int j = 0; j < model.nz(); ++j)
      if (c.post[j] > 0.0)
        acc += c.px * c.post[j] * (std::log(c.post[j]) - c.log_q[j]);
  return acc;
}

namespace {

double enum_joint_expect_critic(const DiscreteJoint& model, const MatrixXd& critic) {
  double acc = 0.0;
  for (int i = 0; i < model.nx(); ++i)
    for (int j = 0; j < model.nz(); ++j)
      acc += model.table()(i, j) * critic(i, j);
  return acc;
}

}  // namespace

double enum_mine_dv(const DiscreteJoint& model, const MatrixXd& q,
                    const MatrixXd& critic) {
  const double ba = enum_ba_lower(model, q);
  const double e_pos = enum_joint_expect_critic(model, critic);
  std::vector<double> terms;
  for (const auto& c : contexts(model, q))
    for (int j = 0; j < model.nz(); ++j)
      if (c.qrow[j] > 0.0)
        terms.push_back(std::log(c.px) + c.log_q[j] + critic(c.ix, j));
  return ba + e_pos - log_sum_exp(std::span<const double>(terms.data(), terms.size()));
}

double enum_mine_f(const DiscreteJoint& model, const MatrixXd& q,
                   const MatrixXd& critic) {
  const double ba = enum_ba_lower(model, q);
  const double e_pos = enum_joint_expect_critic(model, critic);
  double e_exp = 0.0;
  for (const auto& c : contexts(model, q))
    for (int j = 0; j < model.nz(); ++j)
      if (c.qrow[j] > 0.0)
        e_exp += c.px * c.qrow[j] * std::exp(critic(c.ix, j) - 1.0);
  return ba + e_pos - e_exp;
}

namespace {

double enum_log_zx(const XContext& c, const MatrixXd& critic, int nz) {
  VectorXd v(nz);
  for (int j = 0; j < nz; ++j)
    v[j] = c.qrow[j] > 0.0 ? c.log_q[j] + critic(c.ix, j) : kNegInf;
  return log_sum_exp(v);
}

}  // namespace

double enum_ibal(const DiscreteJoint& model, const MatrixXd& q,
                 const MatrixXd& critic) {
  const double ba = enum_ba_lower(model, q);
  const double e_pos = enum_joint_expect_critic(model, critic);
  double e_logz = 0.0;
  for (const auto& c : contexts(model, q))
    e_logz += c.px * enum_log_zx(c, critic, model.nz());
  return ba + e_pos - e_logz;
}

double enum_energy_marginal_kl(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic) {
  std::vector<double> terms;
  double e_logz = 0.0;
  for (const auto& c : contexts(model, q)) {
    const double lzx = enum_log_zx(c, critic, model.nz());
    e_logz += c.px * lzx;
    terms.push_back(std::log(c.px) + lzx);
  }
  const double logz = log_sum_exp(std::span<const double>(terms.data(), terms.size()));
  return logz - e_logz;
}

MatrixXd enum_ibal_critic_grad(const DiscreteJoint& model, const MatrixXd& q,
                               const MatrixXd& critic) {
  MatrixXd grad(model.nx(), model.nz());
  grad.setZero();
  for (const auto& c : contexts(model, q)) {
    const double lzx = enum_log_zx(c, critic, model.nz());
    for (int j = 0; j < model.nz(); ++j) {
      const double pi_j =
          c.qrow[j] > 0.0 ? std::exp(c.log_q[j] + critic(c.ix, j) - lzx) : 0.0;
      grad(c.ix, j) = model.table()(c.ix, j) - c.px * pi_j;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Annealed bounds under perfect transitions.

namespace {

// Normalized intermediate pi_beta(z|x) on the finite support.
VectorXd annealed_row(const XContext& c, double beta, int nz) {
  VectorXd logits(nz);
  for (int j = 0; j < nz; ++j) {
    if (beta >= 1.0) {
      logits[j] = c.log_joint[j];
    } else if (c.qrow[j] <= 0.0) {
      logits[j] = kNegInf;
    } else {
      logits[j] = (1.0 - beta) * c.log_q[j] + beta * c.log_joint[j];
    }
  }
  const double lse = log_sum_exp(logits);
  return (logits.array() - lse).exp();
}

struct ChainSlots {
  // Per-slot distributions and the increment coefficient applied at each.
  std::vector<int> slot_index;         // index into the global slot list
  std::vector<double> coeff;           // delta-beta applied at this slot
};

}  // namespace

EnumAisResult enum_ais(const DiscreteJoint& model, const MatrixXd& q,
                       const std::vector<double>& betas, AisVariant variant,
                       int K) {
  const int T = static_cast<int>(betas.size()) - 1;
  if (T < 1) throw ParameterError("enum_ais: need T >= 1");
  if (K < 1) throw ParameterError("enum_ais: need K >= 1");
  const int nz = model.nz();
  EnumAisResult out;

  for (const auto& c : contexts(model, q)) {
    // Intermediate distributions on the grid.
    std::vector<VectorXd> pis(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) pis[static_cast<std::size_t>(t)] = annealed_row(c, betas[static_cast<std::size_t>(t)], nz);

    double cond = 0.0;
    for (int j = 0; j < nz; ++j)
      if (c.post[j] > 0.0) cond += c.post[j] * c.log_lik[j];

    // Slot lists and per-chain weight assembly for each side of each variant.
    // fwd chain slots: sources pi_{b0..b_{T-1}}, coeffs db_1..db_T; the state
    // at the last slot is the chain's endpoint.
    // bwd chain slots: start source (pi_T or shared), coeff db_T, then
    // sources pi_{b_{T-1}..b_1} with coeffs db_{T-1}..db_1.
    auto delta = [&](int t) { return betas[static_cast<std::size_t>(t)] - betas[static_cast<std::size_t>(t - 1)]; };

    std::vector<const VectorXd*> slots;
    std::vector<ChainSlots> chains;
    int cond_slot = -1;            // slot whose state also feeds the conditional term
    int coupling_slot = -1;        // shared start for coupled chains

    auto add_fwd_chain = [&]() {
      ChainSlots ch;
      for (int t = 1; t <= T; ++t) {
        slots.push_back(&pis[static_cast<std::size_t>(t - 1)]);
        ch.slot_index.push_back(static_cast<int>(slots.size()) - 1);
        ch.coeff.push_back(delta(t));
      }
      chains.push_back(ch);
      return static_cast<int>(slots.size()) - 1;  // endpoint slot
    };
    auto add_bwd_chain = [&](int start_slot) {
      ChainSlots ch;
      if (start_slot < 0) {
        slots.push_back(&pis[static_cast<std::size_t>(T)]);
        start_slot = static_cast<int>(slots.size()) - 1;
      }
      ch.slot_index.push_back(start_slot);
      ch.coeff.push_back(delta(T));
      for (int t = T - 1; t >= 1; --t) {
        slots.push_back(&pis[static_cast<std::size_t>(t)]);
        ch.slot_index.push_back(static_cast<int>(slots.size()) - 1);
        ch.coeff.push_back(delta(t));
      }
      chains.push_back(ch);
      return start_slot;
    };

    enum class Mix { kLogMeanExp, kNegLogMeanExpNeg };
    auto evaluate = [&](Mix mix, bool cond_from_slot) {
      return expect_product(slots, [&](const std::vector<int>& idx) {
        VectorXd w(static_cast<int>(chains.size()));
        for (std::size_t kc = 0; kc < chains.size(); ++kc) {
          double acc = 0.0;
          for (std::size_t s = 0; s < chains[kc].slot_index.size(); ++s)
            acc += chains[kc].coeff[s] *
                   c.log_w[idx[static_cast<std::size_t>(chains[kc].slot_index[s])]];
          w[static_cast<int>(kc)] = acc;
        }
        const double bound = mix == Mix::kLogMeanExp ? log_mean_exp(w) : -log_mean_exp(-w);
        if (!cond_from_slot) return bound;
        return c.log_lik[idx[static_cast<std::size_t>(cond_slot)]] - bound;
      });
    };

    double elbo = 0.0, eubo = 0.0, lower_mi = 0.0;
    switch (variant) {
      case AisVariant::kSingle:
      case AisVariant::kIm: {
        const int KK = variant == AisVariant::kSingle ? 1 : K;
        // Lower log Z: K forward chains.
        slots.clear(); chains.clear();
        for (int k = 0; k < KK; ++k) add_fwd_chain();
        elbo = evaluate(Mix::kLogMeanExp, false);
        // Upper log Z: backward from the draw's posterior sample + K-1 fwd.
        slots.clear(); chains.clear();
        cond_slot = add_bwd_chain(-1);
        for (int k = 1; k < KK; ++k) add_fwd_chain();
        eubo = evaluate(Mix::kLogMeanExp, false);
        lower_mi = evaluate(Mix::kLogMeanExp, true);
        break;
      }
      case AisVariant::kIr: {
        slots.clear(); chains.clear();
        add_fwd_chain();
        for (int k = 1; k < K; ++k) add_bwd_chain(-1);
        elbo = evaluate(Mix::kNegLogMeanExpNeg, false);
        slots.clear(); chains.clear();
        cond_slot = add_bwd_chain(-1);
        for (int k = 1; k < K; ++k) add_bwd_chain(-1);
        eubo = evaluate(Mix::kNegLogMeanExpNeg, false);
        lower_mi = evaluate(Mix::kNegLogMeanExpNeg, true);
        break;
      }
      case AisVariant::kCr: {
        slots.clear(); chains.clear();
        const int endpoint = add_fwd_chain();
        for (int k = 1; k < K; ++k) add_bwd_chain(endpoint);
        elbo = evaluate(Mix::kNegLogMeanExpNeg, false);
        slots.clear(); chains.clear();
        coupling_slot = -1;
        cond_slot = add_bwd_chain(coupling_slot);
        coupling_slot = cond_slot;
        for (int k = 1; k < K; ++k) add_bwd_chain(coupling_slot);
        eubo = evaluate(Mix::kNegLogMeanExpNeg, false);
        lower_mi = evaluate(Mix::kNegLogMeanExpNeg, true);
        break;
      }
    }
    out.lower_logz += c.px * elbo;
    out.upper_logz += c.px * eubo;
    out.upper_mi += c.px * (cond - elbo);
    out.lower_mi += c.px * lower_mi;
  }
  return out;
}

double enumerate_bound(const DiscreteJoint& model, const MatrixXd& q,
                       const MatrixXd* critic, const EnumBoundSpec& spec) {
  auto need_critic = [&]() -> const MatrixXd& {
    if (critic == nullptr) throw ParameterError("estimator requires a critic table");
    return *critic;
  };
  if (spec.estimator == "ba_lower") return enum_ba_lower(model, q);
  if (spec.estimator == "ba_upper") return enum_ba_upper(model, q);
  if (spec.estimator == "iwae_lower") return enum_iwae_lower(model, q, spec.K);
  if (spec.estimator == "iwae_upper") return enum_iwae_upper(model, q, spec.K);
  if (spec.estimator == "riwae_lower") return enum_riwae_lower(model, q, spec.K);
  if (spec.estimator == "riwae_upper") return enum_riwae_upper(model, q, spec.K);
  if (spec.estimator == "giwae") return enum_giwae_lower(model, q, need_critic(), spec.K);
  if (spec.estimator == "mine_dv") return enum_mine_dv(model, q, need_critic());
  if (spec.estimator == "mine_f") return enum_mine_f(model, q, need_critic());
  if (spec.estimator == "ibal") return enum_ibal(model, q, need_critic());
  if (spec.estimator == "mi") return model.analytic_mi();
  throw ParameterError("enumerate_bound: unknown estimator '" + spec.estimator + "'");
}

}  // namespace mib
