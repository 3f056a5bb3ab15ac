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

#include "mib/variational.hpp"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "mib/math.hpp"

namespace mib {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Proposals

bool PriorProposal::gaussian_params(const VectorXd& x, VectorXd& mean,
                                    VectorXd& std) const {
  (void)x;
  if (dynamic_cast<const LinearGaussianVae*>(model_) != nullptr) {
    mean = VectorXd::Zero(model_->latent_dim());
    std = VectorXd::Ones(model_->latent_dim());
    return true;
  }
  return false;
}

TableProposal::TableProposal(MatrixXd table) : table_(std::move(table)) {
  for (Eigen::Index i = 0; i < table_.rows(); ++i) {
    const double s = table_.row(i).sum();
    if (std::abs(s - 1.0) > 1e-9) throw DomainError("table proposal rows must sum to 1");
    if ((table_.row(i).array() < 0.0).any()) throw DomainError("negative proposal entry");
  }
}

VectorXd TableProposal::sample(const VectorXd& x, RngStream& rng) const {
  const int i = DiscreteJoint::index_of(x);
  if (i < 0 || i >= table_.rows()) throw DomainError("proposal x index out of range");
  VectorXd row = table_.row(i).transpose();
  return DiscreteJoint::encode(static_cast<int>(categorical_sample(row, rng.uniform())));
}

double TableProposal::log_density(const VectorXd& x, const VectorXd& z) const {
  const int i = DiscreteJoint::index_of(x);
  const int j = DiscreteJoint::index_of(z);
  if (i < 0 || i >= table_.rows() || j < 0 || j >= table_.cols())
    throw DomainError("proposal index out of range");
  return std::log(table_(i, j));
}

// ---------------------------------------------------------------------------
// Mlp

int MlpShape::param_count() const {
  int total = 0;
  int prev = in;
  for (int h : hidden) {
    total += prev * h + h;
    prev = h;
  }
  total += prev * out + out;
  return total;
}

Mlp::Mlp(MlpShape shape, std::uint64_t init_seed) : shape_(std::move(shape)) {
  dims_.push_back(shape_.in);
  for (int h : shape_.hidden) dims_.push_back(h);
  dims_.push_back(shape_.out);
  int off = 0;
  for (int l = 0; l + 1 < static_cast<int>(dims_.size()); ++l) {
    w_off_.push_back(off);
    off += dims_[l] * dims_[l + 1];
    b_off_.push_back(off);
    off += dims_[l + 1];
  }
  theta_.setZero(off);
  // Scaled-uniform fan-in init, biases zero; the seed is caller-visible since
  // contrastive training results are initialization-sensitive.
  RngStream rng(init_seed, 0x494e4954u /* init stream tag */);
  for (int l = 0; l < layers(); ++l) {
    const double bound = std::sqrt(1.0 / static_cast<double>(dims_[l]));
    auto w = weight(theta_, l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
  }
}

Eigen::Map<const MatrixXd> Mlp::weight(const Eigen::VectorXd& flat, int layer) const {
  return {flat.data() + w_off_[layer], dims_[layer], dims_[layer + 1]};
}
Eigen::Map<const Eigen::RowVectorXd> Mlp::bias(const Eigen::VectorXd& flat, int layer) const {
  return {flat.data() + b_off_[layer], dims_[layer + 1]};
}
Eigen::Map<MatrixXd> Mlp::weight(Eigen::VectorXd& flat, int layer) const {
  return {flat.data() + w_off_[layer], dims_[layer], dims_[layer + 1]};
}
Eigen::Map<Eigen::RowVectorXd> Mlp::bias(Eigen::VectorXd& flat, int layer) const {
  return {flat.data() + b_off_[layer], dims_[layer + 1]};
}

MatrixXd Mlp::forward(const MatrixXd& X) const {
  if (X.cols() != dims_.front()) throw DimensionError("mlp forward: input width");
  MatrixXd h = X;
  for (int l = 0; l < layers(); ++l) {
    MatrixXd pre = h * weight(theta_, l);
    pre.rowwise() += bias(theta_, l);
    h = (l + 1 < layers()) ? pre.cwiseMax(0.0) : pre;
  }
  return h;
}

Tape::Var Mlp::build(Tape& tape, Tape::Var X, std::vector<Tape::Var>& param_nodes) const {
  Tape::Var h = X;
  for (int l = 0; l < layers(); ++l) {
    Tape::Var w = tape.param(weight(theta_, l));
    Tape::Var b = tape.param(bias(theta_, l));
    param_nodes.push_back(w);
    param_nodes.push_back(b);
    Tape::Var pre = tape.add_rowvec(tape.matmul(h, w), b);
    h = (l + 1 < layers()) ? tape.relu(pre) : pre;
  }
  return h;
}

Eigen::VectorXd Mlp::collect_grad(const Tape& tape,
                                  const std::vector<Tape::Var>& param_nodes) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
  int idx = 0;
  for (int l = 0; l < layers(); ++l) {
    const MatrixXd& gw = tape.grad(param_nodes[idx++]);
    const MatrixXd& gb = tape.grad(param_nodes[idx++]);
    Eigen::Map<MatrixXd>(g.data() + w_off_[l], dims_[l], dims_[l + 1]) = gw;
    Eigen::Map<Eigen::RowVectorXd>(g.data() + b_off_[l], dims_[l + 1]) = gb.row(0);
  }
  return g;
}

// ---------------------------------------------------------------------------
// ConditionalGaussian

ConditionalGaussian::ConditionalGaussian(int obs_dim, int latent_dim, Encoder enc,
                                         std::uint64_t init_seed, int hidden_width)
    : obs_dim_(obs_dim), latent_dim_(latent_dim),
      hidden_width_(hidden_width), encoder_(enc) {
  MlpShape shape;
  shape.in = obs_dim;
  if (enc == Encoder::kMlp) shape.hidden = {hidden_width, hidden_width};
  shape.out = 2 * latent_dim;
  net_ = Mlp(shape, init_seed);
}

ConditionalGaussian ConditionalGaussian::standard_normal(int obs_dim, int latent_dim) {
  ConditionalGaussian q(obs_dim, latent_dim, Encoder::kAffine, /*init_seed=*/0);
  q.net_.params().setZero();
  return q;
}

void ConditionalGaussian::encode(const MatrixXd& X, MatrixXd& mean,
                                 MatrixXd& log_std) const {
  MatrixXd heads = net_.forward(X);
  mean = heads.leftCols(latent_dim_);
  log_std = heads.rightCols(latent_dim_);
}

VectorXd ConditionalGaussian::sample(const VectorXd& x, RngStream& rng) const {
  MatrixXd mean, log_std;
  encode(x.transpose(), mean, log_std);
  VectorXd eps = rng.normal_vector(latent_dim_);
  return mean.row(0).transpose() +
         log_std.row(0).array().exp().matrix().transpose().cwiseProduct(eps);
}

double ConditionalGaussian::log_density(const VectorXd& x, const VectorXd& z) const {
  require_finite(x, "q.log_density(x)");
  require_finite(z, "q.log_density(z)");
  MatrixXd mean, log_std;
  encode(x.transpose(), mean, log_std);
  double acc = 0.0;
  for (int i = 0; i < latent_dim_; ++i) {
    const double ls = log_std(0, i);
    const double u = (z[i] - mean(0, i)) * std::exp(-ls);
    acc += -0.5 * (u * u + kLog2Pi) - ls;
  }
  return acc;
}

void ConditionalGaussian::grad_log_density_z(const VectorXd& x, const VectorXd& z,
                                             VectorXd& grad) const {
  MatrixXd mean, log_std;
  encode(x.transpose(), mean, log_std);
  grad.resize(latent_dim_);
  for (int i = 0; i < latent_dim_; ++i) {
    const double var = std::exp(2.0 * log_std(0, i));
    grad[i] = (mean(0, i) - z[i]) / var;
  }
}

bool ConditionalGaussian::gaussian_params(const VectorXd& x, VectorXd& mean,
                                          VectorXd& std) const {
  MatrixXd m, ls;
  encode(x.transpose(), m, ls);
  mean = m.row(0).transpose();
  std = ls.row(0).array().exp().matrix().transpose();
  return true;
}

MatrixXd ConditionalGaussian::sample_batch(const MatrixXd& X, RngStream& rng,
                                           MatrixXd* eps_out) const {
  MatrixXd mean, log_std;
  encode(X, mean, log_std);
  MatrixXd eps(X.rows(), latent_dim_);
  rng.fill_normal(eps);
  if (eps_out != nullptr) *eps_out = eps;
  return mean + log_std.array().exp().matrix().cwiseProduct(eps);
}

Tape::Var ConditionalGaussian::build_heads(Tape& tape, const MatrixXd& X,
                                           std::vector<Tape::Var>& param_nodes) const {
  Tape::Var x = tape.input(X);
  return net_.build(tape, x, param_nodes);
}

Tape::Var ConditionalGaussian::build_log_density(Tape& tape, const MatrixXd& X,
                                                 const MatrixXd& Z,
                                                 std::vector<Tape::Var>& param_nodes) const {
  Tape::Var heads = build_heads(tape, X, param_nodes);
  Tape::Var mean = tape.slice_cols(heads, 0, latent_dim_);
  Tape::Var log_std = tape.slice_cols(heads, latent_dim_, latent_dim_);
  Tape::Var z = tape.input(Z);
  Tape::Var u = tape.mul(tape.sub(z, mean), tape.exp(tape.neg(log_std)));
  Tape::Var per_dim = tape.add(tape.scale(log_std, 2.0), tape.square(u));
  Tape::Var row = tape.row_sum(per_dim);
  return tape.add_const(tape.scale(row, -0.5),
                        -0.5 * latent_dim_ * kLog2Pi);
}

Tape::Var ConditionalGaussian::build_rsample(Tape& tape, const MatrixXd& X,
                                             const MatrixXd& eps,
                                             std::vector<Tape::Var>& param_nodes) const {
  Tape::Var heads = build_heads(tape, X, param_nodes);
  Tape::Var mean = tape.slice_cols(heads, 0, latent_dim_);
  Tape::Var log_std = tape.slice_cols(heads, latent_dim_, latent_dim_);
  Tape::Var e = tape.input(eps);
  return tape.add(mean, tape.mul(tape.exp(log_std), e));
}

// ---------------------------------------------------------------------------
// Critic

VectorXd Critic::eval_batch(const MatrixXd& X, const MatrixXd& Z) const {
  VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out[i] = eval(X.row(i).transpose(), Z.row(i).transpose());
  return out;
}

double TableCritic::eval(const VectorXd& x, const VectorXd& z) const {
  const int i = DiscreteJoint::index_of(x);
  const int j = DiscreteJoint::index_of(z);
  if (i < 0 || i >= values_.rows() || j < 0 || j >= values_.cols())
    throw DomainError("table critic index out of range");
  return values_(i, j);
}

MlpCritic::MlpCritic(int obs_dim, int latent_dim, std::uint64_t init_seed,
                     std::vector<int> hidden)
    : obs_dim_(obs_dim), latent_dim_(latent_dim) {
  MlpShape shape;
  shape.in = obs_dim + latent_dim;
  shape.hidden = std::move(hidden);
  shape.out = 1;
  net_ = Mlp(shape, init_seed);
}

void MlpCritic::set_constant_mode(double c) {
  const int last = net_.layers() - 1;
  net_.weight(net_.params(), last).setZero();
  net_.bias(net_.params(), last).setConstant(c);
  constant_mode_ = true;
}

double MlpCritic::eval(const VectorXd& x, const VectorXd& z) const {
  MatrixXd in(1, obs_dim_ + latent_dim_);
  in << x.transpose(), z.transpose();
  return net_.forward(in)(0, 0);
}

VectorXd MlpCritic::eval_batch(const MatrixXd& X, const MatrixXd& Z) const {
  MatrixXd in(X.rows(), obs_dim_ + latent_dim_);
  in << X, Z;
  return net_.forward(in).col(0);
}

void MlpCritic::grad_z(const VectorXd& x, const VectorXd& z, VectorXd& grad) const {
  XCache cache = make_x_cache(x.transpose());
  VectorXd values;
  MatrixXd gz;
  value_grad_z(cache, z.transpose(), values, gz);
  grad = gz.row(0).transpose();
}

MlpCritic::XCache MlpCritic::make_x_cache(const MatrixXd& X) const {
  XCache cache;
  auto w1 = net_.weight(net_.params(), 0);
  cache.a1x.noalias() = X * w1.topRows(obs_dim_);
  cache.a1x.rowwise() += net_.bias(net_.params(), 0);
  return cache;
}

VectorXd MlpCritic::value(const XCache& cache, const MatrixXd& Z) const {
  const int L = net_.layers();
  auto w1 = net_.weight(net_.params(), 0);
  MatrixXd h = cache.a1x;
  h.noalias() += Z * w1.bottomRows(latent_dim_);
  if (L == 1) return h.col(0);
  h = h.cwiseMax(0.0);
  for (int l = 1; l < L; ++l) {
    MatrixXd pre = h * net_.weight(net_.params(), l);
    pre.rowwise() += net_.bias(net_.params(), l);
    h = (l + 1 < L) ? pre.cwiseMax(0.0) : pre;
  }
  return h.col(0);
}

void MlpCritic::value_grad_z(const XCache& cache, const MatrixXd& Z,
                             VectorXd& values, MatrixXd& grad_z) const {
  const int L = net_.layers();
  auto w1 = net_.weight(net_.params(), 0);
  std::vector<MatrixXd> acts(L);  // post-relu activations per hidden layer
  MatrixXd pre = cache.a1x;
  pre.noalias() += Z * w1.bottomRows(latent_dim_);
  if (L > 1) acts[0] = pre.cwiseMax(0.0);
  for (int l = 1; l < L; ++l) {
    pre.noalias() = acts[l - 1] * net_.weight(net_.params(), l);
    pre.rowwise() += net_.bias(net_.params(), l);
    if (l + 1 < L) acts[l] = pre.cwiseMax(0.0);
  }
  values = pre.col(0);
  // Backward pass to the z columns only; each row is independent, so the
  // gradient of the row sum is the per-row gradient.
  MatrixXd d = MatrixXd::Ones(Z.rows(), 1);
  for (int l = L - 1; l >= 1; --l) {
    MatrixXd dprev = d * net_.weight(net_.params(), l).transpose();
    d = dprev.cwiseProduct((acts[l - 1].array() > 0.0).cast<double>().matrix());
  }
  grad_z.noalias() = d * w1.bottomRows(latent_dim_).transpose();
}

Eigen::VectorXd MlpCritic::grad_params(const MatrixXd& X, const MatrixXd& Z,
                                       const VectorXd& row_weights) const {
  const int L = net_.layers();
  MatrixXd in(X.rows(), obs_dim_ + latent_dim_);
  in << X, Z;
  std::vector<MatrixXd> acts(L + 1);
  acts[0] = in;
  for (int l = 0; l < L; ++l) {
    MatrixXd pre = acts[l] * net_.weight(net_.params(), l);
    pre.rowwise() += net_.bias(net_.params(), l);
    acts[l + 1] = (l + 1 < L) ? pre.cwiseMax(0.0).eval() : pre;
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(net_.params().size());
  MatrixXd d = row_weights;  // n x 1 seed on the scalar outputs
  for (int l = L - 1; l >= 0; --l) {
    auto gw = net_.weight(g, l);
    auto gb = net_.bias(g, l);
    gw.noalias() += acts[l].transpose() * d;
    gb += d.colwise().sum();
    if (l > 0) {
      MatrixXd dprev = d * net_.weight(net_.params(), l).transpose();
      d = dprev.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Adam

AdamOptimizer::AdamOptimizer(Eigen::Index dim, double lr, double beta1,
                             double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.setZero(dim);
  v_.setZero(dim);
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DimensionError("adam: parameter size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string doubles_to_hex(const Eigen::VectorXd& v) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(v.size()) * 16);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &v[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      const unsigned byte = static_cast<unsigned>((bits >> (8 * b)) & 0xffu);
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xfu]);
    }
  }
  return out;
}

Eigen::VectorXd hex_to_doubles(const std::string& hex) {
  if (hex.size() % 16 != 0) throw ConfigError("checkpoint: bad hex length");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw ConfigError("checkpoint: bad hex digit");
  };
  Eigen::VectorXd v(static_cast<Eigen::Index>(hex.size() / 16));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const unsigned hi = nibble(hex[static_cast<std::size_t>(i) * 16 + 2 * b]);
      const unsigned lo = nibble(hex[static_cast<std::size_t>(i) * 16 + 2 * b + 1]);
      bits |= static_cast<std::uint64_t>((hi << 4) | lo) << (8 * b);
    }
    std::memcpy(&v[i], &bits, sizeof(bits));
  }
  return v;
}

}  // namespace

std::string save_critic_checkpoint(const MlpCritic& critic) {
  json j;
  j["format"] = 1;
  j["kind"] = "mlp_critic";
  j["obs_dim"] = critic.obs_dim();
  j["latent_dim"] = critic.latent_dim();
  j["hidden"] = critic.hidden();
  j["constant_mode"] = critic.constant_mode();
  j["params_hex"] = doubles_to_hex(critic.params());
  return j.dump();
}

MlpCritic load_critic_checkpoint(const std::string& text) {
  json j = json::parse(text);
  if (j.value("kind", "") != "mlp_critic") throw ConfigError("not a critic checkpoint");
  MlpCritic critic(j.at("obs_dim").get<int>(), j.at("latent_dim").get<int>(), 0,
                   j.at("hidden").get<std::vector<int>>());
  Eigen::VectorXd params = hex_to_doubles(j.at("params_hex").get<std::string>());
  if (params.size() != critic.params().size())
    throw ConfigError("critic checkpoint: parameter count mismatch");
  critic.params() = params;
  if (j.value("constant_mode", false)) {
    // Parameters already encode the zeroed layer; just restore the flag.
    const double c = critic.eval(VectorXd::Zero(critic.obs_dim()),
                                 VectorXd::Zero(critic.latent_dim()));
    critic.set_constant_mode(c);
    critic.params() = params;
  }
  return critic;
}

std::string save_cond_gaussian_checkpoint(const ConditionalGaussian& q) {
  json j;
  j["format"] = 1;
  j["kind"] = "cond_gaussian";
  j["obs_dim"] = q.obs_dim();
  j["latent_dim"] = q.latent_dim();
  j["encoder"] = q.encoder() == ConditionalGaussian::Encoder::kAffine ? "affine" : "mlp";
  j["hidden_width"] = q.hidden_width();
  j["params_hex"] = doubles_to_hex(q.params());
  return j.dump();
}

ConditionalGaussian load_cond_gaussian_checkpoint(const std::string& text) {
  json j = json::parse(text);
  if (j.value("kind", "") != "cond_gaussian") throw ConfigError("not a q checkpoint");
  const auto enc = j.at("encoder").get<std::string>() == "affine"
                       ? ConditionalGaussian::Encoder::kAffine
                       : ConditionalGaussian::Encoder::kMlp;
  ConditionalGaussian q(j.at("obs_dim").get<int>(), j.at("latent_dim").get<int>(),
                        enc, 0, j.at("hidden_width").get<int>());
  Eigen::VectorXd params = hex_to_doubles(j.at("params_hex").get<std::string>());
  if (params.size() != q.params().size())
    throw ConfigError("q checkpoint: parameter count mismatch");
  q.params() = params;
  return q;
}

}  // namespace mib
