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

#ifndef MIB_TAPE_HPP
#define MIB_TAPE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mib/error.hpp"

namespace mib {

// Reverse-mode differentiation over a recorded graph of matrix-valued nodes.
//
// The op set is the minimum needed for diagonal-Gaussian log-densities,
// reparameterized samples, MLP critics, and the contrastive / log-sum-exp
// objectives built on them.  Values are dense Eigen matrices; a scalar is a
// 1x1 matrix.  backward() seeds the adjoint of one scalar node and propagates
// to every leaf created with param().
class Tape {
 public:
  using Mat = Eigen::MatrixXd;

  struct Var {
    std::int32_t id = -1;
  };

  // Leaf without gradient tracking.
  Var input(Mat value) { return push(Op::kLeaf, {}, std::move(value), false); }

  // Leaf with gradient tracking (parameters, or inputs whose gradient is
  // wanted, e.g. z for HMC).
  Var param(Mat value) { return push(Op::kLeaf, {}, std::move(value), true); }

  Var matmul(Var a, Var b) {
    if (val(a).cols() != val(b).rows()) throw DimensionError("matmul: inner dims differ");
    return push(Op::kMatMul, {a, b}, val(a) * val(b));
  }
  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    return push(Op::kAdd, {a, b}, val(a) + val(b));
  }
  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    return push(Op::kSub, {a, b}, val(a) - val(b));
  }
  // Adds a 1 x m row vector to every row of an n x m matrix.
  Var add_rowvec(Var a, Var r) {
    if (val(r).rows() != 1 || val(r).cols() != val(a).cols())
      throw DimensionError("add_rowvec: need 1 x cols(a)");
    Mat out = val(a);
    out.rowwise() += val(r).row(0);
    return push(Op::kAddRowVec, {a, r}, std::move(out));
  }
  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    return push(Op::kMul, {a, b}, val(a).cwiseProduct(val(b)));
  }
  Var scale(Var a, double c) {
    return push(Op::kScale, {a}, val(a) * c, true, c);
  }
  Var add_const(Var a, double c) {
    return push(Op::kAddConst, {a}, val(a).array() + c, true, c);
  }
  Var neg(Var a) { return scale(a, -1.0); }
  Var relu(Var a) { return push(Op::kRelu, {a}, val(a).cwiseMax(0.0)); }
  Var exp(Var a) { return push(Op::kExp, {a}, val(a).array().exp()); }
  Var log(Var a) { return push(Op::kLog, {a}, val(a).array().log()); }
  Var square(Var a) { return push(Op::kSquare, {a}, val(a).array().square()); }
  Var concat_cols(Var a, Var b) {
    if (val(a).rows() != val(b).rows()) throw DimensionError("concat_cols: row mismatch");
    Mat out(val(a).rows(), val(a).cols() + val(b).cols());
    out << val(a), val(b);
    return push(Op::kConcatCols, {a, b}, std::move(out));
  }
  Var slice_cols(Var a, Eigen::Index j0, Eigen::Index m) {
    if (j0 < 0 || m < 0 || j0 + m > val(a).cols()) throw DimensionError("slice_cols: out of range");
    return push(Op::kSliceCols, {a}, val(a).middleCols(j0, m), true, 0.0, j0, m);
  }
  // n x m -> n x 1 row-wise sum.
  Var row_sum(Var a) {
    Mat out = val(a).rowwise().sum();
    return push(Op::kRowSum, {a}, std::move(out));
  }
  // n x m -> n x 1 row-wise max-subtracted log-sum-exp.
  Var logsumexp_rows(Var a) {
    const Mat& v = val(a);
    Mat out(v.rows(), 1);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double m = v.row(i).maxCoeff();
      out(i, 0) = m + std::log((v.row(i).array() - m).exp().sum());
    }
    return push(Op::kLogSumExpRows, {a}, std::move(out));
  }
  // Max-subtracted log-sum-exp over every entry -> 1x1.
  Var logsumexp_all(Var a) {
    const Mat& v = val(a);
    const double m = v.maxCoeff();
    Mat out(1, 1);
    out(0, 0) = m + std::log((v.array() - m).exp().sum());
    return push(Op::kLogSumExpAll, {a}, std::move(out));
  }
  Var sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = val(a).sum();
    return push(Op::kSum, {a}, std::move(out));
  }
  Var mean(Var a) {
    Mat out(1, 1);
    out(0, 0) = val(a).mean();
    return push(Op::kMean, {a}, std::move(out));
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  // Propagates adjoints from a scalar node back to all tracked leaves.
  void backward(Var scalar) {
    Node& top = nodes_[scalar.id];
    if (top.value.size() != 1) throw DimensionError("backward: node is not scalar");
    for (auto& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
    top.grad(0, 0) = 1.0;
    for (std::int32_t id = scalar.id; id >= 0; --id) propagate(id);
  }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatMul, kAdd, kSub, kAddRowVec, kMul, kScale, kAddConst, kRelu,
    kExp, kLog, kSquare, kConcatCols, kSliceCols, kRowSum, kLogSumExpRows,
    kLogSumExpAll, kSum, kMean,
  };

  struct Node {
    Op op;
    std::int32_t a = -1, b = -1;
    Mat value;
    Mat grad;
    bool needs_grad = false;
    double c = 0.0;
    Eigen::Index j0 = 0, m = 0;
  };

  const Mat& val(Var v) const { return nodes_[v.id].value; }

  void check_same_shape(Var a, Var b, const char* what) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
      throw DimensionError(std::string(what) + ": shape mismatch");
  }

  Var push(Op op, std::initializer_list<Var> args, Mat value,
           bool /*unused*/ = true, double c = 0.0, Eigen::Index j0 = 0,
           Eigen::Index m = 0) {
    Node n;
    n.op = op;
    auto it = args.begin();
    if (args.size() > 0) n.a = it->id;
    if (args.size() > 1) n.b = (it + 1)->id;
    n.value = std::move(value);
    n.c = c;
    n.j0 = j0;
    n.m = m;
    if (op == Op::kLeaf) {
      n.needs_grad = c != 0.0;  // overridden below for param()
    }
    // A node needs a grad pass if any argument does.
    n.needs_grad = false;
    if (n.a >= 0 && nodes_[n.a].needs_grad) n.needs_grad = true;
    if (n.b >= 0 && nodes_[n.b].needs_grad) n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  // Leaf push with explicit tracking flag.
  Var push(Op op, std::initializer_list<Var> args, Mat value, bool tracked) {
    Var v = push(op, args, std::move(value), true, 0.0, 0, 0);
    nodes_[v.id].needs_grad = tracked;
    return v;
  }

  void propagate(std::int32_t id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kLeaf) return;
    if (n.grad.size() == 0) return;
    Node* a = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* b = n.b >= 0 ? &nodes_[n.b] : nullptr;
    switch (n.op) {
      case Op::kMatMul:
        if (a->needs_grad) a->grad.noalias() += n.grad * b->value.transpose();
        if (b->needs_grad) b->grad.noalias() += a->value.transpose() * n.grad;
        break;
      case Op::kAdd:
        if (a->needs_grad) a->grad += n.grad;
        if (b->needs_grad) b->grad += n.grad;
        break;
      case Op::kSub:
        if (a->needs_grad) a->grad += n.grad;
        if (b->needs_grad) b->grad -= n.grad;
        break;
      case Op::kAddRowVec:
        if (a->needs_grad) a->grad += n.grad;
        if (b->needs_grad) b->grad.row(0) += n.grad.colwise().sum();
        break;
      case Op::kMul:
        if (a->needs_grad) a->grad += n.grad.cwiseProduct(b->value);
        if (b->needs_grad) b->grad += n.grad.cwiseProduct(a->value);
        break;
      case Op::kScale:
        if (a->needs_grad) a->grad += n.grad * n.c;
        break;
      case Op::kAddConst:
        if (a->needs_grad) a->grad += n.grad;
        break;
      case Op::kRelu:
        if (a->needs_grad)
          a->grad.array() +=
              n.grad.array() * (a->value.array() > 0.0).cast<double>();
        break;
      case Op::kExp:
        if (a->needs_grad) a->grad.array() += n.grad.array() * n.value.array();
        break;
      case Op::kLog:
        if (a->needs_grad) a->grad.array() += n.grad.array() / a->value.array();
        break;
      case Op::kSquare:
        if (a->needs_grad) a->grad.array() += 2.0 * n.grad.array() * a->value.array();
        break;
      case Op::kConcatCols:
        if (a->needs_grad) a->grad += n.grad.leftCols(a->value.cols());
        if (b->needs_grad) b->grad += n.grad.rightCols(b->value.cols());
        break;
      case Op::kSliceCols:
        if (a->needs_grad) a->grad.middleCols(n.j0, n.m) += n.grad;
        break;
      case Op::kRowSum:
        if (a->needs_grad) a->grad.colwise() += n.grad.col(0);
        break;
      case Op::kLogSumExpRows:
        if (a->needs_grad) {
          for (Eigen::Index i = 0; i < a->value.rows(); ++i) {
            const double lse = n.value(i, 0);
            a->grad.row(i).array() +=
                n.grad(i, 0) * (a->value.row(i).array() - lse).exp();
          }
        }
        break;
      case Op::kSum:
        if (a->needs_grad) a->grad.array() += n.grad(0, 0);
        break;
      case Op::kMean:
        if (a->needs_grad)
          a->grad.array() += n.grad(0, 0) / static_cast<double>(a->value.size());
        break;
      case Op::kLeaf:
        break;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace mib

#endif  // MIB_TAPE_HPP
