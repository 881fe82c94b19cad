#include "persona/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace persona {

namespace {

void check_same_size(const std::vector<double>& a, const std::vector<double>& b, const char* op) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(op) + ": size mismatch");
}

}  // namespace

std::size_t Tape::index(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("Var does not belong to this tape");
  }
  return static_cast<std::size_t>(v.id);
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(std::vector<double> v) {
  Node n;
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::zeros(std::size_t size) { return constant(std::vector<double>(size, 0.0)); }

Var Tape::vector_param(Tensor& t) {
  Node n;
  n.op = Op::kVectorParam;
  n.value = t.value;
  n.param = &t;
  return push(std::move(n));
}

Var Tape::row(Tensor& table, std::size_t r) {
  if (r >= table.rows()) throw std::out_of_range("row index out of range");
  const std::size_t c = table.cols();
  Node n;
  n.op = Op::kRow;
  n.value.assign(table.value.begin() + static_cast<std::ptrdiff_t>(r * c),
                 table.value.begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
  n.param = &table;
  n.index = r;
  return push(std::move(n));
}

Var Tape::matvec(Tensor& w, Var x) {
  const auto& xv = value(x);
  const std::size_t rows = w.rows(), cols = w.cols();
  if (xv.size() != cols) throw std::invalid_argument("matvec: dimension mismatch");
  Node n;
  n.op = Op::kMatVec;
  n.value.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = &w.value[r * cols];
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * xv[c];
    n.value[r] = s;
  }
  n.param = &w;
  n.inputs = {x.id};
  return push(std::move(n));
}

Var Tape::matvec_transposed(Tensor& w, Var x) {
  const auto& xv = value(x);
  const std::size_t rows = w.rows(), cols = w.cols();
  if (xv.size() != rows) throw std::invalid_argument("matvec_transposed: dimension mismatch");
  Node n;
  n.op = Op::kMatVecT;
  n.value.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = &w.value[r * cols];
    for (std::size_t c = 0; c < cols; ++c) n.value[c] += wr[c] * xv[r];
  }
  n.param = &w;
  n.inputs = {x.id};
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  check_same_size(av, bv, "add");
  Node n;
  n.op = Op::kAdd;
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] + bv[i];
  n.inputs = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  check_same_size(av, bv, "mul");
  Node n;
  n.op = Op::kMul;
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * bv[i];
  n.inputs = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::kScale;
  n.value = value(a);
  for (double& v : n.value) v *= s;
  n.factor = s;
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.value = value(a);
  for (double& v : n.value) v = 1.0 / (1.0 + std::exp(-v));
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.value = value(a);
  for (double& v : n.value) v = std::tanh(v);
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& parts) {
  Node n;
  n.op = Op::kConcat;
  for (Var p : parts) {
    const auto& pv = value(p);
    n.value.insert(n.value.end(), pv.begin(), pv.end());
    n.inputs.push_back(p.id);
  }
  return push(std::move(n));
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  const auto& av = value(a);
  if (offset + length > av.size()) throw std::out_of_range("slice out of range");
  Node n;
  n.op = Op::kSlice;
  n.value.assign(av.begin() + static_cast<std::ptrdiff_t>(offset),
                 av.begin() + static_cast<std::ptrdiff_t>(offset + length));
  n.index = offset;
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  check_same_size(av, bv, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  Node n;
  n.op = Op::kDot;
  n.value = {s};
  n.inputs = {a.id, b.id};
  return push(std::move(n));
}

Var Tape::softmax(Var a) {
  const auto& av = value(a);
  if (av.empty()) throw std::invalid_argument("softmax of empty vector");
  const double mx = *std::max_element(av.begin(), av.end());
  Node n;
  n.op = Op::kSoftmax;
  n.value.resize(av.size());
  double z = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) z += (n.value[i] = std::exp(av[i] - mx));
  for (double& v : n.value) v /= z;
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::weighted_sum(Var weights, const std::vector<Var>& items) {
  const auto& wv = value(weights);
  if (wv.size() != items.size() || items.empty()) throw std::invalid_argument("weighted_sum: size mismatch");
  Node n;
  n.op = Op::kWeightedSum;
  n.value.assign(value(items[0]).size(), 0.0);
  n.inputs.push_back(weights.id);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& iv = value(items[i]);
    check_same_size(iv, n.value, "weighted_sum");
    for (std::size_t j = 0; j < iv.size(); ++j) n.value[j] += wv[i] * iv[j];
    n.inputs.push_back(items[i].id);
  }
  return push(std::move(n));
}

Var Tape::mask(Var a, std::vector<double> multipliers) {
  const auto& av = value(a);
  check_same_size(av, multipliers, "mask");
  Node n;
  n.op = Op::kMask;
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * multipliers[i];
  n.aux = std::move(multipliers);
  n.inputs = {a.id};
  return push(std::move(n));
}

Var Tape::nll(Var logits, std::size_t target) {
  const auto& lv = value(logits);
  if (target >= lv.size()) throw std::out_of_range("nll target out of range");
  const double mx = *std::max_element(lv.begin(), lv.end());
  Node n;
  n.op = Op::kNll;
  n.aux.resize(lv.size());
  double z = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) z += (n.aux[i] = std::exp(lv[i] - mx));
  for (double& p : n.aux) p /= z;
  n.value = {std::log(z) + mx - lv[target]};
  n.index = target;
  n.inputs = {logits.id};
  return push(std::move(n));
}

Var Tape::sum(const std::vector<Var>& scalars) {
  Node n;
  n.op = Op::kSum;
  double s = 0.0;
  for (Var v : scalars) {
    s += scalar(v);
    n.inputs.push_back(v.id);
  }
  n.value = {s};
  return push(std::move(n));
}

void Tape::backward(Var root, double seed) {
  const std::size_t r = index(root);
  if (nodes_[r].value.size() != 1) throw std::invalid_argument("backward root must be a scalar");
  for (std::size_t i = 0; i <= r; ++i) nodes_[i].grad.assign(nodes_[i].value.size(), 0.0);
  nodes_[r].grad[0] = seed;
  for (std::size_t i = r + 1; i-- > 0;) propagate(nodes_[i]);
}

void Tape::propagate(Node& n) {
  const auto& g = n.grad;
  auto in = [&](std::size_t k) -> Node& { return nodes_[static_cast<std::size_t>(n.inputs[k])]; };
  switch (n.op) {
    case Op::kConstant:
      break;
    case Op::kVectorParam:
      for (std::size_t i = 0; i < g.size(); ++i) n.param->grad[i] += g[i];
      break;
    case Op::kRow: {
      const std::size_t c = n.param->cols();
      double* pg = &n.param->grad[n.index * c];
      for (std::size_t j = 0; j < c; ++j) pg[j] += g[j];
      break;
    }
    case Op::kMatVec: {
      Node& x = in(0);
      Tensor& w = *n.param;
      const std::size_t rows = w.rows(), cols = w.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* wr = &w.value[r * cols];
        double* wg = &w.grad[r * cols];
        for (std::size_t c = 0; c < cols; ++c) {
          wg[c] += gr * x.value[c];
          x.grad[c] += gr * wr[c];
        }
      }
      break;
    }
    case Op::kMatVecT: {
      Node& x = in(0);
      Tensor& w = *n.param;
      const std::size_t rows = w.rows(), cols = w.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = &w.value[r * cols];
        double* wg = &w.grad[r * cols];
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          wg[c] += x.value[r] * g[c];
          acc += wr[c] * g[c];
        }
        x.grad[r] += acc;
      }
      break;
    }
    case Op::kAdd:
      for (std::size_t k = 0; k < 2; ++k) {
        auto& ig = in(k).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i];
      }
      break;
    case Op::kMul: {
      Node& a = in(0);
      Node& b = in(1);
      for (std::size_t i = 0; i < g.size(); ++i) {
        a.grad[i] += g[i] * b.value[i];
        b.grad[i] += g[i] * a.value[i];
      }
      break;
    }
    case Op::kScale: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[i] += n.factor * g[i];
      break;
    }
    case Op::kSigmoid: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::kTanh: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto& ig = in(k).grad;
        for (std::size_t i = 0; i < ig.size(); ++i) ig[i] += g[off + i];
        off += ig.size();
      }
      break;
    }
    case Op::kSlice: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[n.index + i] += g[i];
      break;
    }
    case Op::kDot: {
      Node& a = in(0);
      Node& b = in(1);
      for (std::size_t i = 0; i < a.value.size(); ++i) {
        a.grad[i] += g[0] * b.value[i];
        b.grad[i] += g[0] * a.value[i];
      }
      break;
    }
    case Op::kSoftmax: {
      double gy = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * n.value[i];
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[i] += n.value[i] * (g[i] - gy);
      break;
    }
    case Op::kWeightedSum: {
      Node& w = in(0);
      for (std::size_t k = 1; k < n.inputs.size(); ++k) {
        Node& item = in(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
          acc += g[j] * item.value[j];
          item.grad[j] += w.value[k - 1] * g[j];
        }
        w.grad[k - 1] += acc;
      }
      break;
    }
    case Op::kMask: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ig[i] += g[i] * n.aux[i];
      break;
    }
    case Op::kNll: {
      auto& ig = in(0).grad;
      for (std::size_t i = 0; i < ig.size(); ++i) {
        ig[i] += g[0] * (n.aux[i] - (i == n.index ? 1.0 : 0.0));
      }
      break;
    }
    case Op::kSum:
      for (std::size_t k = 0; k < n.inputs.size(); ++k) in(k).grad[0] += g[0];
      break;
  }
}

}  // namespace persona
