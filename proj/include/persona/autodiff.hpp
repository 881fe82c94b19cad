#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "persona/tensor.hpp"

namespace persona {

/// Handle to a value recorded on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Vector-granularity reverse-mode tape.
///
/// Every node holds a dense vector. Parameters enter through the ops that
/// take a Tensor& and receive their gradients directly in Tensor::grad when
/// backward() runs. A tape is meant to be used for one example and then
/// cleared.
class Tape {
 public:
  Var constant(std::vector<double> v);
  Var zeros(std::size_t n);

  Var vector_param(Tensor& t);                    // the whole tensor as a vector
  Var row(Tensor& table, std::size_t r);          // table[r, :]
  Var matvec(Tensor& w, Var x);                   // w * x
  Var matvec_transposed(Tensor& w, Var x);        // w^T * x

  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat(const std::vector<Var>& parts);
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var dot(Var a, Var b);
  Var softmax(Var a);
  Var weighted_sum(Var weights, const std::vector<Var>& items);
  Var mask(Var a, std::vector<double> multipliers);
  Var nll(Var logits, std::size_t target);        // -log softmax(logits)[target]
  Var sum(const std::vector<Var>& scalars);

  const std::vector<double>& value(Var v) const { return nodes_[index(v)].value; }
  double scalar(Var v) const { return nodes_[index(v)].value.at(0); }
  const std::vector<double>& grad(Var v) const { return nodes_[index(v)].grad; }

  // Seeds d(root)/d(root) = seed and propagates to every recorded node and
  // parameter. root must be a scalar.
  void backward(Var root, double seed = 1.0);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kConstant, kVectorParam, kRow, kMatVec, kMatVecT, kAdd, kMul, kScale, kSigmoid, kTanh,
    kConcat, kSlice, kDot, kSoftmax, kWeightedSum, kMask, kNll, kSum,
  };

  struct Node {
    Op op = Op::kConstant;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> aux;      // mask multipliers, cached probabilities
    std::vector<std::int32_t> inputs;
    Tensor* param = nullptr;
    std::size_t index = 0;        // row, slice offset or target
    double factor = 0.0;
  };

  std::size_t index(Var v) const;
  Var push(Node n);
  void propagate(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace persona
