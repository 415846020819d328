#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dgnn::nd {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major array of doubles. Rank 1 is a vector, rank 2 a matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value) { return vector({value}); }
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }

  // Scalar view of a single-element tensor.
  double item() const;
  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

enum class Elementwise { add, sub, hadamard, tanh, sigmoid };

double sigmoid(double x);
// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

Tensor matvec(const Tensor& w, const Tensor& x);
Tensor elementwise(Elementwise op, const Tensor& a);
Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& scores);
double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);

// Handle to a value recorded on a Tape.
struct ValueId {
  std::uint32_t index = 0;
  bool operator==(const ValueId&) const = default;
};

class Gradients {
 public:
  // Gradient of a leaf; zeros when the leaf was not reachable from the root.
  const Tensor& operator[](ValueId leaf) const;
  bool contains(ValueId leaf) const { return grads_.count(leaf.index) > 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<std::uint32_t, Tensor> grads_;
};

// Reverse-mode differentiation record. Every primitive appends one node whose
// inputs precede it, so the node vector is already in topological order.
// Leaves are differentiable inputs; constants carry values without gradient.
class Tape {
 public:
  ValueId leaf(Tensor value);
  ValueId constant(Tensor value);

  const Tensor& value(ValueId id) const { return nodes_[id.index].value; }
  bool requires_grad(ValueId id) const { return nodes_[id.index].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  ValueId matvec(ValueId w, ValueId x);
  ValueId elementwise(Elementwise op, ValueId a);
  ValueId elementwise(Elementwise op, ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b) { return elementwise(Elementwise::add, a, b); }
  ValueId sub(ValueId a, ValueId b) { return elementwise(Elementwise::sub, a, b); }
  ValueId hadamard(ValueId a, ValueId b) { return elementwise(Elementwise::hadamard, a, b); }
  ValueId tanh(ValueId a) { return elementwise(Elementwise::tanh, a); }
  ValueId sigmoid(ValueId a) { return elementwise(Elementwise::sigmoid, a); }
  ValueId scale(ValueId a, double factor);
  // a * s where s holds a single element.
  ValueId scale_by(ValueId a, ValueId s);
  ValueId neg(ValueId a) { return scale(a, -1.0); }
  ValueId dot(ValueId a, ValueId b);
  ValueId sum(std::span<const ValueId> terms);
  ValueId stack(std::span<const ValueId> scalars);
  ValueId element(ValueId a, std::size_t i);
  ValueId softmax(ValueId scores);
  ValueId log_softmax(ValueId scores);
  ValueId log_sigmoid(ValueId a);

  // Root must hold exactly one element. Every leaf on the tape gets an entry.
  Gradients backward(ValueId root) const;

 private:
  enum class Op : std::uint8_t {
    leaf, constant, matvec, add, sub, hadamard, tanh, sigmoid, scale, scale_by,
    dot, sum, stack, element, softmax, log_softmax, log_sigmoid,
  };

  struct Node {
    Op op;
    bool requires_grad;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double factor = 0.0;
    std::vector<std::uint32_t> inputs{};
    Tensor value;
  };

  ValueId push(Node node);
  const Node& node(ValueId id) const { return nodes_[id.index]; }

  std::vector<Node> nodes_;
};

using ParamVector = std::vector<Tensor>;
using TracedFunction = std::function<ValueId(Tape&, std::span<const ValueId>)>;

// Max over coordinates of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|), with g_fd
// from central differences of the given step.
double finite_diff_check(const TracedFunction& f, const ParamVector& theta, double step);

}  // namespace dgnn::nd
