#include "dgnn/ndmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dgnn::nd {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

double apply(Elementwise op, double x) {
  switch (op) {
    case Elementwise::tanh:
      return std::tanh(x);
    case Elementwise::sigmoid:
      return sigmoid(x);
    default:
      throw DimensionError("elementwise: binary operation used with one operand");
  }
}

double apply(Elementwise op, double x, double y) {
  switch (op) {
    case Elementwise::add:
      return x + y;
    case Elementwise::sub:
      return x - y;
    case Elementwise::hadamard:
      return x * y;
    default:
      throw DimensionError("elementwise: unary operation used with two operands");
  }
}

bool is_unary(Elementwise op) { return op == Elementwise::tanh || op == Elementwise::sigmoid; }

void accumulate(Tensor& into, const Tensor& g) {
  if (into.size() == 0 && g.size() != 0) {
    into = g;
    return;
  }
  auto dst = into.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(product(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (product(shape_) != values_.size()) {
    throw DimensionError("tensor: shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw DimensionError("item: expected a single element, got " + shape_string(shape_));
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.cols() != x.size()) {
    throw DimensionError("matvec: cannot multiply " + shape_string(w.shape()) + " by " +
                         shape_string(x.shape()));
  }
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  Tensor y({m});
  const double* wv = w.values().data();
  const double* xv = x.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wv + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv[j];
    y[i] = acc;
  }
  return y;
}

Tensor elementwise(Elementwise op, const Tensor& a) {
  if (!is_unary(op)) throw DimensionError("elementwise: binary operation used with one operand");
  Tensor y = a;
  for (double& v : y.values()) v = apply(op, v);
  return y;
}

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b) {
  if (is_unary(op)) throw DimensionError("elementwise: unary operation used with two operands");
  require_same_shape(a, b, "elementwise");
  Tensor y = a;
  auto bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = apply(op, yv[i], bv[i]);
  return y;
}

Tensor softmax(const Tensor& scores) {
  if (scores.size() == 0) throw DomainError("softmax: empty input");
  const double top = *std::max_element(scores.values().begin(), scores.values().end());
  Tensor y = scores;
  double total = 0.0;
  for (double& v : y.values()) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : y.values()) v /= total;
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

const Tensor& Gradients::operator[](ValueId leaf) const {
  auto it = grads_.find(leaf.index);
  if (it == grads_.end()) throw DomainError("gradients: value is not a leaf of this tape");
  return it->second;
}

ValueId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return ValueId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

ValueId Tape::leaf(Tensor value) {
  return push(Node{.op = Op::leaf, .requires_grad = true, .value = std::move(value)});
}

ValueId Tape::constant(Tensor value) {
  return push(Node{.op = Op::constant, .requires_grad = false, .value = std::move(value)});
}

ValueId Tape::matvec(ValueId w, ValueId x) {
  Tensor y = nd::matvec(value(w), value(x));
  return push(Node{.op = Op::matvec,
                   .requires_grad = requires_grad(w) || requires_grad(x),
                   .a = w.index,
                   .b = x.index,
                   .value = std::move(y)});
}

ValueId Tape::elementwise(Elementwise op, ValueId a) {
  Tensor y = nd::elementwise(op, value(a));
  return push(Node{.op = op == Elementwise::tanh ? Op::tanh : Op::sigmoid,
                   .requires_grad = requires_grad(a),
                   .a = a.index,
                   .value = std::move(y)});
}

ValueId Tape::elementwise(Elementwise op, ValueId a, ValueId b) {
  if (is_unary(op)) throw DimensionError("elementwise: unary operation used with two operands");
  Tensor y = nd::elementwise(op, value(a), value(b));
  Op kind = op == Elementwise::add ? Op::add : op == Elementwise::sub ? Op::sub : Op::hadamard;
  return push(Node{.op = kind,
                   .requires_grad = requires_grad(a) || requires_grad(b),
                   .a = a.index,
                   .b = b.index,
                   .value = std::move(y)});
}

ValueId Tape::scale(ValueId a, double factor) {
  Tensor y = value(a);
  for (double& v : y.values()) v *= factor;
  return push(Node{.op = Op::scale,
                   .requires_grad = requires_grad(a),
                   .a = a.index,
                   .factor = factor,
                   .value = std::move(y)});
}

ValueId Tape::scale_by(ValueId a, ValueId s) {
  const double factor = value(s).item();
  Tensor y = value(a);
  for (double& v : y.values()) v *= factor;
  return push(Node{.op = Op::scale_by,
                   .requires_grad = requires_grad(a) || requires_grad(s),
                   .a = a.index,
                   .b = s.index,
                   .value = std::move(y)});
}

ValueId Tape::dot(ValueId a, ValueId b) {
  const double y = nd::dot(value(a), value(b));
  return push(Node{.op = Op::dot,
                   .requires_grad = requires_grad(a) || requires_grad(b),
                   .a = a.index,
                   .b = b.index,
                   .value = Tensor::scalar(y)});
}

ValueId Tape::sum(std::span<const ValueId> terms) {
  if (terms.empty()) throw DomainError("sum: no terms");
  Tensor y = value(terms[0]);
  bool grad = requires_grad(terms[0]);
  std::vector<std::uint32_t> inputs{terms[0].index};
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(y, value(terms[i]), "sum");
    accumulate(y, value(terms[i]));
    grad = grad || requires_grad(terms[i]);
    inputs.push_back(terms[i].index);
  }
  return push(Node{.op = Op::sum, .requires_grad = grad, .inputs = std::move(inputs), .value = std::move(y)});
}

ValueId Tape::stack(std::span<const ValueId> scalars) {
  std::vector<double> values;
  std::vector<std::uint32_t> inputs;
  bool grad = false;
  values.reserve(scalars.size());
  for (ValueId s : scalars) {
    values.push_back(value(s).item());
    inputs.push_back(s.index);
    grad = grad || requires_grad(s);
  }
  return push(Node{.op = Op::stack,
                   .requires_grad = grad,
                   .inputs = std::move(inputs),
                   .value = Tensor::vector(std::move(values))});
}

ValueId Tape::element(ValueId a, std::size_t i) {
  if (i >= value(a).size()) throw DimensionError("element: index out of range");
  return push(Node{.op = Op::element,
                   .requires_grad = requires_grad(a),
                   .a = a.index,
                   .b = static_cast<std::uint32_t>(i),
                   .value = Tensor::scalar(value(a)[i])});
}

ValueId Tape::softmax(ValueId scores) {
  Tensor y = nd::softmax(value(scores));
  return push(Node{.op = Op::softmax,
                   .requires_grad = requires_grad(scores),
                   .a = scores.index,
                   .value = std::move(y)});
}

ValueId Tape::log_softmax(ValueId scores) {
  const Tensor& x = value(scores);
  if (x.size() == 0) throw DomainError("log_softmax: empty input");
  const double top = *std::max_element(x.values().begin(), x.values().end());
  double total = 0.0;
  for (double v : x.values()) total += std::exp(v - top);
  const double lse = top + std::log(total);
  Tensor y = x;
  for (double& v : y.values()) v -= lse;
  return push(Node{.op = Op::log_softmax,
                   .requires_grad = requires_grad(scores),
                   .a = scores.index,
                   .value = std::move(y)});
}

ValueId Tape::log_sigmoid(ValueId a) {
  Tensor y = value(a);
  for (double& v : y.values()) v = nd::log_sigmoid(v);
  return push(Node{.op = Op::log_sigmoid,
                   .requires_grad = requires_grad(a),
                   .a = a.index,
                   .value = std::move(y)});
}

Gradients Tape::backward(ValueId root) const {
  if (value(root).size() != 1) {
    throw DomainError("backward: root must be scalar, got " + shape_string(value(root).shape()));
  }
  std::vector<Tensor> adjoint(nodes_.size());
  adjoint[root.index] = Tensor(value(root).shape(), {1.0});

  auto send = [&](std::uint32_t to, Tensor g) {
    if (!nodes_[to].requires_grad) return;
    accumulate(adjoint[to], g);
  };

  for (std::size_t idx = root.index + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.requires_grad || adjoint[idx].size() == 0) continue;
    const Tensor& g = adjoint[idx];
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;
      case Op::matvec: {
        const Tensor& w = nodes_[n.a].value;
        const Tensor& x = nodes_[n.b].value;
        const std::size_t m = w.rows();
        const std::size_t k = w.cols();
        if (nodes_[n.a].requires_grad) {
          Tensor dw(w.shape());
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) dw.at(i, j) = g[i] * x[j];
          send(n.a, std::move(dw));
        }
        if (nodes_[n.b].requires_grad) {
          Tensor dx(x.shape());
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) dx[j] += w.at(i, j) * g[i];
          send(n.b, std::move(dx));
        }
        break;
      }
      case Op::add:
        send(n.a, g);
        send(n.b, g);
        break;
      case Op::sub: {
        send(n.a, g);
        Tensor ng = g;
        for (double& v : ng.values()) v = -v;
        send(n.b, std::move(ng));
        break;
      }
      case Op::hadamard: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        Tensor da = g;
        Tensor db = g;
        for (std::size_t i = 0; i < g.size(); ++i) {
          da[i] *= b[i];
          db[i] *= a[i];
        }
        send(n.a, std::move(da));
        send(n.b, std::move(db));
        break;
      }
      case Op::tanh: {
        Tensor da = g;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] *= 1.0 - n.value[i] * n.value[i];
        send(n.a, std::move(da));
        break;
      }
      case Op::sigmoid: {
        Tensor da = g;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] *= n.value[i] * (1.0 - n.value[i]);
        send(n.a, std::move(da));
        break;
      }
      case Op::scale: {
        Tensor da = g;
        for (double& v : da.values()) v *= n.factor;
        send(n.a, std::move(da));
        break;
      }
      case Op::scale_by: {
        const Tensor& a = nodes_[n.a].value;
        const double s = nodes_[n.b].value[0];
        if (nodes_[n.a].requires_grad) {
          Tensor da = g;
          for (double& v : da.values()) v *= s;
          send(n.a, std::move(da));
        }
        if (nodes_[n.b].requires_grad) {
          double ds = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) ds += g[i] * a[i];
          send(n.b, Tensor(nodes_[n.b].value.shape(), {ds}));
        }
        break;
      }
      case Op::dot: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        Tensor da = b;
        Tensor db = a;
        for (double& v : da.values()) v *= g[0];
        for (double& v : db.values()) v *= g[0];
        send(n.a, std::move(da));
        send(n.b, std::move(db));
        break;
      }
      case Op::sum:
        for (std::uint32_t in : n.inputs) send(in, g);
        break;
      case Op::stack:
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          send(n.inputs[i], Tensor(nodes_[n.inputs[i]].value.shape(), {g[i]}));
        }
        break;
      case Op::element: {
        Tensor da(nodes_[n.a].value.shape());
        da[n.b] = g[0];
        send(n.a, std::move(da));
        break;
      }
      case Op::softmax: {
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * n.value[i];
        Tensor da = n.value;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] *= g[i] - inner;
        send(n.a, std::move(da));
        break;
      }
      case Op::log_softmax: {
        double total = 0.0;
        for (double v : g.values()) total += v;
        Tensor da = g;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] -= std::exp(n.value[i]) * total;
        send(n.a, std::move(da));
        break;
      }
      case Op::log_sigmoid: {
        const Tensor& x = nodes_[n.a].value;
        Tensor da = g;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] *= nd::sigmoid(-x[i]);
        send(n.a, std::move(da));
        break;
      }
    }
  }

  Gradients out;
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    if (nodes_[idx].op != Op::leaf) continue;
    const auto key = static_cast<std::uint32_t>(idx);
    if (idx <= root.index && adjoint[idx].size() != 0) {
      out.grads_.emplace(key, std::move(adjoint[idx]));
    } else {
      out.grads_.emplace(key, Tensor(nodes_[idx].value.shape()));
    }
  }
  return out;
}

double finite_diff_check(const TracedFunction& f, const ParamVector& theta, double step) {
  if (!(step > 0.0)) throw DomainError("finite_diff_check: step must be positive");

  Tape tape;
  std::vector<ValueId> leaves;
  leaves.reserve(theta.size());
  for (const Tensor& t : theta) leaves.push_back(tape.leaf(t));
  const ValueId root = f(tape, leaves);
  const double base = tape.value(root).item();
  if (!std::isfinite(base)) throw NumericError("finite_diff_check: f(theta) is not finite");
  const Gradients grads = tape.backward(root);

  ParamVector probe = theta;
  auto evaluate = [&]() {
    Tape t;
    std::vector<ValueId> ids;
    ids.reserve(probe.size());
    for (const Tensor& p : probe) ids.push_back(t.constant(p));
    const double v = t.value(f(t, ids)).item();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: perturbed f is not finite");
    return v;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const Tensor& g = grads[leaves[k]];
    for (std::size_t j = 0; j < probe[k].size(); ++j) {
      const double original = probe[k][j];
      probe[k][j] = original + step;
      const double plus = evaluate();
      probe[k][j] = original - step;
      const double minus = evaluate();
      probe[k][j] = original;
      const double fd = (plus - minus) / (2.0 * step);
      const double ad = g[j];
      const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace dgnn::nd
