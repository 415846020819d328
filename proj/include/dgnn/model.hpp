#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "dgnn/ndmath.hpp"

namespace dgnn {

using nd::Tensor;
using nd::ValueId;

enum class DecayKind { reciprocal_log };

struct HyperParams {
  std::size_t dim = 64;
  double tau = 50.0;  // days
  DecayKind decay = DecayKind::reciprocal_log;
  bool propagation_enabled = true;
  bool time_intervals_enabled = true;
  bool attention_enabled = true;

  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

// Which prop transform to use, by (interacting role, neighbor role).
enum class PropKind : std::size_t {
  src_to_sources = 0,
  src_to_targets = 1,
  dst_to_sources = 2,
  dst_to_targets = 3,
};

template <class T>
struct BasicGate {
  T w;  // applied to e(t)
  T u;  // applied to h(t-1)
  T b;
};

template <class T>
struct BasicUpdateUnit {
  T decomp_w;  // short-term memory extraction
  T decomp_b;
  BasicGate<T> forget;
  BasicGate<T> input;
  BasicGate<T> output;
  BasicGate<T> candidate;
};

// Every learnable tensor of the model. Instantiated with Tensor for storage and
// with ValueId for the values bound on a tape.
template <class T>
struct BasicParams {
  T interact_w_src;
  T interact_w_dst;
  T interact_b;
  BasicUpdateUnit<T> source_update;
  BasicUpdateUnit<T> target_update;
  T merge_w_src;
  T merge_w_dst;
  T merge_b;
  std::array<T, 4> prop;
  T proj_src;
  T proj_dst;
  T classifier;  // num_classes x dim

  const T& prop_for(PropKind kind) const { return prop[static_cast<std::size_t>(kind)]; }
};

// Calls f(name, field_of_each...) for every parameter, in a fixed order.
template <class F, class... P>
void visit_params(F&& f, P&... params) {
  auto unit = [&](const std::string& prefix, auto&... units) {
    f(prefix + ".decomp_w", units.decomp_w...);
    f(prefix + ".decomp_b", units.decomp_b...);
    auto gate = [&](const std::string& g, auto&... gates) {
      f(prefix + "." + g + ".w", gates.w...);
      f(prefix + "." + g + ".u", gates.u...);
      f(prefix + "." + g + ".b", gates.b...);
    };
    gate("forget", units.forget...);
    gate("input", units.input...);
    gate("output", units.output...);
    gate("candidate", units.candidate...);
  };
  f("interact.w_src", params.interact_w_src...);
  f("interact.w_dst", params.interact_w_dst...);
  f("interact.b", params.interact_b...);
  unit("source_update", params.source_update...);
  unit("target_update", params.target_update...);
  f("merge.w_src", params.merge_w_src...);
  f("merge.w_dst", params.merge_w_dst...);
  f("merge.b", params.merge_b...);
  f("prop.src_to_sources", params.prop[0]...);
  f("prop.src_to_targets", params.prop[1]...);
  f("prop.dst_to_sources", params.prop[2]...);
  f("prop.dst_to_targets", params.prop[3]...);
  f("lp.proj_src", params.proj_src...);
  f("lp.proj_dst", params.proj_dst...);
  f("nc.classifier", params.classifier...);
}

using ModelParams = BasicParams<Tensor>;
using ParamVars = BasicParams<ValueId>;
using UpdateUnitParams = BasicUpdateUnit<Tensor>;
using UpdateUnitVars = BasicUpdateUnit<ValueId>;

inline constexpr std::size_t kParamTensorCount = 41;

std::size_t param_tensor_count(const ModelParams& p);
std::size_t param_scalar_count(const ModelParams& p);

// Matrices uniform on (-1/sqrt(dim), 1/sqrt(dim)); biases zero.
ModelParams init_params(std::size_t dim, std::size_t num_classes, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);
bool all_finite(const ModelParams& p);
bool operator==(const ModelParams& a, const ModelParams& b);

// Records every parameter on the tape, as leaves or as constants.
ParamVars bind_params(nd::Tape& tape, const ModelParams& p, bool trainable);
ModelParams collect_gradients(const nd::Gradients& grads, const ParamVars& vars);

// g(dt) = 1 / ln(e + dt). Throws DomainError for negative dt.
double decay_g(double dt, DecayKind kind = DecayKind::reciprocal_log);
// 1 when dt <= tau, else 0.
int filter_h(double dt, double tau);

// --- traced units --------------------------------------------------------

ValueId interact(nd::Tape& tape, const ParamVars& p, ValueId u_src, ValueId u_dst);
// C* = (C - C_I) + C_I * decay, with C_I = tanh(W_d C + b_d).
ValueId time_adjust_cell(nd::Tape& tape, const UpdateUnitVars& unit, ValueId c, double decay);
// Returns (C_new, h_new).
std::pair<ValueId, ValueId> lstm_step(nd::Tape& tape, const UpdateUnitVars& unit, ValueId c_star,
                                      ValueId h_prev, ValueId e);
ValueId merge(nd::Tape& tape, const ParamVars& p, ValueId h_src, ValueId h_dst);

// --- value-level wrappers ------------------------------------------------

Tensor interact(const Tensor& u_src, const Tensor& u_dst, const ModelParams& p);
Tensor time_adjust_cell(const Tensor& c, double dt, const UpdateUnitParams& unit, const HyperParams& hp);
std::pair<Tensor, Tensor> lstm_step(const Tensor& c_star, const Tensor& h_prev, const Tensor& e,
                                    const UpdateUnitParams& unit);
Tensor merge(const Tensor& h_src, const Tensor& h_dst, const ModelParams& p);
// Softmax of u_x . u_center over the neighbors; uniform when attention is
// disabled. Throws DomainError for an empty neighbor list.
Tensor attention_weights(std::span<const Tensor> u_neighbors, const Tensor& u_center, bool attention_enabled);

}  // namespace dgnn
