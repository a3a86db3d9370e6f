#pragma once

#include <cstdint>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "madapter/pool_config.hpp"
#include "madapter/tensor.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// A trainable tensor with a gradient accumulator of identical shape.
struct Parameter {
  std::string name;
  SeqTensor value;
  SeqTensor grad;

  Parameter(std::string n, SeqTensor v);
  void zero_grad() noexcept { grad.fill(0.0f); }
};

/// Owns the parameters of one model. Insertion order is the canonical
/// order for checkpoints and optimizer state; names are unique.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& add(std::string name, SeqTensor value);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() noexcept;

 private:
  std::deque<Parameter> params_;  // deque keeps Parameter addresses stable
  std::unordered_map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const SeqTensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Ordered record of differentiable operations. Backward replays the
/// recorded operations in exact reverse order. A tape in inference mode
/// keeps values only.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const SeqTensor& grad_out)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }

  Var constant(SeqTensor value);
  /// Leaf bound to a parameter; backward accumulates into param.grad.
  Var param(Parameter& p);

  /// Records an operation result. The node takes part in backward only if
  /// some input does; `fn` is then called with the node's gradient.
  Var record(const char* op, SeqTensor value, std::initializer_list<Var> inputs,
             BackwardFn fn);
  Var record(const char* op, SeqTensor value, std::span<const Var> inputs,
             BackwardFn fn);

  const SeqTensor& value(std::size_t id) const;
  /// Gradient buffer of a node (allocated on first use).
  SeqTensor& grad(std::size_t id);
  void accumulate(std::size_t id, const SeqTensor& g);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable
  /// parameter. Throws DimensionError when `loss` is not a scalar.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }

 private:
  struct Node {
    const char* op = "";
    SeqTensor value;
    SeqTensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };
  bool recording_;
  std::vector<Node> nodes_;
};

namespace debug {
/// Test hook: negate the gradient flowing into every recorded operation of
/// the given name during backward. nullptr disables the fault.
void set_sign_flip_fault(const char* op_name);
const char* sign_flip_fault();

/// While enabled on the calling thread, relu folds the sign pattern of its
/// input into a running digest, so callers can tell whether two forward
/// passes took the same piecewise-linear branch.
void set_kink_tracking(bool on);
std::uint64_t kink_digest();
void reset_kink_digest();
}  // namespace debug

// ---------------------------------------------------------------------------
// Differentiable operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
/// a · bᵀ without materializing the transpose.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real factor);
/// x[m×n] + bias[n] broadcast over rows.
Var add_bias(Var x, Var bias);
Var relu(Var x);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t width);
/// Rows of `table` selected by `ids`.
Var gather_rows(Var table, std::span<const int> ids);

/// Row-wise softmax, max-subtracted for stability.
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var offset, Real eps = Real(1e-5));

Var sum(Var x);
/// Mean softmax cross-entropy of logit rows against target ids.
Var cross_entropy(Var logits, std::span<const int> targets);

/// Zero-padded strided cross-correlation along the length axis.
/// x: [L×C_in], weight: [C_out×C_in×k], bias: [C_out] → [L'×C_out].
Var conv1d(Var x, Var weight, Var bias, const PoolConfig& cfg);

}  // namespace MADAPTER_NS
}  // namespace madapter
