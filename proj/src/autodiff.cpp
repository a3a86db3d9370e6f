#include "madapter/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ArrMap = Eigen::Map<Eigen::Array<Real, Eigen::Dynamic, 1>>;
using ConstArrMap = Eigen::Map<const Eigen::Array<Real, Eigen::Dynamic, 1>>;

MatMap as_mat(SeqTensor& t) {
  return MatMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
ConstMatMap as_mat(const SeqTensor& t) {
  return ConstMatMap(t.raw(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}
ArrMap as_arr(SeqTensor& t) {
  return ArrMap(t.raw(), static_cast<Eigen::Index>(t.size()));
}
ConstArrMap as_arr(const SeqTensor& t) {
  return ConstArrMap(t.raw(), static_cast<Eigen::Index>(t.size()));
}

void require_matrix(const char* op, const SeqTensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const char* op, const SeqTensor& a, const SeqTensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument("operands recorded on different tapes");
  }
}

std::atomic<const char*> g_sign_flip_op{nullptr};
thread_local bool t_kink_tracking = false;
thread_local std::uint64_t t_kink_digest = 0;

}  // namespace

namespace debug {
void set_sign_flip_fault(const char* op_name) { g_sign_flip_op.store(op_name); }
const char* sign_flip_fault() { return g_sign_flip_op.load(); }
void set_kink_tracking(bool on) { t_kink_tracking = on; }
std::uint64_t kink_digest() { return t_kink_digest; }
void reset_kink_digest() { t_kink_digest = 0; }
}  // namespace debug

// ---------------------------------------------------------------------------

Parameter::Parameter(std::string n, SeqTensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), Real(0.0)) {}

Parameter& ParamStore::add(std::string name, SeqTensor value) {
  if (index_.contains(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  index_.emplace(name, params_.size());
  return params_.emplace_back(std::move(name), std::move(value));
}

Parameter* ParamStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() noexcept {
  for (auto& p : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------

const SeqTensor& Var::value() const { return tape->value(id); }

Var Tape::constant(SeqTensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  Node n;
  n.op = "param";
  n.param = &p;
  n.needs_grad = recording_;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, SeqTensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(const char* op, SeqTensor value, std::span<const Var> inputs,
                 BackwardFn fn) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (recording_ && fn) {
    for (const auto& in : inputs) {
      if (in.tape != this) throw std::invalid_argument("operand recorded on another tape");
      if (nodes_[in.id].needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const SeqTensor& Tape::value(std::size_t id) const {
  const auto& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

SeqTensor& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (!n.has_grad) {
    n.grad = SeqTensor(n.value.shape(), Real(0.0));
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const SeqTensor& g) {
  if (!nodes_[id].needs_grad) return;
  auto& dst = grad(id);
  as_arr(dst) += as_arr(g);
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("loss recorded on another tape");
  if (!recording_) throw std::logic_error("backward on an inference-only tape");
  if (value(loss.id).size() != 1) {
    throw DimensionError("backward requires a scalar loss, got shape " +
                         shape_string(value(loss.id).shape()));
  }
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss.id)[0] += Real(1.0);
  const char* fault = debug::sign_flip_fault();
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || !n.has_grad) continue;
    if (fault && std::strcmp(fault, n.op) == 0) {
      SeqTensor flipped = n.grad;
      as_arr(flipped) = -as_arr(flipped);
      n.backward(*this, flipped);
    } else {
      n.backward(*this, n.grad);
    }
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  require_matrix("matmul", av);
  require_matrix("matmul", bv);
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  SeqTensor out({av.rows(), bv.cols()});
  as_mat(out).noalias() = as_mat(av) * as_mat(bv);
  return a.tape->record("matmul", std::move(out), {a, b},
                        [a, b](Tape& t, const SeqTensor& g) {
                          if (t.needs_grad(a.id)) {
                            as_mat(t.grad(a.id)).noalias() +=
                                as_mat(g) * as_mat(t.value(b.id)).transpose();
                          }
                          if (t.needs_grad(b.id)) {
                            as_mat(t.grad(b.id)).noalias() +=
                                as_mat(t.value(a.id)).transpose() * as_mat(g);
                          }
                        });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  require_matrix("matmul_nt", av);
  require_matrix("matmul_nt", bv);
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_nt: inner dimensions disagree for " +
                         shape_string(av.shape()) + " x " + shape_string(bv.shape()) +
                         "^T");
  }
  SeqTensor out({av.rows(), bv.rows()});
  as_mat(out).noalias() = as_mat(av) * as_mat(bv).transpose();
  return a.tape->record("matmul_nt", std::move(out), {a, b},
                        [a, b](Tape& t, const SeqTensor& g) {
                          if (t.needs_grad(a.id)) {
                            as_mat(t.grad(a.id)).noalias() +=
                                as_mat(g) * as_mat(t.value(b.id));
                          }
                          if (t.needs_grad(b.id)) {
                            as_mat(t.grad(b.id)).noalias() +=
                                as_mat(g).transpose() * as_mat(t.value(a.id));
                          }
                        });
}

Var transpose(Var a) {
  const auto& av = a.value();
  require_matrix("transpose", av);
  SeqTensor out({av.cols(), av.rows()});
  as_mat(out) = as_mat(av).transpose();
  return a.tape->record("transpose", std::move(out), {a},
                        [a](Tape& t, const SeqTensor& g) {
                          as_mat(t.grad(a.id)) += as_mat(g).transpose();
                        });
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  SeqTensor out = a.value();
  as_arr(out) += as_arr(b.value());
  return a.tape->record("add", std::move(out), {a, b},
                        [a, b](Tape& t, const SeqTensor& g) {
                          t.accumulate(a.id, g);
                          t.accumulate(b.id, g);
                        });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  SeqTensor out = a.value();
  as_arr(out) -= as_arr(b.value());
  return a.tape->record("sub", std::move(out), {a, b},
                        [a, b](Tape& t, const SeqTensor& g) {
                          t.accumulate(a.id, g);
                          if (t.needs_grad(b.id)) as_arr(t.grad(b.id)) -= as_arr(g);
                        });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  SeqTensor out = a.value();
  as_arr(out) *= as_arr(b.value());
  return a.tape->record("mul", std::move(out), {a, b},
                        [a, b](Tape& t, const SeqTensor& g) {
                          if (t.needs_grad(a.id)) {
                            as_arr(t.grad(a.id)) += as_arr(g) * as_arr(t.value(b.id));
                          }
                          if (t.needs_grad(b.id)) {
                            as_arr(t.grad(b.id)) += as_arr(g) * as_arr(t.value(a.id));
                          }
                        });
}

Var scale(Var a, Real factor) {
  SeqTensor out = a.value();
  as_arr(out) *= factor;
  return a.tape->record("scale", std::move(out), {a},
                        [a, factor](Tape& t, const SeqTensor& g) {
                          as_arr(t.grad(a.id)) += factor * as_arr(g);
                        });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  const auto& xv = x.value();
  const auto& bv = bias.value();
  require_matrix("add_bias", xv);
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) +
                         " does not match columns of " + shape_string(xv.shape()));
  }
  SeqTensor out = xv;
  Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(bv.raw(), static_cast<Eigen::Index>(bv.size()));
  as_mat(out).rowwise() += b;
  return x.tape->record("add_bias", std::move(out), {x, bias},
                        [x, bias](Tape& t, const SeqTensor& g) {
                          t.accumulate(x.id, g);
                          if (t.needs_grad(bias.id)) {
                            auto& gb = t.grad(bias.id);
                            Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(
                                gb.raw(), static_cast<Eigen::Index>(gb.size())) +=
                                as_mat(g).colwise().sum();
                          }
                        });
}

Var relu(Var x) {
  if (t_kink_tracking) {
    for (Real v : x.value().data()) t_kink_digest = (t_kink_digest ^ (v > Real(0.0))) * 0x100000001b3ull;
  }
  SeqTensor out = x.value();
  as_arr(out) = as_arr(out).max(Real(0.0));
  return x.tape->record("relu", std::move(out), {x},
                        [x](Tape& t, const SeqTensor& g) {
                          const auto& xv = t.value(x.id);
                          as_arr(t.grad(x.id)) +=
                              (as_arr(xv) > Real(0.0)).select(as_arr(g), Real(0.0));
                        });
}

// ---------------------------------------------------------------------------
// Structural

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
  Tape* tape = parts.front().tape;
  const std::size_t rows = parts.front().value().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p);
    require_matrix("concat_cols", p.value());
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.value().cols();
  }
  SeqTensor out({rows, total});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto w = p.value().cols();
    as_mat(out).middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(w)) =
        as_mat(p.value());
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record("concat_cols", std::move(out), parts,
                      [inputs](Tape& t, const SeqTensor& g) {
                        std::size_t off = 0;
                        for (const auto& p : inputs) {
                          const auto w = t.value(p.id).cols();
                          if (t.needs_grad(p.id)) {
                            as_mat(t.grad(p.id)) += as_mat(g).middleCols(
                                static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(w));
                          }
                          off += w;
                        }
                      });
}

Var slice_cols(Var x, std::size_t start, std::size_t width) {
  const auto& xv = x.value();
  require_matrix("slice_cols", xv);
  if (width == 0 || start + width > xv.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") out of range for " +
                         shape_string(xv.shape()));
  }
  SeqTensor out({xv.rows(), width});
  as_mat(out) = as_mat(xv).middleCols(static_cast<Eigen::Index>(start),
                                      static_cast<Eigen::Index>(width));
  return x.tape->record("slice_cols", std::move(out), {x},
                        [x, start, width](Tape& t, const SeqTensor& g) {
                          as_mat(t.grad(x.id)).middleCols(static_cast<Eigen::Index>(start),
                                                          static_cast<Eigen::Index>(width)) +=
                              as_mat(g);
                        });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const auto& tv = table.value();
  require_matrix("gather_rows", tv);
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  SeqTensor out({ids.size(), tv.cols()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                           " out of range for table " + shape_string(tv.shape()));
    }
    auto src = tv.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape->record("gather_rows", std::move(out), {table},
                            [table, idx](Tape& t, const SeqTensor& g) {
                              auto& gt = t.grad(table.id);
                              for (std::size_t i = 0; i < idx.size(); ++i) {
                                auto dst = gt.row(static_cast<std::size_t>(idx[i]));
                                auto src = g.row(i);
                                for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                              }
                            });
}

// ---------------------------------------------------------------------------
// Normalization and losses

Var softmax_rows(Var x) {
  const auto& xv = x.value();
  SeqTensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const Real mx = *std::max_element(row.begin(), row.end());
    Real total = Real(0.0);
    for (auto& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    const Real inv = Real(1.0) / total;
    for (auto& v : row) v *= inv;
  }
  const std::size_t self = x.tape->size();
  return x.tape->record("softmax_rows", std::move(out), {x},
                        [x, self](Tape& t, const SeqTensor& g) {
                          const auto& y = t.value(self);
                          auto& gx = t.grad(x.id);
                          for (std::size_t r = 0; r < y.rows(); ++r) {
                            auto yr = y.row(r);
                            auto gr = g.row(r);
                            Real dot = Real(0.0);
                            for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
                            auto dst = gx.row(r);
                            for (std::size_t c = 0; c < yr.size(); ++c) {
                              dst[c] += yr[c] * (gr[c] - dot);
                            }
                          }
                        });
}

Var layer_norm(Var x, Var gain, Var offset, Real eps) {
  require_same_tape(x, gain);
  require_same_tape(x, offset);
  const auto& xv = x.value();
  require_matrix("layer_norm", xv);
  const std::size_t rows = xv.rows();
  const std::size_t cols = xv.cols();
  if (gain.value().size() != cols || offset.value().size() != cols) {
    throw DimensionError("layer_norm: gain/offset " + shape_string(gain.shape()) + "/" +
                         shape_string(offset.shape()) + " do not match " +
                         shape_string(xv.shape()));
  }
  SeqTensor normalized({rows, cols});
  std::vector<Real> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = xv.row(r);
    Real mean = Real(0.0);
    for (Real v : in) mean += v;
    mean /= static_cast<Real>(cols);
    Real var = Real(0.0);
    for (Real v : in) var += (v - mean) * (v - mean);
    var /= static_cast<Real>(cols);
    inv_std[r] = Real(1.0) / std::sqrt(var + eps);
    auto dst = normalized.row(r);
    for (std::size_t c = 0; c < cols; ++c) dst[c] = (in[c] - mean) * inv_std[r];
  }
  SeqTensor out({rows, cols});
  const auto& gv = gain.value();
  const auto& ov = offset.value();
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = normalized.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) dst[c] = gv[c] * src[c] + ov[c];
  }
  return x.tape->record(
      "layer_norm", std::move(out), {x, gain, offset},
      [x, gain, offset, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          Tape& t, const SeqTensor& g) {
        const std::size_t rows = normalized.rows();
        const std::size_t cols = normalized.cols();
        if (t.needs_grad(gain.id)) {
          auto& gg = t.grad(gain.id);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) gg[c] += g.at(r, c) * normalized.at(r, c);
          }
        }
        if (t.needs_grad(offset.id)) {
          auto& go = t.grad(offset.id);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) go[c] += g.at(r, c);
          }
        }
        if (t.needs_grad(x.id)) {
          const auto& gv = t.value(gain.id);
          auto& gx = t.grad(x.id);
          std::vector<Real> dxhat(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            Real mean_d = Real(0.0);
            Real mean_dx = Real(0.0);
            for (std::size_t c = 0; c < cols; ++c) {
              dxhat[c] = g.at(r, c) * gv[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * normalized.at(r, c);
            }
            mean_d /= static_cast<Real>(cols);
            mean_dx /= static_cast<Real>(cols);
            for (std::size_t c = 0; c < cols; ++c) {
              gx.at(r, c) +=
                  inv_std[r] * (dxhat[c] - mean_d - normalized.at(r, c) * mean_dx);
            }
          }
        }
      });
}

Var sum(Var x) {
  double acc = 0.0;
  for (Real v : x.value().data()) acc += v;
  const auto total = static_cast<Real>(acc);
  return x.tape->record("sum", SeqTensor::scalar(total), {x},
                        [x](Tape& t, const SeqTensor& g) {
                          as_arr(t.grad(x.id)) += g[0];
                        });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const auto& lv = logits.value();
  require_matrix("cross_entropy", lv);
  if (targets.size() != lv.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(lv.shape()));
  }
  SeqTensor probs = lv;
  double loss = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const int target = targets[r];
    if (target < 0 || static_cast<std::size_t>(target) >= lv.cols()) {
      throw DimensionError("cross_entropy: target id " + std::to_string(target) +
                           " out of range for " + std::to_string(lv.cols()) + " classes");
    }
    auto row = probs.row(r);
    const Real mx = *std::max_element(row.begin(), row.end());
    Real total = Real(0.0);
    for (auto& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (auto& v : row) v /= total;
    loss -= static_cast<double>(lv.at(r, static_cast<std::size_t>(target)) - mx) -
            std::log(static_cast<double>(total));
  }
  const Real mean_loss = static_cast<Real>(loss / static_cast<double>(lv.rows()));
  std::vector<int> tgt(targets.begin(), targets.end());
  return logits.tape->record(
      "cross_entropy", SeqTensor::scalar(mean_loss), {logits},
      [logits, tgt, probs = std::move(probs)](Tape& t, const SeqTensor& g) {
        auto& gl = t.grad(logits.id);
        const Real coef = g[0] / static_cast<Real>(probs.rows());
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          auto p = probs.row(r);
          auto dst = gl.row(r);
          for (std::size_t c = 0; c < p.size(); ++c) dst[c] += coef * p[c];
          dst[static_cast<std::size_t>(tgt[r])] -= coef;
        }
      });
}

// ---------------------------------------------------------------------------
// Convolution

Var conv1d(Var x, Var weight, Var bias, const PoolConfig& cfg) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  require_matrix("conv1d", xv);
  if (wv.rank() != 3) {
    throw DimensionError("conv1d: weight must be [C_out x C_in x k], got " +
                         shape_string(wv.shape()));
  }
  const std::size_t length = xv.rows();
  const std::size_t c_in = xv.cols();
  const std::size_t c_out = wv.dim(0);
  const std::size_t k = wv.dim(2);
  if (wv.dim(1) != c_in || k != cfg.kernel) {
    throw DimensionError("conv1d: weight " + shape_string(wv.shape()) +
                         " incompatible with input " + shape_string(xv.shape()) +
                         " and kernel " + std::to_string(cfg.kernel));
  }
  if (bv.size() != c_out) {
    throw DimensionError("conv1d: bias " + shape_string(bv.shape()) + " for " +
                         std::to_string(c_out) + " output channels");
  }
  const std::size_t out_length = out_len(length, cfg);
  const std::size_t width = c_in * k;

  // Unfold: cols[t, ci*k + j] = x[t*s + j - p, ci], zero outside [0, L).
  SeqTensor cols({out_length, width});
  for (std::size_t t = 0; t < out_length; ++t) {
    auto dst = cols.row(t);
    for (std::size_t j = 0; j < k; ++j) {
      const auto pos = static_cast<std::ptrdiff_t>(t * cfg.stride + j) -
                       static_cast<std::ptrdiff_t>(cfg.padding);
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(length)) continue;
      auto src = xv.row(static_cast<std::size_t>(pos));
      for (std::size_t ci = 0; ci < c_in; ++ci) dst[ci * k + j] = src[ci];
    }
  }
  ConstMatMap w_flat(wv.raw(), static_cast<Eigen::Index>(c_out),
                     static_cast<Eigen::Index>(width));
  SeqTensor out({out_length, c_out});
  as_mat(out).noalias() = as_mat(cols) * w_flat.transpose();
  Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(bv.raw(), static_cast<Eigen::Index>(c_out));
  as_mat(out).rowwise() += b;

  return x.tape->record(
      "conv1d", std::move(out), {x, weight, bias},
      [x, weight, bias, cfg, length, c_in, c_out, k, cols = std::move(cols)](
          Tape& t, const SeqTensor& g) {
        const auto width = static_cast<Eigen::Index>(c_in * k);
        if (t.needs_grad(weight.id)) {
          auto& gw = t.grad(weight.id);
          MatMap(gw.raw(), static_cast<Eigen::Index>(c_out), width).noalias() +=
              as_mat(g).transpose() * as_mat(cols);
        }
        if (t.needs_grad(bias.id)) {
          auto& gb = t.grad(bias.id);
          Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(gb.raw(), static_cast<Eigen::Index>(c_out)) +=
              as_mat(g).colwise().sum();
        }
        if (t.needs_grad(x.id)) {
          const auto& wv = t.value(weight.id);
          RowMat dcols = as_mat(g) *
                         ConstMatMap(wv.raw(), static_cast<Eigen::Index>(c_out), width);
          auto& gx = t.grad(x.id);
          for (std::size_t o = 0; o < g.rows(); ++o) {
            for (std::size_t j = 0; j < k; ++j) {
              const auto pos = static_cast<std::ptrdiff_t>(o * cfg.stride + j) -
                               static_cast<std::ptrdiff_t>(cfg.padding);
              if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(length)) continue;
              auto dst = gx.row(static_cast<std::size_t>(pos));
              for (std::size_t ci = 0; ci < c_in; ++ci) {
                dst[ci] += dcols(static_cast<Eigen::Index>(o),
                                 static_cast<Eigen::Index>(ci * k + j));
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------

std::string to_string(const PoolConfig& cfg) {
  return "k" + std::to_string(cfg.kernel) + "s" + std::to_string(cfg.stride) + "p" +
         std::to_string(cfg.padding);
}

std::size_t out_len(std::size_t length, const PoolConfig& cfg) {
  if (cfg.kernel == 0 || cfg.stride == 0) {
    throw std::invalid_argument("pool config " + to_string(cfg) +
                                ": kernel and stride must be positive");
  }
  if (length + 2 * cfg.padding < cfg.kernel) {
    throw LengthError("sequence too short for kernel: length " + std::to_string(length) +
                      " with " + to_string(cfg));
  }
  return (length + 2 * cfg.padding - cfg.kernel) / cfg.stride + 1;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
