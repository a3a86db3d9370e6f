#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "madapter/pooled_attention.hpp"
#include "madapter/transformer_block.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// Where the length-reducing pooling sits inside a layer.
enum class PoolPosition {
  Inside,           // Q/K/V pooled inside MPSA, residual pooled by Pool_X
  BeforeAttention,  // b4p: pool x, then a standard block
  BeforeFfn,        // b4f: standard MSA, pool attention output and residual
  AfterOutput,      // b4o: standard block, then pool its output
};

std::string to_string(PoolPosition p);
/// Accepts "inside", "b4p", "b4f", "b4o".
PoolPosition parse_pool_position(std::string_view text);

struct AdapterConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t ffn_width = 0;  // 0 means 4·dim
  PoolConfig pool{3, 2, 1};
  PoolPosition position = PoolPosition::Inside;
  std::size_t layers = 3;

  std::size_t resolved_ffn_width() const { return ffn_width ? ffn_width : 4 * dim; }
  MpsaConfig mpsa() const { return MpsaConfig::uniform(dim, heads, pool); }
  void validate() const;

  /// One layer, k=8 s=8 p=4.
  static AdapterConfig mada1(std::size_t dim = 64, std::size_t heads = 4);
  /// Three layers, k=3 s=2 p=1.
  static AdapterConfig mada3(std::size_t dim = 64, std::size_t heads = 4);
};

/// Stride cap for the adapter presets.
inline constexpr std::size_t kMaxPresetStride = 8;

struct AdapterLayerWeights {
  MpsaWeights mpsa;  // pool_q/k/v are only allocated for PoolPosition::Inside
  ConvWeights pool_x;
  LayerNormWeights ln1;
  LayerNormWeights ln2;
  FfnWeights ffn;

  TransformerBlockWeights block() const {
    return {mpsa.w_q, mpsa.w_k, mpsa.w_v, ln1, ln2, ffn};
  }
};

AdapterLayerWeights make_adapter_layer(ParamStore& store, const std::string& prefix,
                                       const AdapterConfig& cfg, Rng& rng);
std::vector<AdapterLayerWeights> make_adapter_stack(ParamStore& store,
                                                    const std::string& prefix,
                                                    const AdapterConfig& cfg, Rng& rng);

/// Optional observation of one layer's internals.
struct LayerTrace {
  SeqTensor pre_ln1;                // H + X' (Inside) before the first layer norm
  std::vector<SeqTensor> attention;  // per-head attention matrices
};

Var adapter_layer_forward(Tape& tape, Var x, const AdapterLayerWeights& w,
                          const AdapterConfig& cfg, LayerTrace* trace = nullptr);

/// Inside variant with attention mixing bypassed: H is replaced by the
/// pooled value path V'. Throws std::logic_error for other positions.
Var local_only_forward(Tape& tape, Var x, const AdapterLayerWeights& w,
                       const AdapterConfig& cfg, LayerTrace* trace = nullptr);

/// Called on each layer output; may return a replacement.
using LayerHook = std::function<Var(std::size_t layer, Var out)>;

struct StackOptions {
  bool local_only = false;
  LayerHook hook;
};

Var adapter_stack_forward(Tape& tape, Var x, std::span<const AdapterLayerWeights> layers,
                          const AdapterConfig& cfg, const StackOptions& opts = {});

/// Length after `cfg.layers` applications of out_len.
std::size_t adapter_output_length(std::size_t length, const AdapterConfig& cfg);

}  // namespace MADAPTER_NS
}  // namespace madapter
