#pragma once

#include <string>

#include "madapter/autodiff.hpp"
#include "madapter/init.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

struct LayerNormWeights {
  Parameter* gain = nullptr;
  Parameter* offset = nullptr;
};

/// Two affine maps with a ReLU between.
struct FfnWeights {
  Parameter* w1 = nullptr;  // [D×W]
  Parameter* b1 = nullptr;  // [W]
  Parameter* w2 = nullptr;  // [W×D]
  Parameter* b2 = nullptr;  // [D]
};

LayerNormWeights make_layer_norm(ParamStore& store, const std::string& prefix,
                                 std::size_t dim);
FfnWeights make_ffn(ParamStore& store, const std::string& prefix, std::size_t dim,
                    std::size_t width, Rng& rng);

Var apply_layer_norm(Tape& tape, Var x, const LayerNormWeights& ln);
Var apply_ffn(Tape& tape, Var x, const FfnWeights& ffn);
Var affine(Tape& tape, Var x, Parameter& weight, Parameter& bias);

/// Standard post-LN encoder block: multi-head self-attention (no output
/// projection) and FFN, each wrapped by residual add and layer norm.
struct TransformerBlockWeights {
  Parameter* w_q = nullptr;
  Parameter* w_k = nullptr;
  Parameter* w_v = nullptr;
  LayerNormWeights ln1;
  LayerNormWeights ln2;
  FfnWeights ffn;
};

TransformerBlockWeights make_transformer_block(ParamStore& store, const std::string& prefix,
                                               std::size_t dim, std::size_t ffn_width,
                                               Rng& rng);

/// Plain MSA: per-head softmax(Q Kᵀ/sqrt(d)) V on unpooled projections.
Var self_attention(Tape& tape, Var x, Parameter& w_q, Parameter& w_k, Parameter& w_v,
                   std::size_t heads);

Var transformer_block_forward(Tape& tape, Var x, const TransformerBlockWeights& w,
                              std::size_t heads);

}  // namespace MADAPTER_NS
}  // namespace madapter
