#pragma once

#include <span>
#include <string>
#include <vector>

#include "madapter/adapter_block.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// Strided convolutional length adapter: conv stages with ReLU between.
struct CnnAdapterWeights {
  PoolConfig pool{3, 2, 1};
  std::vector<ConvWeights> stages;
};

CnnAdapterWeights make_cnn_adapter(ParamStore& store, const std::string& prefix,
                                   std::size_t dim, Rng& rng, std::size_t stages = 3,
                                   PoolConfig pool = {3, 2, 1});

Var cnn_adapter_forward(Tape& tape, Var x, const CnnAdapterWeights& w,
                        const LayerHook& hook = {});

std::size_t cnn_adapter_output_length(std::size_t length, const CnnAdapterWeights& w);

/// Stack of standard post-LN blocks; sequence length is preserved.
struct TransformerAdapterWeights {
  std::size_t heads = 4;
  std::vector<TransformerBlockWeights> blocks;
};

TransformerAdapterWeights make_transformer_adapter(ParamStore& store,
                                                   const std::string& prefix,
                                                   std::size_t dim, std::size_t heads,
                                                   std::size_t ffn_width, Rng& rng,
                                                   std::size_t blocks = 3);

Var transformer_adapter_forward(Tape& tape, Var x, const TransformerAdapterWeights& w,
                                const LayerHook& hook = {});

}  // namespace MADAPTER_NS
}  // namespace madapter
