#include "madapter/baselines.hpp"

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

CnnAdapterWeights make_cnn_adapter(ParamStore& store, const std::string& prefix,
                                   std::size_t dim, Rng& rng, std::size_t stages,
                                   PoolConfig pool) {
  if (stages == 0) throw std::invalid_argument("cnn adapter needs at least one stage");
  CnnAdapterWeights w;
  w.pool = pool;
  for (std::size_t i = 0; i < stages; ++i) {
    w.stages.push_back(
        make_conv(store, prefix + "." + std::to_string(i), dim, dim, pool.kernel, rng));
  }
  return w;
}

Var cnn_adapter_forward(Tape& tape, Var x, const CnnAdapterWeights& w,
                        const LayerHook& hook) {
  Var h = x;
  for (std::size_t i = 0; i < w.stages.size(); ++i) {
    if (i > 0) h = relu(h);
    try {
      h = apply_conv(tape, h, w.stages[i], w.pool);
    } catch (const LengthError& e) {
      throw LengthError("cnn adapter stage " + std::to_string(i) + ": " + e.what());
    }
    if (hook) h = hook(i, h);
  }
  return h;
}

std::size_t cnn_adapter_output_length(std::size_t length, const CnnAdapterWeights& w) {
  for (std::size_t i = 0; i < w.stages.size(); ++i) length = out_len(length, w.pool);
  return length;
}

TransformerAdapterWeights make_transformer_adapter(ParamStore& store,
                                                   const std::string& prefix,
                                                   std::size_t dim, std::size_t heads,
                                                   std::size_t ffn_width, Rng& rng,
                                                   std::size_t blocks) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("embedding dim " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  TransformerAdapterWeights w;
  w.heads = heads;
  for (std::size_t i = 0; i < blocks; ++i) {
    w.blocks.push_back(
        make_transformer_block(store, prefix + "." + std::to_string(i), dim, ffn_width, rng));
  }
  return w;
}

Var transformer_adapter_forward(Tape& tape, Var x, const TransformerAdapterWeights& w,
                                const LayerHook& hook) {
  Var h = x;
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    h = transformer_block_forward(tape, h, w.blocks[i], w.heads);
    if (hook) h = hook(i, h);
  }
  return h;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
