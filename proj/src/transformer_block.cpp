#include "madapter/transformer_block.hpp"

#include "madapter/pooled_attention.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

LayerNormWeights make_layer_norm(ParamStore& store, const std::string& prefix,
                                 std::size_t dim) {
  return {&store.add(prefix + ".gain", SeqTensor({dim}, 1.0f)),
          &store.add(prefix + ".offset", SeqTensor({dim}, 0.0f))};
}

FfnWeights make_ffn(ParamStore& store, const std::string& prefix, std::size_t dim,
                    std::size_t width, Rng& rng) {
  FfnWeights f;
  f.w1 = &store.add(prefix + ".w1", uniform_init({dim, width}, dim, rng));
  f.b1 = &store.add(prefix + ".b1", uniform_init({width}, dim, rng));
  f.w2 = &store.add(prefix + ".w2", uniform_init({width, dim}, width, rng));
  f.b2 = &store.add(prefix + ".b2", uniform_init({dim}, width, rng));
  return f;
}

Var apply_layer_norm(Tape& tape, Var x, const LayerNormWeights& ln) {
  return layer_norm(x, tape.param(*ln.gain), tape.param(*ln.offset));
}

Var affine(Tape& tape, Var x, Parameter& weight, Parameter& bias) {
  return add_bias(matmul(x, tape.param(weight)), tape.param(bias));
}

Var apply_ffn(Tape& tape, Var x, const FfnWeights& ffn) {
  return affine(tape, relu(affine(tape, x, *ffn.w1, *ffn.b1)), *ffn.w2, *ffn.b2);
}

TransformerBlockWeights make_transformer_block(ParamStore& store, const std::string& prefix,
                                               std::size_t dim, std::size_t ffn_width,
                                               Rng& rng) {
  TransformerBlockWeights w;
  w.w_q = &store.add(prefix + ".attn.w_q", uniform_init({dim, dim}, dim, rng));
  w.w_k = &store.add(prefix + ".attn.w_k", uniform_init({dim, dim}, dim, rng));
  w.w_v = &store.add(prefix + ".attn.w_v", uniform_init({dim, dim}, dim, rng));
  w.ln1 = make_layer_norm(store, prefix + ".ln1", dim);
  w.ffn = make_ffn(store, prefix + ".ffn", dim, ffn_width, rng);
  w.ln2 = make_layer_norm(store, prefix + ".ln2", dim);
  return w;
}

Var self_attention(Tape& tape, Var x, Parameter& w_q, Parameter& w_k, Parameter& w_v,
                   std::size_t heads) {
  return multi_head_attention(matmul(x, tape.param(w_q)), matmul(x, tape.param(w_k)),
                              matmul(x, tape.param(w_v)), heads);
}

Var transformer_block_forward(Tape& tape, Var x, const TransformerBlockWeights& w,
                              std::size_t heads) {
  Var h = self_attention(tape, x, *w.w_q, *w.w_k, *w.w_v, heads);
  Var z = apply_layer_norm(tape, add(h, x), w.ln1);
  return apply_layer_norm(tape, add(apply_ffn(tape, z, w.ffn), z), w.ln2);
}

}  // namespace MADAPTER_NS
}  // namespace madapter
