#include "madapter/pooled_attention.hpp"

#include <cmath>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

MpsaConfig MpsaConfig::uniform(std::size_t embed_dim, std::size_t heads, PoolConfig pool) {
  return {embed_dim, heads, pool, pool, pool};
}

void MpsaConfig::validate() const {
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    throw std::invalid_argument("embedding dim " + std::to_string(embed_dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
}

std::size_t MpsaConfig::pooled_length(std::size_t length) const {
  const auto lq = out_len(length, pool_q);
  const auto lk = out_len(length, pool_k);
  const auto lv = out_len(length, pool_v);
  if (lq != lk || lk != lv) {
    throw DimensionError("pool configs give unequal lengths " + std::to_string(lq) + "/" +
                         std::to_string(lk) + "/" + std::to_string(lv) + " for L=" +
                         std::to_string(length));
  }
  return lq;
}

MpsaWeights make_mpsa_weights(ParamStore& store, const std::string& prefix,
                              const MpsaConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto d = cfg.embed_dim;
  MpsaWeights w;
  w.w_q = &store.add(prefix + ".w_q", uniform_init({d, d}, d, rng));
  w.w_k = &store.add(prefix + ".w_k", uniform_init({d, d}, d, rng));
  w.w_v = &store.add(prefix + ".w_v", uniform_init({d, d}, d, rng));
  w.pool_q = make_conv(store, prefix + ".pool_q", d, d, cfg.pool_q.kernel, rng);
  w.pool_k = make_conv(store, prefix + ".pool_k", d, d, cfg.pool_k.kernel, rng);
  w.pool_v = make_conv(store, prefix + ".pool_v", d, d, cfg.pool_v.kernel, rng);
  return w;
}

Qkv project_qkv(Tape& tape, Var x, const MpsaWeights& w) {
  return {matmul(x, tape.param(*w.w_q)), matmul(x, tape.param(*w.w_k)),
          matmul(x, tape.param(*w.w_v))};
}

Qkv pool_qkv(Tape& tape, const Qkv& qkv, const MpsaWeights& w, const MpsaConfig& cfg) {
  cfg.pooled_length(qkv.q.rows());
  return {apply_conv(tape, qkv.q, w.pool_q, cfg.pool_q),
          apply_conv(tape, qkv.k, w.pool_k, cfg.pool_k),
          apply_conv(tape, qkv.v, w.pool_v, cfg.pool_v)};
}

Var multi_head_attention(Var q, Var k, Var v, std::size_t heads, const SeqTensor* mask,
                         std::vector<SeqTensor>* probs) {
  const auto dim = q.cols();
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("embedding dim " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (k.cols() != dim || v.cols() != dim || k.rows() != v.rows()) {
    throw DimensionError("attention operands disagree: q " + shape_string(q.shape()) +
                         ", k " + shape_string(k.shape()) + ", v " +
                         shape_string(v.shape()));
  }
  Tape& tape = *q.tape;
  const auto d = dim / heads;
  const Real inv_sqrt_d = Real(1.0) / std::sqrt(static_cast<Real>(d));
  std::optional<Var> mask_var;
  if (mask) mask_var = tape.constant(*mask);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t j = 0; j < heads; ++j) {
    Var qj = heads == 1 ? q : slice_cols(q, j * d, d);
    Var kj = heads == 1 ? k : slice_cols(k, j * d, d);
    Var vj = heads == 1 ? v : slice_cols(v, j * d, d);
    Var scores = scale(matmul_nt(qj, kj), inv_sqrt_d);
    if (mask_var) scores = add(scores, *mask_var);
    Var attn = softmax_rows(scores);
    if (probs) probs->push_back(attn.value());
    outs.push_back(matmul(attn, vj));
  }
  return heads == 1 ? outs.front() : concat_cols(outs);
}

Var pooled_attention(const Qkv& pooled, const MpsaConfig& cfg, std::vector<SeqTensor>* probs) {
  cfg.validate();
  const auto& qs = pooled.q.shape();
  if (qs != pooled.k.shape() || qs != pooled.v.shape() || pooled.q.cols() != cfg.embed_dim) {
    throw DimensionError("pooled Q'/K'/V' must share shape [L' x " +
                         std::to_string(cfg.embed_dim) + "], got " + shape_string(qs) + ", " +
                         shape_string(pooled.k.shape()) + ", " +
                         shape_string(pooled.v.shape()));
  }
  return multi_head_attention(pooled.q, pooled.k, pooled.v, cfg.heads, nullptr, probs);
}

Var mpsa_forward(Tape& tape, Var x, const MpsaWeights& w, const MpsaConfig& cfg,
                 std::vector<SeqTensor>* probs) {
  cfg.validate();
  if (x.cols() != cfg.embed_dim) {
    throw DimensionError("mpsa input " + shape_string(x.shape()) + " does not have embedding dim " +
                         std::to_string(cfg.embed_dim));
  }
  return pooled_attention(pool_qkv(tape, project_qkv(tape, x, w), w, cfg), cfg, probs);
}

}  // namespace MADAPTER_NS
}  // namespace madapter
