#pragma once

#include <optional>
#include <string>
#include <vector>

#include "madapter/autodiff.hpp"
#include "madapter/init.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

struct MpsaConfig {
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  PoolConfig pool_q;
  PoolConfig pool_k;
  PoolConfig pool_v;

  std::size_t head_dim() const { return embed_dim / heads; }

  /// One geometry for all three pools.
  static MpsaConfig uniform(std::size_t embed_dim, std::size_t heads, PoolConfig pool);

  /// Throws std::invalid_argument unless D is divisible by h.
  void validate() const;
  /// Pooled length shared by Q', K', V'. Throws DimensionError when the
  /// three pools disagree for this input length.
  std::size_t pooled_length(std::size_t length) const;
};

struct MpsaWeights {
  Parameter* w_q = nullptr;
  Parameter* w_k = nullptr;
  Parameter* w_v = nullptr;
  ConvWeights pool_q;
  ConvWeights pool_k;
  ConvWeights pool_v;
};

MpsaWeights make_mpsa_weights(ParamStore& store, const std::string& prefix,
                              const MpsaConfig& cfg, Rng& rng);

struct Qkv {
  Var q;
  Var k;
  Var v;
};

Qkv project_qkv(Tape& tape, Var x, const MpsaWeights& w);
Qkv pool_qkv(Tape& tape, const Qkv& qkv, const MpsaWeights& w, const MpsaConfig& cfg);

/// Per head j over columns [j·d, (j+1)·d):
/// softmax(Q_j K_jᵀ / sqrt(d)) V_j, heads concatenated. `mask`, when given,
/// is added to every head's score matrix. Attention matrices are appended
/// to `probs` when non-null.
Var multi_head_attention(Var q, Var k, Var v, std::size_t heads,
                         const SeqTensor* mask = nullptr,
                         std::vector<SeqTensor>* probs = nullptr);

/// Attention over already pooled Q', K', V' of identical shape.
Var pooled_attention(const Qkv& pooled, const MpsaConfig& cfg,
                     std::vector<SeqTensor>* probs = nullptr);

Var mpsa_forward(Tape& tape, Var x, const MpsaWeights& w, const MpsaConfig& cfg,
                 std::vector<SeqTensor>* probs = nullptr);

}  // namespace MADAPTER_NS
}  // namespace madapter
