#include "madapter/adapter_block.hpp"

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

std::string to_string(PoolPosition p) {
  switch (p) {
    case PoolPosition::Inside: return "inside";
    case PoolPosition::BeforeAttention: return "b4p";
    case PoolPosition::BeforeFfn: return "b4f";
    case PoolPosition::AfterOutput: return "b4o";
  }
  return "?";
}

PoolPosition parse_pool_position(std::string_view text) {
  if (text == "inside") return PoolPosition::Inside;
  if (text == "b4p") return PoolPosition::BeforeAttention;
  if (text == "b4f") return PoolPosition::BeforeFfn;
  if (text == "b4o") return PoolPosition::AfterOutput;
  throw std::invalid_argument("unknown pool position '" + std::string(text) +
                              "' (expected inside|b4p|b4f|b4o)");
}

void AdapterConfig::validate() const {
  mpsa().validate();
  if (layers == 0) throw std::invalid_argument("adapter needs at least one layer");
  if (pool.kernel == 0 || pool.stride == 0) {
    throw std::invalid_argument("pool config " + to_string(pool) +
                                ": kernel and stride must be positive");
  }
}

AdapterConfig AdapterConfig::mada1(std::size_t dim, std::size_t heads) {
  AdapterConfig c;
  c.dim = dim;
  c.heads = heads;
  c.pool = {8, 8, 4};
  c.layers = 1;
  return c;
}

AdapterConfig AdapterConfig::mada3(std::size_t dim, std::size_t heads) {
  AdapterConfig c;
  c.dim = dim;
  c.heads = heads;
  c.pool = {3, 2, 1};
  c.layers = 3;
  return c;
}

AdapterLayerWeights make_adapter_layer(ParamStore& store, const std::string& prefix,
                                       const AdapterConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto d = cfg.dim;
  const auto k = cfg.pool.kernel;
  AdapterLayerWeights w;
  w.mpsa.w_q = &store.add(prefix + ".attn.w_q", uniform_init({d, d}, d, rng));
  w.mpsa.w_k = &store.add(prefix + ".attn.w_k", uniform_init({d, d}, d, rng));
  w.mpsa.w_v = &store.add(prefix + ".attn.w_v", uniform_init({d, d}, d, rng));
  if (cfg.position == PoolPosition::Inside) {
    w.mpsa.pool_q = make_conv(store, prefix + ".attn.pool_q", d, d, k, rng);
    w.mpsa.pool_k = make_conv(store, prefix + ".attn.pool_k", d, d, k, rng);
    w.mpsa.pool_v = make_conv(store, prefix + ".attn.pool_v", d, d, k, rng);
  }
  w.pool_x = make_conv(store, prefix + ".pool_x", d, d, k, rng);
  w.ln1 = make_layer_norm(store, prefix + ".ln1", d);
  w.ffn = make_ffn(store, prefix + ".ffn", d, cfg.resolved_ffn_width(), rng);
  w.ln2 = make_layer_norm(store, prefix + ".ln2", d);
  return w;
}

std::vector<AdapterLayerWeights> make_adapter_stack(ParamStore& store,
                                                    const std::string& prefix,
                                                    const AdapterConfig& cfg, Rng& rng) {
  std::vector<AdapterLayerWeights> layers;
  layers.reserve(cfg.layers);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    layers.push_back(make_adapter_layer(store, prefix + "." + std::to_string(i), cfg, rng));
  }
  return layers;
}

namespace {

Var finish_layer(Tape& tape, Var pre_ln1, const AdapterLayerWeights& w, LayerTrace* trace) {
  if (trace) trace->pre_ln1 = pre_ln1.value();
  Var z = apply_layer_norm(tape, pre_ln1, w.ln1);
  return apply_layer_norm(tape, add(apply_ffn(tape, z, w.ffn), z), w.ln2);
}

void check_input(Var x, const AdapterConfig& cfg) {
  if (x.value().rank() != 2 || x.cols() != cfg.dim) {
    throw DimensionError("adapter input " + shape_string(x.shape()) +
                         " does not have embedding dim " + std::to_string(cfg.dim));
  }
  out_len(x.rows(), cfg.pool);
}

}  // namespace

Var adapter_layer_forward(Tape& tape, Var x, const AdapterLayerWeights& w,
                          const AdapterConfig& cfg, LayerTrace* trace) {
  check_input(x, cfg);
  auto* probs = trace ? &trace->attention : nullptr;
  switch (cfg.position) {
    case PoolPosition::Inside: {
      Var h = mpsa_forward(tape, x, w.mpsa, cfg.mpsa(), probs);
      Var x_pooled = apply_conv(tape, x, w.pool_x, cfg.pool);
      return finish_layer(tape, add(h, x_pooled), w, trace);
    }
    case PoolPosition::BeforeAttention: {
      Var x_pooled = apply_conv(tape, x, w.pool_x, cfg.pool);
      Var h = multi_head_attention(matmul(x_pooled, tape.param(*w.mpsa.w_q)),
                                   matmul(x_pooled, tape.param(*w.mpsa.w_k)),
                                   matmul(x_pooled, tape.param(*w.mpsa.w_v)), cfg.heads,
                                   nullptr, probs);
      return finish_layer(tape, add(h, x_pooled), w, trace);
    }
    case PoolPosition::BeforeFfn: {
      Var h = multi_head_attention(matmul(x, tape.param(*w.mpsa.w_q)),
                                   matmul(x, tape.param(*w.mpsa.w_k)),
                                   matmul(x, tape.param(*w.mpsa.w_v)), cfg.heads, nullptr,
                                   probs);
      Var h_pooled = apply_conv(tape, h, w.pool_x, cfg.pool);
      Var x_pooled = apply_conv(tape, x, w.pool_x, cfg.pool);
      return finish_layer(tape, add(h_pooled, x_pooled), w, trace);
    }
    case PoolPosition::AfterOutput: {
      Var h = multi_head_attention(matmul(x, tape.param(*w.mpsa.w_q)),
                                   matmul(x, tape.param(*w.mpsa.w_k)),
                                   matmul(x, tape.param(*w.mpsa.w_v)), cfg.heads, nullptr,
                                   probs);
      Var out = finish_layer(tape, add(h, x), w, trace);
      return apply_conv(tape, out, w.pool_x, cfg.pool);
    }
  }
  throw std::logic_error("unhandled pool position");
}

Var local_only_forward(Tape& tape, Var x, const AdapterLayerWeights& w,
                       const AdapterConfig& cfg, LayerTrace* trace) {
  if (cfg.position != PoolPosition::Inside) {
    throw std::logic_error("local-only forward requires the inside pooling position, got " +
                           to_string(cfg.position));
  }
  check_input(x, cfg);
  Var v_pooled =
      apply_conv(tape, matmul(x, tape.param(*w.mpsa.w_v)), w.mpsa.pool_v, cfg.pool);
  Var x_pooled = apply_conv(tape, x, w.pool_x, cfg.pool);
  return finish_layer(tape, add(v_pooled, x_pooled), w, trace);
}

Var adapter_stack_forward(Tape& tape, Var x, std::span<const AdapterLayerWeights> layers,
                          const AdapterConfig& cfg, const StackOptions& opts) {
  if (layers.size() != cfg.layers) {
    throw std::invalid_argument("adapter stack has " + std::to_string(layers.size()) +
                                " layers, config expects " + std::to_string(cfg.layers));
  }
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      h = opts.local_only ? local_only_forward(tape, h, layers[i], cfg)
                          : adapter_layer_forward(tape, h, layers[i], cfg);
    } catch (const LengthError& e) {
      throw LengthError("adapter layer " + std::to_string(i) + ": " + e.what());
    }
    if (opts.hook) h = opts.hook(i, h);
  }
  return h;
}

std::size_t adapter_output_length(std::size_t length, const AdapterConfig& cfg) {
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    try {
      length = out_len(length, cfg.pool);
    } catch (const LengthError& e) {
      throw LengthError("adapter layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return length;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
