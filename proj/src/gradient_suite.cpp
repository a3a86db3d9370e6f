#include "madapter/gradient_suite.hpp"

#include <algorithm>
#include <random>

#include "madapter/adapter_block.hpp"
#include "madapter/baselines.hpp"
#include "madapter/toy_task.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

namespace {

constexpr std::size_t kDim = 8;
constexpr std::size_t kHeads = 2;
constexpr std::size_t kLength = 12;
constexpr PoolConfig kPool{3, 2, 1};

SeqTensor random_tensor(Shape shape, Rng& rng, Real lo = -1, Real hi = 1) {
  SeqTensor t(std::move(shape));
  std::uniform_real_distribution<Real> dist(lo, hi);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Non-trivial layer-norm parameters so their gradients are exercised.
void randomize_layer_norms(ParamStore& store, Rng& rng) {
  for (auto& p : store) {
    if (p.name.ends_with(".gain")) p.value = random_tensor(p.value.shape(), rng, 0.5, 1.5);
    if (p.name.ends_with(".offset")) p.value = random_tensor(p.value.shape(), rng, -0.5, 0.5);
  }
}

std::string group_of(const std::string& name) {
  auto has = [&](const char* s) { return name.find(s) != std::string::npos; };
  if (name.starts_with("decoder.") || name.starts_with("output.")) return "decoder";
  if (name.starts_with("frontend.")) return "frontend";
  if (name.starts_with("cnn.")) return "cnn_adapter";
  if (name.starts_with("transformer.")) return "transformer_adapter";
  if (has(".ln")) return "layer_norm";
  if (has(".ffn.")) return "ffn";
  if (has(".pool_x.")) return "pool_x";
  if (has(".attn.") || name.starts_with("mpsa.")) return "mpsa";
  return "input";
}

class Runner {
 public:
  explicit Runner(std::uint64_t seed) : rng_(seed), weight_seed_(seed ^ 0x5bd1e995u) {}

  Rng& rng() { return rng_; }

  // Σ c ⊙ y with a fixed random weighting so every output entry matters.
  Var weighted(Tape& tape, Var y) const {
    Rng r(weight_seed_);
    return sum(mul(y, tape.constant(random_tensor(y.shape(), r))));
  }

  void run(const std::string& case_name, ParamStore& store, Parameter* input,
           const std::function<Var(Tape&)>& loss) {
    std::vector<Parameter*> params;
    for (auto& p : store) params.push_back(&p);
    if (input) params.push_back(input);
    for (auto& c : check_parameters(loss, params)) {
      out_.push_back({group_of(c.name), case_name, std::move(c)});
    }
  }

  std::vector<SuiteCheck> take() { return std::move(out_); }

 private:
  Rng rng_;
  std::uint64_t weight_seed_;
  std::vector<SuiteCheck> out_;
};

}  // namespace

std::vector<SuiteCheck> run_gradient_suite(std::uint64_t seed) {
  Runner r(seed);

  {
    ParamStore store;
    const auto cfg = MpsaConfig::uniform(kDim, kHeads, kPool);
    const auto w = make_mpsa_weights(store, "mpsa", cfg, r.rng());
    Parameter x("x", random_tensor({kLength, kDim}, r.rng()));
    r.run("mpsa", store, &x,
          [&](Tape& t) { return r.weighted(t, mpsa_forward(t, t.param(x), w, cfg)); });
  }

  for (auto pos : {PoolPosition::Inside, PoolPosition::BeforeAttention, PoolPosition::BeforeFfn,
                   PoolPosition::AfterOutput}) {
    ParamStore store;
    AdapterConfig cfg;
    cfg.dim = kDim;
    cfg.heads = kHeads;
    cfg.pool = kPool;
    cfg.position = pos;
    cfg.layers = 1;
    const auto w = make_adapter_layer(store, "layer", cfg, r.rng());
    randomize_layer_norms(store, r.rng());
    Parameter x("x", random_tensor({kLength, kDim}, r.rng()));
    r.run("layer/" + to_string(pos), store, &x, [&](Tape& t) {
      return r.weighted(t, adapter_layer_forward(t, t.param(x), w, cfg));
    });
    if (pos == PoolPosition::Inside) {
      r.run("layer/local-only", store, &x, [&](Tape& t) {
        return r.weighted(t, local_only_forward(t, t.param(x), w, cfg));
      });
    }
  }

  {
    ParamStore store;
    const auto w = make_cnn_adapter(store, "cnn", kDim, r.rng(), 3, kPool);
    Parameter x("x", random_tensor({kLength, kDim}, r.rng()));
    r.run("cnn_adapter", store, &x,
          [&](Tape& t) { return r.weighted(t, cnn_adapter_forward(t, t.param(x), w)); });
  }

  {
    ParamStore store;
    const auto w = make_transformer_adapter(store, "transformer", kDim, kHeads, 4 * kDim,
                                            r.rng(), 3);
    randomize_layer_norms(store, r.rng());
    Parameter x("x", random_tensor({kLength, kDim}, r.rng()));
    r.run("transformer_adapter", store, &x, [&](Tape& t) {
      return r.weighted(t, transformer_adapter_forward(t, t.param(x), w));
    });
  }

  {
    ModelConfig cfg;
    cfg.adapter_cfg = AdapterConfig::mada3(kDim, kHeads);
    cfg.vocab = 8;
    cfg.frame_dim = 4;
    cfg.seed = r.rng()();
    Seq2SeqModel model(cfg);
    randomize_layer_norms(model.params(), r.rng());
    ToyExample ex{random_tensor({kLength, cfg.frame_dim}, r.rng()), {kBosToken, 3, 5, 4, 7, kEosToken}};
    r.run("model", model.params(), nullptr, [&](Tape& t) { return model.loss(t, ex); });
  }

  return r.take();
}

std::vector<GroupSummary> summarize_groups(const std::vector<SuiteCheck>& checks) {
  std::vector<GroupSummary> out;
  for (const auto& c : checks) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const GroupSummary& g) { return g.group == c.group; });
    if (it == out.end()) {
      GroupSummary g;
      g.group = c.group;
      out.push_back(std::move(g));
      it = out.end() - 1;
    }
    ++it->tensors;
    const double rel = c.check.cmp.effective_relative();
    if (it->worst_param.empty() || rel > it->worst_relative) {
      it->worst_relative = rel;
      it->worst_param = c.case_name + ":" + c.check.name;
    }
    it->passed = it->passed && c.check.cmp.passed();
  }
  return out;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
