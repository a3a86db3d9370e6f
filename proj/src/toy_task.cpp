#include "madapter/toy_task.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

using nlohmann::json;

void ToyConfig::validate() const {
  if (vocab < 4) throw std::invalid_argument("vocab must be >= 4 (PAD, BOS, EOS, content)");
  if (frame_dim == 0) throw std::invalid_argument("frame_dim must be positive");
  if (target_min == 0 || target_min > target_max) {
    throw std::invalid_argument("target length range must satisfy 1 <= min <= max");
  }
  if (upsample_min == 0 || upsample_min > upsample_max) {
    throw std::invalid_argument("upsample range must satisfy 1 <= min <= max");
  }
  if (!(noise >= 0.0f)) throw std::invalid_argument("noise sigma must be >= 0");
}

ToyTables make_tables(const ToyConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.task_seed);
  ToyTables t;
  t.codebook = SeqTensor({cfg.vocab, cfg.frame_dim});
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (auto& v : t.codebook.data()) v = normal(rng);
  t.substitution.resize(cfg.vocab);
  std::iota(t.substitution.begin(), t.substitution.end(), 0);
  if (!cfg.identity_permutation) {
    std::shuffle(t.substitution.begin() + kFirstContentToken, t.substitution.end(), rng);
  }
  return t;
}

std::vector<ToyExample> generate_dataset(const ToyConfig& cfg, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("dataset size must be >= 1");
  const ToyTables tables = make_tables(cfg);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> len_dist(cfg.target_min, cfg.target_max);
  std::uniform_int_distribution<int> tok_dist(kFirstContentToken,
                                              static_cast<int>(cfg.vocab) - 1);
  std::uniform_int_distribution<std::size_t> rep_dist(cfg.upsample_min, cfg.upsample_max);
  std::normal_distribution<float> noise(0.0f, 1.0f);

  std::vector<ToyExample> out;
  out.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t len = len_dist(rng);
    std::vector<int> tokens(len);
    std::vector<std::size_t> reps(len);
    std::size_t frames = 0;
    for (std::size_t i = 0; i < len; ++i) {
      tokens[i] = tok_dist(rng);
      reps[i] = rep_dist(rng);
      frames += reps[i];
    }
    ToyExample ex;
    ex.source = SeqTensor({frames, cfg.frame_dim});
    std::size_t row = 0;
    for (std::size_t i = 0; i < len; ++i) {
      auto code = tables.codebook.row(static_cast<std::size_t>(tokens[i]));
      for (std::size_t r = 0; r < reps[i]; ++r, ++row) {
        auto dst = ex.source.row(row);
        for (std::size_t c = 0; c < cfg.frame_dim; ++c) {
          dst[c] = code[c] + (cfg.noise > 0.0f ? cfg.noise * noise(rng) : 0.0f);
        }
      }
    }
    ex.target.reserve(len + 2);
    ex.target.push_back(kBosToken);
    for (int t : tokens) ex.target.push_back(tables.substitution[static_cast<std::size_t>(t)]);
    ex.target.push_back(kEosToken);
    out.push_back(std::move(ex));
  }
  return out;
}

void write_dataset(std::ostream& out, std::span<const ToyExample> data) {
  for (const auto& ex : data) {
    json src = json::array();
    for (std::size_t r = 0; r < ex.source.rows(); ++r) {
      auto row = ex.source.row(r);
      src.push_back(std::vector<Real>(row.begin(), row.end()));
    }
    json line = {{"source", std::move(src)}, {"target", ex.target}};
    out << line.dump() << '\n';
  }
}

std::vector<ToyExample> read_dataset(std::istream& in) {
  std::vector<ToyExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto& src = j.at("source");
      if (!src.is_array() || src.empty()) throw FormatError("empty source");
      const std::size_t cols = src.at(0).size();
      std::vector<Real> data;
      data.reserve(src.size() * cols);
      for (const auto& row : src) {
        if (row.size() != cols) throw FormatError("ragged source rows");
        for (const auto& v : row) data.push_back(v.get<Real>());
      }
      ToyExample ex{SeqTensor({src.size(), cols}, std::move(data)),
                    j.at("target").get<std::vector<int>>()};
      if (ex.target.size() < 2) throw FormatError("target needs BOS and EOS");
      out.push_back(std::move(ex));
    } catch (const FormatError& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::MAdapter: return "madapter";
    case AdapterKind::Cnn: return "cnn";
    case AdapterKind::Transformer: return "transformer";
  }
  return "?";
}

AdapterKind parse_adapter_kind(std::string_view text) {
  if (text == "madapter") return AdapterKind::MAdapter;
  if (text == "cnn") return AdapterKind::Cnn;
  if (text == "transformer") return AdapterKind::Transformer;
  throw std::invalid_argument("unknown adapter '" + std::string(text) +
                              "' (expected madapter|cnn|transformer)");
}

void ModelConfig::validate() const {
  adapter_cfg.validate();
  if (decoder_layers == 0 || vocab < 4 || frame_dim == 0 || batch == 0) {
    throw std::invalid_argument("model config fields must be positive (vocab >= 4)");
  }
  if (!(optim.lr >= 0.0f) || !(optim.clip > 0.0f)) {
    throw std::invalid_argument("optimizer lr must be >= 0 and clip > 0");
  }
}

json to_json(const ModelConfig& cfg) {
  const auto& a = cfg.adapter_cfg;
  return {
      {"adapter", to_string(cfg.adapter)},
      {"adapter_cfg",
       {{"dim", a.dim},
        {"heads", a.heads},
        {"ffn_width", a.resolved_ffn_width()},
        {"kernel", a.pool.kernel},
        {"stride", a.pool.stride},
        {"padding", a.pool.padding},
        {"position", to_string(a.position)},
        {"layers", a.layers}}},
      {"decoder_layers", cfg.decoder_layers},
      {"vocab", cfg.vocab},
      {"frame_dim", cfg.frame_dim},
      {"optim",
       {{"lr", cfg.optim.lr},
        {"beta1", cfg.optim.beta1},
        {"beta2", cfg.optim.beta2},
        {"eps", cfg.optim.eps},
        {"clip", cfg.optim.clip},
        {"warmup", cfg.optim.warmup},
        {"cosine_decay", cfg.optim.cosine_decay}}},
      {"batch", cfg.batch},
      {"steps", cfg.steps},
      {"seed", cfg.seed},
  };
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.adapter = parse_adapter_kind(j.at("adapter").get<std::string>());
  const auto& a = j.at("adapter_cfg");
  cfg.adapter_cfg.dim = a.at("dim").get<std::size_t>();
  cfg.adapter_cfg.heads = a.at("heads").get<std::size_t>();
  cfg.adapter_cfg.ffn_width = a.at("ffn_width").get<std::size_t>();
  cfg.adapter_cfg.pool = {a.at("kernel").get<std::size_t>(), a.at("stride").get<std::size_t>(),
                          a.at("padding").get<std::size_t>()};
  cfg.adapter_cfg.position = parse_pool_position(a.at("position").get<std::string>());
  cfg.adapter_cfg.layers = a.at("layers").get<std::size_t>();
  cfg.decoder_layers = j.at("decoder_layers").get<std::size_t>();
  cfg.vocab = j.at("vocab").get<std::size_t>();
  cfg.frame_dim = j.at("frame_dim").get<std::size_t>();
  const auto& o = j.at("optim");
  cfg.optim.lr = o.at("lr").get<float>();
  cfg.optim.beta1 = o.at("beta1").get<float>();
  cfg.optim.beta2 = o.at("beta2").get<float>();
  cfg.optim.eps = o.at("eps").get<float>();
  cfg.optim.clip = o.at("clip").get<float>();
  cfg.optim.warmup = o.at("warmup").get<std::size_t>();
  cfg.optim.cosine_decay = o.value("cosine_decay", false);
  cfg.batch = j.at("batch").get<std::size_t>();
  cfg.steps = j.at("steps").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

json to_json(const ToyConfig& cfg) {
  return {{"vocab", cfg.vocab},
          {"frame_dim", cfg.frame_dim},
          {"target_min", cfg.target_min},
          {"target_max", cfg.target_max},
          {"upsample_min", cfg.upsample_min},
          {"upsample_max", cfg.upsample_max},
          {"noise", cfg.noise},
          {"task_seed", cfg.task_seed},
          {"identity_permutation", cfg.identity_permutation}};
}

ToyConfig toy_config_from_json(const json& j) {
  ToyConfig cfg;
  cfg.vocab = j.at("vocab").get<std::size_t>();
  cfg.frame_dim = j.at("frame_dim").get<std::size_t>();
  cfg.target_min = j.at("target_min").get<std::size_t>();
  cfg.target_max = j.at("target_max").get<std::size_t>();
  cfg.upsample_min = j.at("upsample_min").get<std::size_t>();
  cfg.upsample_max = j.at("upsample_max").get<std::size_t>();
  cfg.noise = j.at("noise").get<float>();
  cfg.task_seed = j.at("task_seed").get<std::uint64_t>();
  cfg.identity_permutation = j.at("identity_permutation").get<bool>();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

SeqTensor sinusoidal_positions(std::size_t length, std::size_t dim) {
  // Rows do not depend on the total length, so one table per width is grown
  // on demand and sliced.
  thread_local std::map<std::size_t, std::vector<Real>> tables;
  auto& table = tables[dim];
  for (std::size_t pos = table.size() / dim; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * freq;
      table.push_back(static_cast<Real>(std::sin(angle)));
      if (i + 1 < dim) table.push_back(static_cast<Real>(std::cos(angle)));
    }
  }
  return SeqTensor({length, dim}, std::vector<Real>(table.begin(), table.begin() + length * dim));
}

namespace {

DecoderBlockWeights make_decoder_block(ParamStore& store, const std::string& prefix,
                                       std::size_t dim, std::size_t ffn_width, Rng& rng) {
  auto square = [&](const std::string& name) {
    return &store.add(prefix + name, uniform_init({dim, dim}, dim, rng));
  };
  DecoderBlockWeights w;
  w.self_q = square(".self.w_q");
  w.self_k = square(".self.w_k");
  w.self_v = square(".self.w_v");
  w.self_o = square(".self.w_o");
  w.ln1 = make_layer_norm(store, prefix + ".ln1", dim);
  w.cross_q = square(".cross.w_q");
  w.cross_k = square(".cross.w_k");
  w.cross_v = square(".cross.w_v");
  w.cross_o = square(".cross.w_o");
  w.ln2 = make_layer_norm(store, prefix + ".ln2", dim);
  w.ffn = make_ffn(store, prefix + ".ffn", dim, ffn_width, rng);
  w.ln3 = make_layer_norm(store, prefix + ".ln3", dim);
  return w;
}

SeqTensor causal_mask(std::size_t length) {
  SeqTensor m({length, length}, Real(0.0));
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) m.at(i, j) = Real(-1e9);
  }
  return m;
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto d = cfg_.dim();
  const auto ffn_width = cfg_.adapter_cfg.resolved_ffn_width();
  Rng rng(cfg_.seed);
  frontend_w_ = &params_.add("frontend.w", uniform_init({cfg_.frame_dim, d}, cfg_.frame_dim, rng));
  frontend_b_ = &params_.add("frontend.b", uniform_init({d}, cfg_.frame_dim, rng));
  switch (cfg_.adapter) {
    case AdapterKind::MAdapter:
      madapter_ = make_adapter_stack(params_, "adapter", cfg_.adapter_cfg, rng);
      break;
    case AdapterKind::Cnn:
      cnn_ = make_cnn_adapter(params_, "adapter", d, rng, cfg_.adapter_cfg.layers,
                              cfg_.adapter_cfg.pool);
      break;
    case AdapterKind::Transformer:
      transformer_ = make_transformer_adapter(params_, "adapter", d, cfg_.adapter_cfg.heads,
                                              ffn_width, rng, cfg_.adapter_cfg.layers);
      break;
  }
  embedding_ = &params_.add("decoder.embedding", uniform_init({cfg_.vocab, d}, 1, rng));
  for (std::size_t i = 0; i < cfg_.decoder_layers; ++i) {
    decoder_.push_back(
        make_decoder_block(params_, "decoder." + std::to_string(i), d, ffn_width, rng));
  }
  out_w_ = &params_.add("output.w", uniform_init({d, cfg_.vocab}, d, rng));
  out_b_ = &params_.add("output.b", uniform_init({cfg_.vocab}, d, rng));
}

std::size_t Seq2SeqModel::encoder_output_length(std::size_t length) const {
  switch (cfg_.adapter) {
    case AdapterKind::MAdapter: return adapter_output_length(length, cfg_.adapter_cfg);
    case AdapterKind::Cnn: return cnn_adapter_output_length(length, cnn_);
    case AdapterKind::Transformer: return length;
  }
  return length;
}

Var Seq2SeqModel::frontend(Tape& tape, const SeqTensor& source) const {
  if (source.rank() != 2 || source.cols() != cfg_.frame_dim) {
    throw DimensionError("source " + shape_string(source.shape()) +
                         " does not have frame dim " + std::to_string(cfg_.frame_dim));
  }
  Var x = affine(tape, tape.constant(source), *frontend_w_, *frontend_b_);
  return add(x, tape.constant(sinusoidal_positions(source.rows(), cfg_.dim())));
}

Var Seq2SeqModel::adapter_forward(Tape& tape, Var x, const EncodeOptions& opts) const {
  switch (cfg_.adapter) {
    case AdapterKind::MAdapter:
      return adapter_stack_forward(tape, x, madapter_, cfg_.adapter_cfg,
                                   {opts.local_only, opts.layer_hook});
    case AdapterKind::Cnn:
      if (opts.local_only) throw std::logic_error("local-only forward needs an M-Adapter");
      return cnn_adapter_forward(tape, x, cnn_, opts.layer_hook);
    case AdapterKind::Transformer:
      if (opts.local_only) throw std::logic_error("local-only forward needs an M-Adapter");
      return transformer_adapter_forward(tape, x, transformer_, opts.layer_hook);
  }
  throw std::logic_error("unhandled adapter kind");
}

Var Seq2SeqModel::encode(Tape& tape, const SeqTensor& source, const EncodeOptions& opts) const {
  Var x = frontend(tape, source);
  if (opts.frontend_hook) x = opts.frontend_hook(x);
  Var out = adapter_forward(tape, x, opts);
  if (opts.output_hook) out = opts.output_hook(out);
  return out;
}

Var Seq2SeqModel::decode_logits(Tape& tape, Var memory, std::span<const int> tokens) const {
  const auto d = cfg_.dim();
  const auto heads = cfg_.adapter_cfg.heads;
  Var y = add(gather_rows(tape.param(*embedding_), tokens),
              tape.constant(sinusoidal_positions(tokens.size(), d)));
  const SeqTensor mask = causal_mask(tokens.size());
  for (const auto& b : decoder_) {
    Var a = multi_head_attention(matmul(y, tape.param(*b.self_q)), matmul(y, tape.param(*b.self_k)),
                                 matmul(y, tape.param(*b.self_v)), heads, &mask);
    y = apply_layer_norm(tape, add(y, matmul(a, tape.param(*b.self_o))), b.ln1);
    Var c = multi_head_attention(matmul(y, tape.param(*b.cross_q)),
                                 matmul(memory, tape.param(*b.cross_k)),
                                 matmul(memory, tape.param(*b.cross_v)), heads);
    y = apply_layer_norm(tape, add(y, matmul(c, tape.param(*b.cross_o))), b.ln2);
    y = apply_layer_norm(tape, add(apply_ffn(tape, y, b.ffn), y), b.ln3);
  }
  return affine(tape, y, *out_w_, *out_b_);
}

Var Seq2SeqModel::loss(Tape& tape, const ToyExample& example, const EncodeOptions& opts) const {
  if (example.target.size() < 2) throw std::invalid_argument("target needs BOS and EOS");
  Var memory = encode(tape, example.source, opts);
  std::span<const int> target(example.target);
  Var logits = decode_logits(tape, memory, target.first(target.size() - 1));
  return cross_entropy(logits, target.subspan(1));
}

std::vector<int> Seq2SeqModel::greedy_decode_memory(const SeqTensor& memory,
                                                    std::size_t max_tokens) const {
  std::vector<int> tokens{kBosToken};
  while (tokens.size() - 1 < max_tokens) {
    Tape tape(false);
    Var logits = decode_logits(tape, tape.constant(memory), tokens);
    auto last = logits.value().row(logits.rows() - 1);
    const int next = static_cast<int>(std::max_element(last.begin(), last.end()) - last.begin());
    tokens.push_back(next);
    if (next == kEosToken) break;
  }
  return {tokens.begin() + 1, tokens.end()};
}

std::vector<int> Seq2SeqModel::greedy_decode(const SeqTensor& source, std::size_t max_tokens,
                                             const EncodeOptions& opts) const {
  Tape tape(false);
  const SeqTensor memory = encode(tape, source, opts).value();
  return greedy_decode_memory(memory, max_tokens);
}

std::unique_ptr<Seq2SeqModel> build_model(const ModelConfig& cfg) {
  return std::make_unique<Seq2SeqModel>(cfg);
}

// ---------------------------------------------------------------------------

namespace {

class Adam {
 public:
  Adam(ParamStore& params, const OptimizerConfig& cfg, std::size_t total_steps)
      : params_(params), cfg_(cfg), total_(total_steps) {
    for (const auto& p : params_) {
      m_.emplace_back(p.value.size(), Real(0.0));
      v_.emplace_back(p.value.size(), Real(0.0));
    }
  }

  void step() {
    ++t_;
    double sq = 0.0;
    for (const auto& p : params_) {
      for (Real g : p.grad.data()) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    const Real clip_scale =
        norm > cfg_.clip ? static_cast<Real>(cfg_.clip / norm) : Real(1.0);
    Real lr = cfg_.lr;
    if (cfg_.warmup > 0 && t_ <= cfg_.warmup) {
      lr *= static_cast<Real>(t_) / static_cast<Real>(cfg_.warmup);
    } else if (cfg_.cosine_decay && total_ > cfg_.warmup) {
      const double progress = static_cast<double>(t_ - 1 - cfg_.warmup) /
                              static_cast<double>(total_ - cfg_.warmup);
      lr *= static_cast<Real>(0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    }
    const Real bc1 = Real(1.0) - std::pow(cfg_.beta1, static_cast<Real>(t_));
    const Real bc2 = Real(1.0) - std::pow(cfg_.beta2, static_cast<Real>(t_));
    std::size_t idx = 0;
    for (auto& p : params_) {
      auto& m = m_[idx];
      auto& v = v_[idx];
      auto values = p.value.data();
      auto grads = p.grad.data();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const Real g = grads[i] * clip_scale;
        m[i] = cfg_.beta1 * m[i] + (Real(1.0) - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (Real(1.0) - cfg_.beta2) * g * g;
        values[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      }
      ++idx;
    }
  }

 private:
  ParamStore& params_;
  OptimizerConfig cfg_;
  std::size_t total_;
  std::size_t t_ = 0;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
};

float batch_loss(const Seq2SeqModel& model, std::span<const ToyExample> data,
                 std::span<const std::size_t> indices) {
  double total = 0.0;
  for (auto i : indices) {
    Tape tape(false);
    total += model.loss(tape, data[i]).value()[0];
  }
  return static_cast<float>(total / static_cast<double>(indices.size()));
}

}  // namespace

TrainReport train(Seq2SeqModel& model, std::span<const ToyExample> data,
                  const std::function<void(const LossPoint&)>& on_point) {
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  const auto& cfg = model.config();
  auto& params = model.params();
  Adam adam(params, cfg.optim, cfg.steps);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);

  std::vector<std::size_t> probe(std::min(cfg.batch, data.size()));
  std::iota(probe.begin(), probe.end(), 0);

  TrainReport report;
  double window_loss = 0.0;
  std::size_t window_steps = 0;
  auto emit = [&](std::size_t step) {
    LossPoint pt;
    pt.step = step;
    pt.probe_loss = batch_loss(model, data, probe);
    pt.train_loss = window_steps ? static_cast<float>(window_loss / window_steps) : pt.probe_loss;
    if (!std::isfinite(pt.probe_loss)) {
      throw DivergenceError(step, "non-finite probe loss at step " + std::to_string(step));
    }
    report.curve.push_back(pt);
    if (on_point) on_point(pt);
    window_loss = 0.0;
    window_steps = 0;
  };

  std::vector<std::size_t> batch(cfg.batch);
  const Real inv_batch = Real(1.0) / static_cast<Real>(cfg.batch);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (step % 100 == 0) emit(step);
    for (auto& b : batch) b = pick(rng);
    params.zero_grad();
    double step_loss = 0.0;
    for (auto i : batch) {
      Tape tape;
      Var l = model.loss(tape, data[i]);
      step_loss += l.value()[0];
      tape.backward(scale(l, inv_batch));
    }
    step_loss /= static_cast<double>(cfg.batch);
    if (!std::isfinite(step_loss)) {
      throw DivergenceError(step, "training diverged: non-finite loss at step " +
                                      std::to_string(step));
    }
    window_loss += step_loss;
    ++window_steps;
    adam.step();
  }
  emit(cfg.steps);
  return report;
}

std::size_t aligned_matches(std::span<const int> predicted, std::span<const int> reference) {
  std::size_t correct = 0;
  const auto n = std::min(predicted.size(), reference.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (predicted[i] == reference[i]) ++correct;
  }
  return correct;
}

PredictionScore score_prediction(std::span<const int> predicted,
                                 std::span<const int> reference) {
  return {aligned_matches(predicted, reference),
          std::equal(predicted.begin(), predicted.end(), reference.begin(), reference.end())};
}

EvalMetrics evaluate(const Seq2SeqModel& model, std::span<const ToyExample> data,
                     const EncodeOptionsFor& options) {
  EvalMetrics m;
  std::size_t correct = 0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    std::span<const int> reference = std::span<const int>(ex.target).subspan(1);
    const EncodeOptions opts = options ? options(i) : EncodeOptions{};
    const auto predicted = model.greedy_decode(ex.source, 2 * reference.size(), opts);
    const auto score = score_prediction(predicted, reference);
    correct += score.matches;
    if (score.exact) ++exact;
    m.reference_tokens += reference.size();
  }
  m.examples = data.size();
  if (m.reference_tokens > 0) {
    m.token_accuracy = static_cast<double>(correct) / static_cast<double>(m.reference_tokens);
  }
  if (m.examples > 0) m.exact_match = static_cast<double>(exact) / static_cast<double>(m.examples);
  return m;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
