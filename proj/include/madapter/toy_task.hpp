#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "madapter/adapter_block.hpp"
#include "madapter/baselines.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

inline constexpr int kPadToken = 0;
inline constexpr int kBosToken = 1;
inline constexpr int kEosToken = 2;
inline constexpr int kFirstContentToken = 3;

/// Synthetic speech-like translation task. Each target token is rendered as
/// a codebook frame repeated r times with Gaussian noise; the supervised
/// output is the token sequence passed through a fixed substitution.
struct ToyConfig {
  std::size_t vocab = 32;
  std::size_t frame_dim = 16;
  std::size_t target_min = 5;
  std::size_t target_max = 20;
  std::size_t upsample_min = 6;
  std::size_t upsample_max = 10;
  float noise = 0.1f;
  std::uint64_t task_seed = 7;  // codebook and substitution permutation
  bool identity_permutation = false;

  void validate() const;
};

struct ToyExample {
  SeqTensor source;         // [L×F]
  std::vector<int> target;  // BOS content... EOS
};

/// Frozen per-task tables derived from ToyConfig::task_seed.
struct ToyTables {
  SeqTensor codebook;             // [V×F]
  std::vector<int> substitution;  // token -> translated token, identity on specials
};

ToyTables make_tables(const ToyConfig& cfg);

/// Default train/eval sets used by the CLI and the acceptance run.
inline constexpr std::size_t kDefaultTrainSize = 16384;
inline constexpr std::uint64_t kDefaultTrainSeed = 1;
inline constexpr std::size_t kDefaultEvalSize = 512;
inline constexpr std::uint64_t kDefaultEvalSeed = 2;

std::vector<ToyExample> generate_dataset(const ToyConfig& cfg, std::size_t n,
                                         std::uint64_t seed);

/// Line-delimited JSON: {"source": [[f32...]...], "target": [int...]}.
void write_dataset(std::ostream& out, std::span<const ToyExample> data);
std::vector<ToyExample> read_dataset(std::istream& in);

// ---------------------------------------------------------------------------

enum class AdapterKind { MAdapter, Cnn, Transformer };

std::string to_string(AdapterKind kind);
AdapterKind parse_adapter_kind(std::string_view text);

struct OptimizerConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.98f;
  float eps = 1e-9f;
  float clip = 1.0f;
  std::size_t warmup = 200;  // linear lr ramp, in steps
  bool cosine_decay = true;  // after warmup, cosine down to 0 at the last step
};

struct ModelConfig {
  AdapterKind adapter = AdapterKind::MAdapter;
  AdapterConfig adapter_cfg = AdapterConfig::mada3();
  std::size_t decoder_layers = 1;
  std::size_t vocab = 32;
  std::size_t frame_dim = 16;
  OptimizerConfig optim;
  std::size_t batch = 32;
  std::size_t steps = 2000;
  std::uint64_t seed = 42;

  std::size_t dim() const { return adapter_cfg.dim; }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ToyConfig& cfg);
ToyConfig toy_config_from_json(const nlohmann::json& j);

/// Hooks applied while encoding one source sequence.
struct EncodeOptions {
  bool local_only = false;
  std::function<Var(Var)> frontend_hook;  // on the frontend output
  LayerHook layer_hook;                   // on every adapter layer output
  std::function<Var(Var)> output_hook;    // on the final adapter output
};

/// Per-example encode options, keyed by dataset index.
using EncodeOptionsFor = std::function<EncodeOptions(std::size_t index)>;

struct DecoderBlockWeights {
  Parameter* self_q = nullptr;
  Parameter* self_k = nullptr;
  Parameter* self_v = nullptr;
  Parameter* self_o = nullptr;
  LayerNormWeights ln1;
  Parameter* cross_q = nullptr;
  Parameter* cross_k = nullptr;
  Parameter* cross_v = nullptr;
  Parameter* cross_o = nullptr;
  LayerNormWeights ln2;
  FfnWeights ffn;
  LayerNormWeights ln3;
};

SeqTensor sinusoidal_positions(std::size_t length, std::size_t dim);

/// Frontend affine + positions → adapter → cross-attention decoder → logits.
class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(ModelConfig cfg);
  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.scalar_count(); }

  /// Throws LengthError when the adapter cannot process `length` frames.
  std::size_t encoder_output_length(std::size_t length) const;

  Var frontend(Tape& tape, const SeqTensor& source) const;
  Var encode(Tape& tape, const SeqTensor& source, const EncodeOptions& opts = {}) const;
  /// Logits [T×V] for decoder inputs `tokens` attending over `memory`.
  Var decode_logits(Tape& tape, Var memory, std::span<const int> tokens) const;
  /// Teacher-forced mean cross-entropy over target[1:].
  Var loss(Tape& tape, const ToyExample& example, const EncodeOptions& opts = {}) const;

  /// Greedy decode; returned tokens exclude BOS and end at the first EOS.
  std::vector<int> greedy_decode(const SeqTensor& source, std::size_t max_tokens,
                                 const EncodeOptions& opts = {}) const;

  /// Decoder-only greedy decode over a precomputed memory value.
  std::vector<int> greedy_decode_memory(const SeqTensor& memory, std::size_t max_tokens) const;

 private:
  Var adapter_forward(Tape& tape, Var x, const EncodeOptions& opts) const;

  ModelConfig cfg_;
  ParamStore params_;
  Parameter* frontend_w_ = nullptr;
  Parameter* frontend_b_ = nullptr;
  std::vector<AdapterLayerWeights> madapter_;
  CnnAdapterWeights cnn_;
  TransformerAdapterWeights transformer_;
  Parameter* embedding_ = nullptr;
  std::vector<DecoderBlockWeights> decoder_;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
};

std::unique_ptr<Seq2SeqModel> build_model(const ModelConfig& cfg);

// ---------------------------------------------------------------------------

struct LossPoint {
  std::size_t step = 0;
  float probe_loss = 0.0f;  // loss on a fixed probe batch before this step's update
  float train_loss = 0.0f;  // mean training batch loss since the previous point
};

struct TrainReport {
  std::vector<LossPoint> curve;
};

/// Teacher-forced Adam training with global-norm clipping. Deterministic
/// given the model config seed. Throws DivergenceError on a non-finite loss.
/// `on_point`, if set, receives each curve point as it is produced.
TrainReport train(Seq2SeqModel& model, std::span<const ToyExample> data,
                  const std::function<void(const LossPoint&)>& on_point = {});

struct EvalMetrics {
  double token_accuracy = 0.0;
  double exact_match = 0.0;
  std::size_t reference_tokens = 0;
  std::size_t examples = 0;
};

/// Position-aligned accuracy of `predicted` against `reference` (both
/// without BOS); `correct` counts matches at positions < |reference|.
std::size_t aligned_matches(std::span<const int> predicted, std::span<const int> reference);

struct PredictionScore {
  std::size_t matches = 0;
  bool exact = false;
};

PredictionScore score_prediction(std::span<const int> predicted, std::span<const int> reference);

EvalMetrics evaluate(const Seq2SeqModel& model, std::span<const ToyExample> data,
                     const EncodeOptionsFor& options = {});

}  // namespace MADAPTER_NS
}  // namespace madapter
