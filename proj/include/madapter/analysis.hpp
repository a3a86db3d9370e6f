#pragma once

#include <cstdint>
#include <iosfwd>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "madapter/toy_task.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// Normalized Hoyer sparsity (sqrt(n) - |x|_1/|x|_2) / (sqrt(n) - 1):
/// 1 for a one-hot vector, 0 for equal magnitudes. Throws
/// std::invalid_argument for n < 2 or an all-zero vector.
double hoyer(std::span<const Real> x);

/// Mean Hoyer score over every adapter output frame of every example.
double model_hoyer(const Seq2SeqModel& model, std::span<const ToyExample> data);

enum class PerturbLevel { Frontend, Adapter };

std::string to_string(PerturbLevel level);
PerturbLevel parse_perturb_level(std::string_view text);

struct PerturbSpec {
  PerturbLevel level = PerturbLevel::Adapter;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  // Adapter level only: perturb the output of every adapter layer instead of
  // the final output alone.
  bool per_layer = false;

  void validate() const;
};

/// Number of frames zeroed out of `length` at `ratio`: floor(ratio * length).
std::size_t perturbed_frame_count(std::size_t length, double ratio);

/// Zeroes floor(ratio * rows) whole rows of `x`, chosen uniformly without
/// replacement. Returns the zeroed row indices in ascending order.
std::vector<std::size_t> zero_random_frames(SeqTensor& x, double ratio, Rng& rng);

/// Encode options that apply `spec` to example `index`. The frame choice
/// depends only on (spec.seed, index, layer).
EncodeOptions perturb_options(const PerturbSpec& spec, std::size_t index, bool local_only = false);

EvalMetrics perturb_eval(const Seq2SeqModel& model, std::span<const ToyExample> data,
                         const PerturbSpec& spec, bool local_only = false);

/// Evaluation with every M-Adapter layer reduced to its local path.
EvalMetrics local_only_eval(const Seq2SeqModel& model, std::span<const ToyExample> data);

// ---------------------------------------------------------------------------

struct SweepRow {
  std::string config;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

struct SweepReport {
  std::string dataset;  // identifies the train/eval data
  std::vector<SweepRow> rows;

  const SweepRow* find(std::string_view config, std::string_view metric = "token_accuracy") const;
  double value(std::string_view config, std::string_view metric = "token_accuracy") const;
};

/// One JSON object per row: {"config","metric","value","seed"}.
void write_jsonl(std::ostream& out, const SweepReport& report);
/// Aligned columns for humans.
void write_summary(std::ostream& out, const SweepReport& report);

struct SweepData {
  std::span<const ToyExample> train;
  std::span<const ToyExample> eval;
  std::string id;
};

/// Worker threads for sweeps: MADAPTER_THREADS if set and positive, else the
/// hardware concurrency.
std::size_t sweep_threads();

/// Runs `jobs` on up to `threads` workers. Job i writes only its own slot, so
/// results do not depend on scheduling.
void run_parallel(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job);

/// One-layer k=8 p=4 M-Adapter per stride; `base` supplies everything else.
SweepReport stride_sweep(const ModelConfig& base, const std::vector<std::size_t>& strides,
                         const SweepData& data);

/// One model per pooling position with the `base` adapter geometry.
SweepReport position_ablation(const ModelConfig& base, const SweepData& data);

/// M-Adapter and CNN adapter trained on the first fraction*n examples.
SweepReport resource_sweep(const ModelConfig& base, const std::vector<double>& fractions,
                           const SweepData& data);

/// Token accuracy of a trained model under each perturbation ratio.
SweepReport perturbation_sweep(const Seq2SeqModel& model, PerturbLevel level,
                               const std::vector<double>& ratios, std::uint64_t seed,
                               const SweepData& data, bool per_layer = false);

std::string stride_label(std::size_t stride);
std::string position_label(PoolPosition position);
std::string resource_label(AdapterKind kind, double fraction);
std::string ratio_label(PerturbLevel level, double ratio);

}  // namespace MADAPTER_NS
}  // namespace madapter
