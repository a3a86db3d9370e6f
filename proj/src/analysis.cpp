#include "madapter/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace madapter {
inline namespace MADAPTER_NS {

double hoyer(std::span<const Real> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("hoyer needs at least 2 elements, got " + std::to_string(n));
  double l1 = 0.0, l2 = 0.0;
  for (Real v : x) {
    const double a = std::abs(static_cast<double>(v));
    l1 += a;
    l2 += a * a;
  }
  if (l2 == 0.0) throw std::invalid_argument("hoyer is undefined for an all-zero vector");
  const double root_n = std::sqrt(static_cast<double>(n));
  const double h = (root_n - l1 / std::sqrt(l2)) / (root_n - 1.0);
  return std::clamp(h, 0.0, 1.0);
}

double model_hoyer(const Seq2SeqModel& model, std::span<const ToyExample> data) {
  double total = 0.0;
  std::size_t frames = 0;
  for (const auto& ex : data) {
    Tape tape(false);
    const SeqTensor out = model.encode(tape, ex.source).value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
      total += hoyer(out.row(r));
      ++frames;
    }
  }
  if (frames == 0) throw std::invalid_argument("model_hoyer needs a nonempty dataset");
  return total / static_cast<double>(frames);
}

std::string to_string(PerturbLevel level) {
  return level == PerturbLevel::Frontend ? "frontend" : "adapter";
}

PerturbLevel parse_perturb_level(std::string_view text) {
  if (text == "frontend") return PerturbLevel::Frontend;
  if (text == "adapter") return PerturbLevel::Adapter;
  throw std::invalid_argument("unknown perturbation level '" + std::string(text) + "'");
}

void PerturbSpec::validate() const {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("perturbation ratio must be in [0,1]");
  }
  if (per_layer && level != PerturbLevel::Adapter) {
    throw std::invalid_argument("per-layer perturbation applies to the adapter level only");
  }
}

std::size_t perturbed_frame_count(std::size_t length, double ratio) {
  // The small slack keeps products such as 0.29*100 from landing one below.
  const auto n = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(length) + 1e-9));
  return std::min(n, length);
}

std::vector<std::size_t> zero_random_frames(SeqTensor& x, double ratio, Rng& rng) {
  const std::size_t rows = x.rows();
  const std::size_t k = perturbed_frame_count(rows, ratio);
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rows - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  for (auto r : idx) std::fill(x.row(r).begin(), x.row(r).end(), Real(0));
  return idx;
}

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Var zero_frames_of(Var v, double ratio, std::uint64_t seed) {
  SeqTensor t = v.value();
  Rng rng(seed);
  zero_random_frames(t, ratio, rng);
  return v.tape->constant(std::move(t));
}

}  // namespace

EncodeOptions perturb_options(const PerturbSpec& spec, std::size_t index, bool local_only) {
  spec.validate();
  EncodeOptions opts;
  opts.local_only = local_only;
  if (spec.ratio == 0.0) return opts;
  const std::uint64_t base = mix(mix(spec.seed) ^ index);
  const double ratio = spec.ratio;
  if (spec.level == PerturbLevel::Frontend) {
    opts.frontend_hook = [=](Var v) { return zero_frames_of(v, ratio, base); };
  } else if (spec.per_layer) {
    opts.layer_hook = [=](std::size_t layer, Var v) {
      return zero_frames_of(v, ratio, mix(base + layer + 1));
    };
  } else {
    opts.output_hook = [=](Var v) { return zero_frames_of(v, ratio, base); };
  }
  return opts;
}

EvalMetrics perturb_eval(const Seq2SeqModel& model, std::span<const ToyExample> data,
                         const PerturbSpec& spec, bool local_only) {
  spec.validate();
  return evaluate(model, data,
                  [&](std::size_t i) { return perturb_options(spec, i, local_only); });
}

EvalMetrics local_only_eval(const Seq2SeqModel& model, std::span<const ToyExample> data) {
  return evaluate(model, data, [](std::size_t) {
    EncodeOptions o;
    o.local_only = true;
    return o;
  });
}

// ---------------------------------------------------------------------------

const SweepRow* SweepReport::find(std::string_view config, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.config == config && r.metric == metric) return &r;
  }
  return nullptr;
}

double SweepReport::value(std::string_view config, std::string_view metric) const {
  const auto* r = find(config, metric);
  if (!r) throw std::out_of_range("no row " + std::string(config) + "/" + std::string(metric));
  return r->value;
}

void write_jsonl(std::ostream& out, const SweepReport& report) {
  for (const auto& r : report.rows) {
    nlohmann::ordered_json j;
    j["config"] = r.config;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["seed"] = r.seed;
    out << j.dump() << '\n';
  }
}

void write_summary(std::ostream& out, const SweepReport& report) {
  std::size_t cw = 6, mw = 6;
  for (const auto& r : report.rows) {
    cw = std::max(cw, r.config.size());
    mw = std::max(mw, r.metric.size());
  }
  out << std::left << std::setw(static_cast<int>(cw)) << "config" << "  "
      << std::setw(static_cast<int>(mw)) << "metric" << "  " << std::right << std::setw(8)
      << "value" << "  seed\n";
  for (const auto& r : report.rows) {
    std::ostringstream v;
    v << std::fixed << std::setprecision(4) << r.value;
    out << std::left << std::setw(static_cast<int>(cw)) << r.config << "  "
        << std::setw(static_cast<int>(mw)) << r.metric << "  " << std::right << std::setw(8)
        << v.str() << "  " << r.seed << '\n';
  }
}

std::size_t sweep_threads() {
  if (const char* env = std::getenv("MADAPTER_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void run_parallel(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct Job {
  std::string label;
  ModelConfig cfg;
  std::span<const ToyExample> train;
};

SweepReport run_jobs(const std::vector<Job>& jobs, const SweepData& data) {
  std::vector<double> acc(jobs.size());
  run_parallel(jobs.size(), sweep_threads(), [&](std::size_t i) {
    Seq2SeqModel model(jobs[i].cfg);
    train(model, jobs[i].train);
    acc[i] = evaluate(model, data.eval).token_accuracy;
  });
  SweepReport report;
  report.dataset = data.id;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    report.rows.push_back({jobs[i].label, "token_accuracy", acc[i], jobs[i].cfg.seed});
  }
  return report;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string stride_label(std::size_t stride) { return "stride=" + std::to_string(stride); }
std::string position_label(PoolPosition position) { return "position=" + to_string(position); }
std::string resource_label(AdapterKind kind, double fraction) {
  return to_string(kind) + "/fraction=" + fixed(fraction, 2);
}
std::string ratio_label(PerturbLevel level, double ratio) {
  return to_string(level) + "/ratio=" + fixed(ratio, 2);
}

SweepReport stride_sweep(const ModelConfig& base, const std::vector<std::size_t>& strides,
                         const SweepData& data) {
  std::vector<Job> jobs;
  for (auto s : strides) {
    ModelConfig cfg = base;
    cfg.adapter = AdapterKind::MAdapter;
    cfg.adapter_cfg.layers = 1;
    cfg.adapter_cfg.pool = {8, s, 4};
    cfg.validate();
    jobs.push_back({stride_label(s), cfg, data.train});
  }
  return run_jobs(jobs, data);
}

SweepReport position_ablation(const ModelConfig& base, const SweepData& data) {
  std::vector<Job> jobs;
  for (auto p : {PoolPosition::Inside, PoolPosition::BeforeAttention, PoolPosition::BeforeFfn,
                 PoolPosition::AfterOutput}) {
    ModelConfig cfg = base;
    cfg.adapter = AdapterKind::MAdapter;
    cfg.adapter_cfg.position = p;
    cfg.validate();
    jobs.push_back({position_label(p), cfg, data.train});
  }
  return run_jobs(jobs, data);
}

SweepReport resource_sweep(const ModelConfig& base, const std::vector<double>& fractions,
                           const SweepData& data) {
  std::vector<Job> jobs;
  for (auto kind : {AdapterKind::MAdapter, AdapterKind::Cnn}) {
    for (double f : fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("fractions must be in (0,1]");
      const auto n = static_cast<std::size_t>(std::floor(f * static_cast<double>(data.train.size())));
      if (n == 0) throw std::invalid_argument("fraction " + fixed(f, 2) + " selects no examples");
      ModelConfig cfg = base;
      cfg.adapter = kind;
      cfg.validate();
      jobs.push_back({resource_label(kind, f), cfg, data.train.first(n)});
    }
  }
  return run_jobs(jobs, data);
}

SweepReport perturbation_sweep(const Seq2SeqModel& model, PerturbLevel level,
                               const std::vector<double>& ratios, std::uint64_t seed,
                               const SweepData& data, bool per_layer) {
  std::vector<double> acc(ratios.size());
  run_parallel(ratios.size(), sweep_threads(), [&](std::size_t i) {
    acc[i] = perturb_eval(model, data.eval, {level, ratios[i], seed, per_layer}).token_accuracy;
  });
  SweepReport report;
  report.dataset = data.id;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    report.rows.push_back({ratio_label(level, ratios[i]), "token_accuracy", acc[i], seed});
  }
  return report;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
