// madapter: data generation, training, evaluation, gradient checks and
// analysis sweeps for the toy M-Adapter stack.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gradcheck_command.hpp"
#include "madapter/analysis.hpp"
#include "madapter/checkpoint.hpp"
#include "madapter/errors.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace madapter;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Flag groups

struct ModelFlags {
  std::string preset = "mada3";
  std::string adapter = "madapter";
  std::optional<std::size_t> layers, kernel, stride, padding, heads, dim, steps, batch;
  std::optional<std::size_t> vocab, frame_dim, warmup;
  std::optional<std::string> pool_position, lr_schedule;
  std::optional<float> lr;
  std::uint64_t seed = 42;

  void add_to(CLI::App& app) {
    app.add_option("--preset", preset, "Adapter geometry preset")
        ->check(CLI::IsMember({"mada1", "mada3"}))
        ->capture_default_str();
    app.add_option("--adapter", adapter, "Adapter kind")
        ->check(CLI::IsMember({"madapter", "cnn", "transformer"}))
        ->capture_default_str();
    app.add_option("--layers", layers, "Adapter layers");
    app.add_option("--kernel", kernel, "Pooling kernel");
    app.add_option("--stride", stride, "Pooling stride");
    app.add_option("--padding", padding, "Pooling padding");
    app.add_option("--pool-position", pool_position, "Pooling position")
        ->check(CLI::IsMember({"inside", "b4p", "b4f", "b4o"}));
    app.add_option("--heads", heads, "Attention heads");
    app.add_option("--dim", dim, "Model width D");
    app.add_option("--steps", steps, "Training steps");
    app.add_option("--batch", batch, "Batch size");
    app.add_option("--lr", lr, "Peak learning rate");
    app.add_option("--warmup", warmup, "Linear warmup steps");
    app.add_option("--lr-schedule", lr_schedule, "Learning rate after warmup (default cosine)")
        ->check(CLI::IsMember({"constant", "cosine"}));
    app.add_option("--vocab", vocab, "Vocabulary size");
    app.add_option("--frame-dim", frame_dim, "Source frame width");
    app.add_option("--seed", seed, "Model and training seed")->capture_default_str();
  }

  ModelConfig resolve() const {
    ModelConfig c;
    const std::size_t d = dim.value_or(64);
    const std::size_t h = heads.value_or(4);
    c.adapter_cfg = preset == "mada1" ? AdapterConfig::mada1(d, h) : AdapterConfig::mada3(d, h);
    c.adapter = parse_adapter_kind(adapter);
    if (layers) c.adapter_cfg.layers = *layers;
    if (kernel) c.adapter_cfg.pool.kernel = *kernel;
    if (stride) c.adapter_cfg.pool.stride = *stride;
    if (padding) c.adapter_cfg.pool.padding = *padding;
    if (pool_position) c.adapter_cfg.position = parse_pool_position(*pool_position);
    if (steps) c.steps = *steps;
    if (batch) c.batch = *batch;
    if (lr) c.optim.lr = *lr;
    if (warmup) c.optim.warmup = *warmup;
    if (lr_schedule) c.optim.cosine_decay = *lr_schedule == "cosine";
    if (vocab) c.vocab = *vocab;
    if (frame_dim) c.frame_dim = *frame_dim;
    c.seed = seed;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct ToyFlags {
  ToyConfig cfg;

  void add_to(CLI::App& app) {
    app.add_option("--vocab", cfg.vocab, "Vocabulary size")->capture_default_str();
    app.add_option("--frame-dim", cfg.frame_dim, "Source frame width")->capture_default_str();
    app.add_option("--target-min", cfg.target_min)->capture_default_str();
    app.add_option("--target-max", cfg.target_max)->capture_default_str();
    app.add_option("--upsample-min", cfg.upsample_min)->capture_default_str();
    app.add_option("--upsample-max", cfg.upsample_max)->capture_default_str();
    app.add_option("--noise", cfg.noise, "Gaussian noise sigma")->capture_default_str();
    app.add_option("--task-seed", cfg.task_seed, "Codebook and substitution seed")
        ->capture_default_str();
    app.add_flag("--identity-permutation", cfg.identity_permutation);
  }
};

/// A dataset given by --data PATH or generated from the default task.
struct DataFlags {
  std::string flag;
  std::string path;
  std::size_t size;
  std::uint64_t seed;

  void add_to(CLI::App& app, const std::string& name, const std::string& size_flag,
              const std::string& what) {
    flag = name;
    app.add_option(name, path, what + " dataset file (default: generated)");
    app.add_option(size_flag, size, "Size of the generated " + what + " dataset")
        ->capture_default_str();
  }
};

struct LoadedData {
  std::vector<ToyExample> examples;
  std::string id;
};

std::vector<ToyExample> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset " + path);
  try {
    auto data = read_dataset(in);
    if (data.empty()) throw UsageError("dataset " + path + " is empty");
    return data;
  } catch (const FormatError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

LoadedData load_data(const DataFlags& f, RunManifest& manifest, const std::string& role) {
  LoadedData d;
  if (!f.path.empty()) {
    d.examples = read_dataset_file(f.path);
    manifest.add_input(role, f.path);
    d.id = f.path + "@" + manifest.json()["inputs"][role]["sha256"].get<std::string>().substr(0, 12);
  } else {
    d.examples = generate_dataset(ToyConfig{}, f.size, f.seed);
    manifest.add_generated_input(role, {{"toy", ojson(to_json(ToyConfig{}))},
                                        {"n", f.size},
                                        {"seed", f.seed}});
    d.id = "toy:n=" + std::to_string(f.size) + ",seed=" + std::to_string(f.seed);
  }
  return d;
}

void check_compatible(const ModelConfig& cfg, const std::vector<ToyExample>& data,
                      const std::string& what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].source.cols() != cfg.frame_dim) {
      throw UsageError(what + " example " + std::to_string(i) + " has frame width " +
                       std::to_string(data[i].source.cols()) + ", model expects " +
                       std::to_string(cfg.frame_dim));
    }
    for (int t : data[i].target) {
      if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab) {
        throw UsageError(what + " example " + std::to_string(i) + " has token " +
                         std::to_string(t) + " outside the model vocabulary");
      }
    }
    if (data[i].target.size() < 2) {
      throw UsageError(what + " example " + std::to_string(i) + " has no BOS/EOS");
    }
  }
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) return {};
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw UsageError("cannot create output directory " + out);
  return out;
}

std::unique_ptr<Seq2SeqModel> load_model(const std::string& path, RunManifest& manifest) {
  if (!fs::is_regular_file(path)) throw UsageError("no checkpoint at " + path);
  manifest.add_input("checkpoint", path);
  try {
    return load_checkpoint(fs::path(path));
  } catch (const FormatError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

ojson metrics_json(const EvalMetrics& m) {
  return {{"token_accuracy", m.token_accuracy},
          {"exact_match", m.exact_match},
          {"reference_tokens", m.reference_tokens},
          {"examples", m.examples}};
}

std::string report_jsonl(const SweepReport& r) {
  std::ostringstream out;
  write_jsonl(out, r);
  return out.str();
}

std::string report_summary(const SweepReport& r) {
  std::ostringstream out;
  write_summary(out, r);
  return out.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw UsageError("empty list '" + text + "'");
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(flag + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct GenCommand {
  ToyFlags toy;
  std::size_t n = kDefaultTrainSize;
  std::uint64_t seed = kDefaultTrainSeed;
  std::string out;

  int run() {
    try {
      toy.cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (n == 0) throw UsageError("--n must be positive");
    const auto dir = prepare_out(out);
    const auto data = generate_dataset(toy.cfg, n, seed);
    std::ostringstream text;
    write_dataset(text, data);
    RunManifest manifest("gen");
    manifest.set_config("toy", ojson(to_json(toy.cfg)));
    manifest.set_config("n", n);
    manifest.set_seed("data", seed);
    manifest.write_output(dir, "dataset.jsonl", text.str());
    manifest.save(dir);
    std::cout << "wrote " << n << " examples to " << (dir / "dataset.jsonl").string() << '\n';
    return kExitOk;
  }
};

struct TrainCommand {
  ModelFlags model;
  DataFlags train_data{"", "", kDefaultTrainSize, kDefaultTrainSeed};
  DataFlags eval_data{"", "", kDefaultEvalSize, kDefaultEvalSeed};
  std::string out;
  bool quiet = false;

  int run() {
    const ModelConfig cfg = model.resolve();
    const auto dir = prepare_out(out);
    RunManifest manifest("train");
    manifest.set_config("model", ojson(to_json(cfg)));
    manifest.set_seed("model", cfg.seed);
    const auto train_set = load_data(train_data, manifest, "train");
    const auto eval_set = load_data(eval_data, manifest, "eval");
    check_compatible(cfg, train_set.examples, "train");
    check_compatible(cfg, eval_set.examples, "eval");

    Seq2SeqModel m(cfg);
    try {
      for (const auto& ex : train_set.examples) m.encoder_output_length(ex.source.rows());
    } catch (const LengthError& e) {
      throw UsageError(std::string("adapter cannot process the training data: ") + e.what());
    }
    std::ostringstream curve;
    const auto report = train(m, train_set.examples, [&](const LossPoint& p) {
      ojson j{{"step", p.step}, {"probe_loss", p.probe_loss}, {"train_loss", p.train_loss}};
      curve << j.dump() << '\n';
      if (!quiet) std::cout << j.dump() << std::endl;
    });
    const auto metrics = evaluate(m, eval_set.examples);
    ojson mj = metrics_json(metrics);
    mj["parameters"] = m.parameter_count();
    std::cout << mj.dump() << '\n';

    std::ostringstream ckpt;
    save_checkpoint(ckpt, m);
    manifest.write_output(dir, "checkpoint.mada", ckpt.str());
    manifest.write_output(dir, "loss_curve.jsonl", curve.str());
    manifest.write_output(dir, "metrics.json", mj.dump(2) + "\n");
    manifest.save(dir);
    return kExitOk;
  }
};

struct PerturbFlags {
  std::optional<std::string> level;
  std::optional<double> ratio;
  bool per_layer = false;

  void add_to(CLI::App& app) {
    app.add_option("--perturb-level", level, "Zero frames at this level")
        ->check(CLI::IsMember({"frontend", "adapter"}));
    app.add_option("--perturb-ratio", ratio, "Fraction of frames zeroed")
        ->check(CLI::Range(0.0, 1.0));
    app.add_flag("--per-layer", per_layer, "Adapter level: perturb every layer output");
  }
};

struct EvalCommand {
  std::string checkpoint;
  DataFlags data{"", "", kDefaultEvalSize, kDefaultEvalSeed};
  bool local_only = false;
  PerturbFlags perturb;
  std::uint64_t seed = 1;
  std::string out;

  int run() {
    RunManifest manifest("eval");
    auto model = load_model(checkpoint, manifest);
    const auto eval_set = load_data(data, manifest, "eval");
    check_compatible(model->config(), eval_set.examples, "eval");
    if (local_only && model->config().adapter != AdapterKind::MAdapter) {
      throw UsageError("--local-only needs an M-Adapter checkpoint");
    }
    if (perturb.per_layer && perturb.level.value_or("adapter") != "adapter") {
      throw UsageError("--per-layer applies to --perturb-level adapter");
    }
    PerturbSpec spec;
    if (perturb.level) spec.level = parse_perturb_level(*perturb.level);
    spec.ratio = perturb.ratio.value_or(0.0);
    spec.seed = seed;
    spec.per_layer = perturb.per_layer;
    const auto m = perturb_eval(*model, eval_set.examples, spec, local_only);
    manifest.set_config("eval", {{"local_only", local_only},
                                 {"perturb_level", to_string(spec.level)},
                                 {"perturb_ratio", spec.ratio},
                                 {"per_layer", spec.per_layer}});
    manifest.set_seed("perturb", seed);
    const ojson mj = metrics_json(m);
    std::cout << mj.dump() << '\n';
    if (!out.empty()) {
      const auto dir = prepare_out(out);
      manifest.write_output(dir, "metrics.json", mj.dump(2) + "\n");
      manifest.save(dir);
    }
    return kExitOk;
  }
};

struct GradcheckCommand {
  std::uint64_t seed = 1;
  std::string sign_flip;
  std::string out;

  int run() {
    const auto result = run_gradcheck(seed, sign_flip);
    std::ostringstream table;
    table << std::left << std::setw(20) << "group" << std::right << std::setw(8) << "tensors"
          << std::setw(14) << "worst_rel" << "  status  worst_param\n";
    for (const auto& g : result.groups) {
      table << std::left << std::setw(20) << g.group << std::right << std::setw(8) << g.tensors
            << std::setw(14) << std::scientific << std::setprecision(3) << g.worst_relative
            << "  " << (g.passed ? "ok    " : "FAIL  ") << "  " << g.worst_param << '\n';
    }
    std::cout << table.str();
    for (const auto& f : result.failures) {
      std::cerr << "gradient check failed: " << f.param << " relative " << f.relative
                << " absolute " << f.absolute << '\n';
    }
    if (!out.empty()) {
      const auto dir = prepare_out(out);
      RunManifest manifest("gradcheck");
      manifest.set_seed("suite", seed);
      std::ostringstream rows;
      for (const auto& g : result.groups) {
        rows << ojson{{"group", g.group},
                      {"tensors", g.tensors},
                      {"worst_relative", g.worst_relative},
                      {"worst_param", g.worst_param},
                      {"passed", g.passed}}
                    .dump()
             << '\n';
      }
      manifest.write_output(dir, "gradcheck.jsonl", rows.str());
      manifest.save(dir);
    }
    std::cout << (result.passed() ? "gradcheck passed" : "gradcheck FAILED") << '\n';
    return result.passed() ? kExitOk : kExitFailure;
  }
};

struct AnalyzeCommand {
  std::string what;
  std::string checkpoint;
  DataFlags data{"", "", kDefaultEvalSize, kDefaultEvalSeed};
  PerturbFlags perturb;
  std::uint64_t seed = 1;
  std::string out;

  int run() {
    RunManifest manifest("analyze " + what);
    auto model = load_model(checkpoint, manifest);
    const auto eval_set = load_data(data, manifest, "eval");
    check_compatible(model->config(), eval_set.examples, "eval");
    const SweepData sd{{}, eval_set.examples, eval_set.id};
    SweepReport report;
    report.dataset = eval_set.id;
    if (what == "hoyer") {
      report.rows.push_back({to_string(model->config().adapter), "hoyer",
                             model_hoyer(*model, eval_set.examples), model->config().seed});
    } else if (what == "local-only") {
      if (model->config().adapter != AdapterKind::MAdapter) {
        throw UsageError("local-only analysis needs an M-Adapter checkpoint");
      }
      const auto full = evaluate(*model, eval_set.examples);
      const auto local = local_only_eval(*model, eval_set.examples);
      report.rows.push_back({"full", "token_accuracy", full.token_accuracy, model->config().seed});
      report.rows.push_back(
          {"local_only", "token_accuracy", local.token_accuracy, model->config().seed});
    } else {
      std::vector<PerturbLevel> levels{PerturbLevel::Frontend, PerturbLevel::Adapter};
      if (perturb.level) levels = {parse_perturb_level(*perturb.level)};
      if (perturb.per_layer && levels != std::vector<PerturbLevel>{PerturbLevel::Adapter}) {
        throw UsageError("--per-layer applies to --perturb-level adapter");
      }
      std::vector<double> ratios{0.0, 0.1, 0.2, 0.5};
      if (perturb.ratio) ratios = {*perturb.ratio};
      for (auto level : levels) {
        const auto r = perturbation_sweep(*model, level, ratios, seed, sd, perturb.per_layer);
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
      }
      manifest.set_seed("perturb", seed);
    }
    std::cout << report_summary(report);
    if (!out.empty()) {
      const auto dir = prepare_out(out);
      manifest.write_output(dir, "report.jsonl", report_jsonl(report));
      manifest.save(dir);
    }
    return kExitOk;
  }
};

struct SweepCommand {
  std::string what;
  ModelFlags model;
  DataFlags train_data{"", "", kDefaultTrainSize, kDefaultTrainSeed};
  DataFlags eval_data{"", "", kDefaultEvalSize, kDefaultEvalSeed};
  std::string strides = "2,4,6,8";
  std::string fractions = "1.0,0.5,0.2,0.1";
  std::size_t repeats = 1;
  std::string out;

  int run() {
    const ModelConfig base = model.resolve();
    const auto stride_list = parse_list<std::size_t>(strides, "--strides");
    const auto fraction_list = parse_list<double>(fractions, "--fractions");
    for (auto s : stride_list) {
      if (s == 0) throw UsageError("--strides: stride must be positive");
    }
    for (double f : fraction_list) {
      if (!(f > 0.0 && f <= 1.0)) throw UsageError("--fractions: values must be in (0,1]");
    }
    if (repeats == 0) throw UsageError("--repeats must be positive");
    RunManifest manifest("sweep " + what);
    manifest.set_config("model", ojson(to_json(base)));
    manifest.set_config("strides", stride_list);
    manifest.set_config("fractions", fraction_list);
    manifest.set_config("repeats", repeats);
    const auto train_set = load_data(train_data, manifest, "train");
    const auto eval_set = load_data(eval_data, manifest, "eval");
    check_compatible(base, train_set.examples, "train");
    check_compatible(base, eval_set.examples, "eval");
    const SweepData sd{train_set.examples, eval_set.examples,
                       train_set.id + "|" + eval_set.id};

    SweepReport report;
    report.dataset = sd.id;
    for (std::size_t r = 0; r < repeats; ++r) {
      ModelConfig cfg = base;
      cfg.seed = base.seed + r;
      manifest.set_seed("repeat_" + std::to_string(r), cfg.seed);
      SweepReport part;
      if (what == "stride") {
        part = stride_sweep(cfg, stride_list, sd);
      } else if (what == "position") {
        part = position_ablation(cfg, sd);
      } else {
        part = resource_sweep(cfg, fraction_list, sd);
      }
      report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
    }
    std::cout << report_summary(report);
    if (!out.empty()) {
      const auto dir = prepare_out(out);
      manifest.write_output(dir, "report.jsonl", report_jsonl(report));
      manifest.write_output(dir, "summary.txt", report_summary(report));
      manifest.save(dir);
    }
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-Adapter toy experiments"};
  app.require_subcommand(1);

  GenCommand gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a toy dataset");
  gen.toy.add_to(*gen_cmd);
  gen_cmd->add_option("--n", gen.n, "Number of examples")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainCommand train_c;
  auto* train_cmd = app.add_subcommand("train", "Train a model and evaluate it");
  train_c.model.add_to(*train_cmd);
  train_c.train_data.add_to(*train_cmd, "--data", "--train-size", "training");
  train_c.eval_data.add_to(*train_cmd, "--eval-data", "--eval-size", "evaluation");
  train_cmd->add_option("--out", train_c.out, "Output directory")->required();
  train_cmd->add_flag("--quiet", train_c.quiet, "Do not print the loss curve");

  EvalCommand eval_c;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_c.checkpoint, "Checkpoint file")->required();
  eval_c.data.add_to(*eval_cmd, "--data", "--eval-size", "evaluation");
  eval_cmd->add_flag("--local-only", eval_c.local_only, "Bypass attention mixing");
  eval_c.perturb.add_to(*eval_cmd);
  eval_cmd->add_option("--seed", eval_c.seed, "Perturbation seed")->capture_default_str();
  eval_cmd->add_option("--out", eval_c.out, "Output directory");

  GradcheckCommand grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad_cmd->add_option("--seed", grad.seed, "Suite seed")->capture_default_str();
  grad_cmd->add_option("--out", grad.out, "Output directory");
  grad_cmd->add_option("--inject-sign-flip", grad.sign_flip)->group("");

  AnalyzeCommand analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyze a trained checkpoint");
  analyze_cmd->add_option("analysis", analyze.what, "hoyer | perturb | local-only")
      ->required()
      ->check(CLI::IsMember({"hoyer", "perturb", "local-only"}));
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint, "Checkpoint file")->required();
  analyze.data.add_to(*analyze_cmd, "--data", "--eval-size", "evaluation");
  analyze.perturb.add_to(*analyze_cmd);
  analyze_cmd->add_option("--seed", analyze.seed, "Perturbation seed")->capture_default_str();
  analyze_cmd->add_option("--out", analyze.out, "Output directory");

  SweepCommand sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one model per configuration");
  sweep_cmd->add_option("kind", sweep.what, "stride | position | resource")
      ->required()
      ->check(CLI::IsMember({"stride", "position", "resource"}));
  sweep.model.add_to(*sweep_cmd);
  sweep.train_data.add_to(*sweep_cmd, "--data", "--train-size", "training");
  sweep.eval_data.add_to(*sweep_cmd, "--eval-data", "--eval-size", "evaluation");
  sweep_cmd->add_option("--strides", sweep.strides, "Comma-separated strides")
      ->capture_default_str();
  sweep_cmd->add_option("--fractions", sweep.fractions, "Comma-separated data fractions")
      ->capture_default_str();
  sweep_cmd->add_option("--repeats", sweep.repeats, "Seeds seed..seed+repeats-1")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return gen.run();
    if (*train_cmd) return train_c.run();
    if (*eval_cmd) return eval_c.run();
    if (*grad_cmd) return grad.run();
    if (*analyze_cmd) return analyze.run();
    if (*sweep_cmd) return sweep.run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
