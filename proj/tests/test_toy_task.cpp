#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "madapter/errors.hpp"
#include "madapter/toy_task.hpp"

using namespace madapter;

namespace {

std::string serialize(std::span<const ToyExample> data) {
  std::ostringstream out;
  write_dataset(out, data);
  return out.str();
}

ModelConfig tiny_model(AdapterKind kind = AdapterKind::MAdapter) {
  ModelConfig c;
  c.adapter = kind;
  c.adapter_cfg = AdapterConfig::mada3(8, 2);
  c.batch = 4;
  c.steps = 200;
  return c;
}

}  // namespace

TEST_CASE("dataset generation is deterministic") {
  ToyConfig cfg;
  const auto a = generate_dataset(cfg, 20, 5);
  const auto b = generate_dataset(cfg, 20, 5);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) != serialize(generate_dataset(cfg, 20, 6)));
  CHECK_THROWS_AS(generate_dataset(cfg, 0, 5), std::invalid_argument);
}

TEST_CASE("examples satisfy the task invariants") {
  ToyConfig cfg;
  const auto tables = make_tables(cfg);
  for (const auto& ex : generate_dataset(cfg, 200, 9)) {
    REQUIRE(ex.target.size() >= cfg.target_min + 2);
    CHECK(ex.target.size() <= cfg.target_max + 2);
    CHECK(ex.target.front() == kBosToken);
    CHECK(ex.target.back() == kEosToken);
    for (std::size_t i = 1; i + 1 < ex.target.size(); ++i) {
      CHECK(ex.target[i] >= kFirstContentToken);
      CHECK(ex.target[i] < static_cast<int>(cfg.vocab));
    }
    const std::size_t content = ex.target.size() - 2;
    CHECK(ex.source.cols() == cfg.frame_dim);
    CHECK(ex.source.rows() >= content * cfg.upsample_min);
    CHECK(ex.source.rows() <= content * cfg.upsample_max);
  }
  // The substitution is a permutation of the content tokens fixing specials.
  std::set<int> image(tables.substitution.begin(), tables.substitution.end());
  CHECK(image.size() == cfg.vocab);
  for (int s : {kPadToken, kBosToken, kEosToken}) CHECK(tables.substitution[s] == s);
}

TEST_CASE("target length 5 with upsample 8 gives L=40") {
  ToyConfig cfg;
  cfg.target_min = cfg.target_max = 5;
  cfg.upsample_min = cfg.upsample_max = 8;
  for (const auto& ex : generate_dataset(cfg, 10, 3)) CHECK(ex.source.rows() == 40);
}

TEST_CASE("degenerate task: source frames are exact codebook rows") {
  ToyConfig cfg;
  cfg.noise = 0.0f;
  cfg.upsample_min = cfg.upsample_max = 1;
  cfg.identity_permutation = true;
  const auto tables = make_tables(cfg);
  for (const auto& ex : generate_dataset(cfg, 20, 4)) {
    REQUIRE(ex.source.rows() == ex.target.size() - 2);
    for (std::size_t i = 0; i < ex.source.rows(); ++i) {
      const auto row = ex.source.row(i);
      const auto code = tables.codebook.row(static_cast<std::size_t>(ex.target[i + 1]));
      CHECK(std::equal(row.begin(), row.end(), code.begin(), code.end()));
    }
  }
}

TEST_CASE("config validation") {
  ToyConfig cfg;
  cfg.vocab = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.upsample_min = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  ModelConfig m;
  m.batch = 0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("dataset files round-trip and report bad lines") {
  const auto data = generate_dataset(ToyConfig{}, 5, 11);
  std::istringstream in(serialize(data));
  const auto back = read_dataset(in);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].source == data[i].source);
    CHECK(back[i].target == data[i].target);
  }
  std::istringstream bad(serialize(data) + "{\"source\": [[1.0]], \"target\": [1]}\n");
  try {
    read_dataset(bad);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
  std::istringstream garbage("not json\n");
  CHECK_THROWS_AS(read_dataset(garbage), FormatError);
}

TEST_CASE("parameter count matches a hand count at D=8") {
  // frontend 16·8+8 = 136
  // M-Adapter layer: W_q,W_k,W_v 3·64 = 192; Pool_Q/K/V/X 4·(8·8·3+8) = 800;
  //   two LNs 2·16 = 32; FFN 8·32+32+32·8+8 = 552; total 1576, three layers 4728
  // decoder: embedding 32·8 = 256; block 8·64 + 3·16 + 552 = 1112
  // output 8·32+32 = 288
  CHECK(Seq2SeqModel(tiny_model()).parameter_count() == 136 + 4728 + 256 + 1112 + 288);
  // CNN adapter: three stages of 8·8·3+8 = 200.
  CHECK(Seq2SeqModel(tiny_model(AdapterKind::Cnn)).parameter_count() ==
        136 + 600 + 256 + 1112 + 288);
  // Transformer adapter: three blocks of 192+32+552 = 776.
  CHECK(Seq2SeqModel(tiny_model(AdapterKind::Transformer)).parameter_count() ==
        136 + 2328 + 256 + 1112 + 288);
}

TEST_CASE("encoder output lengths") {
  const Seq2SeqModel madapter(tiny_model());
  const Seq2SeqModel cnn(tiny_model(AdapterKind::Cnn));
  const Seq2SeqModel transformer(tiny_model(AdapterKind::Transformer));
  for (std::size_t len = 1; len <= 250; ++len) {
    CHECK(madapter.encoder_output_length(len) == cnn.encoder_output_length(len));
    CHECK(transformer.encoder_output_length(len) == len);
  }
  // Per example the compression follows the composed formula and is at
  // most 8:1.
  for (const auto& ex : generate_dataset(ToyConfig{}, 50, 12)) {
    const std::size_t len = ex.source.rows();
    Tape tape(false);
    const std::size_t got = madapter.encode(tape, ex.source).rows();
    CHECK(got == out_len(out_len(out_len(len, {3, 2, 1}), {3, 2, 1}), {3, 2, 1}));
    CHECK(static_cast<double>(got) / static_cast<double>(len) >= 1.0 / 8.0);
  }
}

TEST_CASE("lr=0 leaves the loss constant") {
  auto cfg = tiny_model();
  cfg.optim.lr = 0.0f;
  Seq2SeqModel model(cfg);
  const auto data = generate_dataset(ToyConfig{}, 16, 13);
  const auto report = train(model, data);
  REQUIRE(report.curve.size() == 3);
  for (const auto& p : report.curve) CHECK(p.probe_loss == report.curve.front().probe_loss);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto data = generate_dataset(ToyConfig{}, 64, 14);
  Seq2SeqModel a(tiny_model()), b(tiny_model());
  const auto ra = train(a, data);
  const auto rb = train(b, data);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (std::size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].step == i * 100);
    CHECK(ra.curve[i].probe_loss == rb.curve[i].probe_loss);
    CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
    CHECK(std::isfinite(ra.curve[i].probe_loss));
  }
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    const bool same = a.params()[i].value == b.params()[i].value;
    CHECK(same);
  }
  CHECK(ra.curve.back().probe_loss < ra.curve.front().probe_loss);
}

TEST_CASE("divergence aborts naming the step") {
  Seq2SeqModel model(tiny_model());
  model.params()[0].value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(model, generate_dataset(ToyConfig{}, 8, 15));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 0);
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
  CHECK_THROWS_AS(train(model, {}), std::invalid_argument);
}

TEST_CASE("prediction scoring") {
  const std::vector<int> ref{5, 6, 7, kEosToken};
  SUBCASE("empty prediction") {
    const auto s = score_prediction({}, ref);
    CHECK(s.matches == 0);
    CHECK_FALSE(s.exact);
  }
  SUBCASE("exact") {
    const auto s = score_prediction(ref, ref);
    CHECK(s.matches == 4);
    CHECK(s.exact);
  }
  SUBCASE("aligned, not exact") {
    const std::vector<int> pred{5, 9, 7, kEosToken, 3};
    const auto s = score_prediction(pred, ref);
    CHECK(s.matches == 3);
    CHECK_FALSE(s.exact);
  }
}

TEST_CASE("untrained model is at chance level") {
  ModelConfig cfg;  // defaults: V=32
  Seq2SeqModel model(cfg);
  const auto data = generate_dataset(ToyConfig{}, 512, 16);
  const auto m = evaluate(model, data);
  CHECK(m.examples == 512);
  CHECK(std::abs(m.token_accuracy - 1.0 / 32.0) <= 0.05);
  CHECK(evaluate(model, data).token_accuracy == m.token_accuracy);
}

TEST_CASE("greedy decoding respects the length cap") {
  Seq2SeqModel model(tiny_model());
  const auto ex = generate_dataset(ToyConfig{}, 1, 17).front();
  CHECK(model.greedy_decode(ex.source, 3).size() <= 3);
}

TEST_CASE("degenerate task is solved by a length-preserving model") {
  // sigma=0, r=1, identity substitution: each output token is a lookup of
  // one source frame, so the frontend plus an identity-pooled adapter layer
  // is enough.
  ToyConfig task;
  task.noise = 0.0f;
  task.upsample_min = task.upsample_max = 1;
  task.identity_permutation = true;
  ModelConfig cfg;
  cfg.adapter_cfg.dim = 32;
  cfg.adapter_cfg.layers = 1;
  cfg.adapter_cfg.pool = PoolConfig::identity();
  cfg.steps = 1500;
  cfg.batch = 16;
  cfg.optim.warmup = 50;
  Seq2SeqModel model(cfg);
  train(model, generate_dataset(task, 4096, 1));
  const auto m = evaluate(model, generate_dataset(task, 256, 2));
  CHECK(m.token_accuracy >= 0.95);
}
