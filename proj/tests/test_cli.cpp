#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::current_path() / "cli_work";

struct Result {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Result run(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path log = kWork / "stdout.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" MADAPTER_CLI_PATH "' " + args +
                          " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const char* kSmall = "--dim 8 --heads 2 --batch 2 --eval-size 6";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("train --out x --no-such-flag").code == 2);
  CHECK(run("train --out x --dim 6 --heads 4").code == 2);
  CHECK(run("eval --checkpoint does/not/exist").code == 2);
  CHECK(run("train --out x --data does/not/exist.jsonl").code == 2);
  CHECK(run("sweep stride --strides 2,a").code == 2);
  CHECK(run("sweep resource --fractions 0").code == 2);
  CHECK(run("analyze sparsity --checkpoint x").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("gradcheck exit codes") {
  const auto ok = run("gradcheck");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("gradcheck passed") != std::string::npos);
  CHECK(ok.out.find("pool_x") != std::string::npos);
  CHECK(run("gradcheck --seed 5").code == 0);
  const auto bad = run("gradcheck --inject-sign-flip conv1d");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("gradient check failed: ") != std::string::npos);
}

TEST_CASE("gen, train, eval, analyze, sweep") {
  fs::remove_all(kWork);
  REQUIRE(run("gen --n 30 --seed 4 --out data").code == 0);
  REQUIRE(fs::exists(kWork / "data" / "dataset.jsonl"));
  CHECK(line_count(slurp(kWork / "data" / "dataset.jsonl")) == 30);

  SUBCASE("train writes a hashed manifest, eval reproduces its metrics") {
    REQUIRE(run(std::string("train --data data/dataset.jsonl --steps 20 --out run --quiet ") +
                kSmall)
                .code == 0);
    for (const char* f : {"checkpoint.mada", "loss_curve.jsonl", "metrics.json", "manifest.json"}) {
      CHECK(fs::exists(kWork / "run" / f));
    }
    const auto manifest = nlohmann::json::parse(slurp(kWork / "run" / "manifest.json"));
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("seeds").at("model") == 42);
    CHECK(manifest.at("inputs").at("train").at("path") == "data/dataset.jsonl");
    CHECK(manifest.at("outputs").at("checkpoint.mada").get<std::string>().size() == 64);
    CHECK(line_count(slurp(kWork / "run" / "loss_curve.jsonl")) == 2);

    REQUIRE(run("eval --checkpoint run/checkpoint.mada --eval-size 6 --out ev").code == 0);
    const auto trained = nlohmann::json::parse(slurp(kWork / "run" / "metrics.json"));
    const auto evaluated = nlohmann::json::parse(slurp(kWork / "ev" / "metrics.json"));
    CHECK(trained.at("token_accuracy") == evaluated.at("token_accuracy"));
    CHECK(trained.at("exact_match") == evaluated.at("exact_match"));
  }

  SUBCASE("analyze hoyer on an untrained checkpoint is in [0,1]") {
    REQUIRE(run(std::string("train --lr 0 --steps 1 --train-size 4 --out raw --quiet ") + kSmall)
                .code == 0);
    const auto r = run("analyze hoyer --checkpoint raw/checkpoint.mada --eval-size 6 --out h");
    REQUIRE(r.code == 0);
    const auto row = nlohmann::json::parse(slurp(kWork / "h" / "report.jsonl"));
    CHECK(row.at("metric") == "hoyer");
    CHECK(row.at("value").get<double>() >= 0.0);
    CHECK(row.at("value").get<double>() <= 1.0);
    CHECK(run("analyze local-only --checkpoint raw/checkpoint.mada --eval-size 6").code == 0);
    CHECK(run("analyze perturb --checkpoint raw/checkpoint.mada --eval-size 6 --perturb-level "
              "frontend --per-layer")
              .code == 2);
  }

  SUBCASE("sweep stride emits one row per stride") {
    REQUIRE(run(std::string("sweep stride --strides 2,4,6,8 --steps 4 --train-size 8 --out sw ") +
                kSmall)
                .code == 0);
    const std::string rows = slurp(kWork / "sw" / "report.jsonl");
    CHECK(line_count(rows) == 4);
    CHECK(rows.find("\"config\":\"stride=6\"") != std::string::npos);
  }

  SUBCASE("corrupted checkpoint is a usage error") {
    REQUIRE(run(std::string("train --lr 0 --steps 1 --train-size 4 --out raw --quiet ") + kSmall)
                .code == 0);
    std::string bytes = slurp(kWork / "raw" / "checkpoint.mada");
    bytes[0] = 'Z';
    std::ofstream(kWork / "bad.mada", std::ios::binary) << bytes;
    const auto r = run("eval --checkpoint bad.mada --eval-size 6");
    CHECK(r.code == 2);
    CHECK(r.out.find("magic") != std::string::npos);
  }
}
