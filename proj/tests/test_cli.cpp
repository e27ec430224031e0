// End-to-end checks of the command-line surface. The binary path arrives as
// the first program argument (see tests/CMakeLists.txt).

#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_scratch;

int run(const std::string& args) {
  return std::system(("\"" + g_cli + "\" " + args + " > /dev/null 2>&1").c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

nlohmann::json parse_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("synth writes three CSVs plus a manifest, byte-identical on rerun") {
  const fs::path a = g_scratch / "synth_a";
  const fs::path b = g_scratch / "synth_b";
  const std::string flags =
      "synth --n-labeled 30 --m-unlabeled 10 --n-test 15 --dim 4 --labels 3 --seed 1";
  REQUIRE(run(flags + " --out-dir \"" + a.string() + "\"") == 0);
  REQUIRE(run(flags + " --out-dir \"" + b.string() + "\"") == 0);
  for (const char* name : {"labeled.csv", "unlabeled.csv", "test.csv", "manifest.json"}) {
    const std::string sa = slurp(a / name);
    CHECK_FALSE(sa.empty());
    CHECK(sa == slurp(b / name));
  }
  const auto manifest = parse_json(a / "manifest.json");
  CHECK(manifest.at("generator").at("seed").get<int>() == 1);

  // c >= 2 is enforced at the flag level.
  CHECK(run("synth --labels 1 --out-dir \"" + (g_scratch / "synth_bad").string() + "\"") != 0);
}

TEST_CASE("supervised-only train zeroes the unlabeled series in the report") {
  const fs::path data = g_scratch / "sup_data";
  REQUIRE(run("synth --n-labeled 40 --m-unlabeled 0 --n-test 20 --dim 4 --labels 3 --seed 2"
              " --out-dir \"" + data.string() + "\"") == 0);
  const fs::path out = g_scratch / "sup_run";
  REQUIRE(run("train --labeled \"" + (data / "labeled.csv").string() + "\" --test \"" +
              (data / "test.csv").string() +
              "\" --lambda 0 --epochs 3 --batch 16 --max-lr 0.02 --seed 1 --out \"" +
              out.string() + "\"") == 0);
  const auto report = parse_json(out / "report.json");
  CHECK(report.at("config").at("ema_decay").get<double>() == 0.98);
  for (const auto& epoch : report.at("epochs")) {
    CHECK(epoch.at("consistency").get<double>() == 0.0);
    CHECK(epoch.at("prr_labeled").get<double>() == 0.0);
    CHECK(epoch.at("prr_unlabeled").get<double>() == 0.0);
  }
}

TEST_CASE("eval reproduces near-ideal metrics on a fit checkpoint, exact key set") {
  const fs::path data = g_scratch / "eval_data";
  REQUIRE(run("synth --n-labeled 120 --m-unlabeled 0 --n-test 40 --dim 6 --labels 4 --seed 3"
              " --out-dir \"" + data.string() + "\"") == 0);
  const fs::path out = g_scratch / "eval_run";
  // Noise-free supervised fit on 100% labels drives the loss to ~0.
  REQUIRE(run("train --labeled \"" + (data / "labeled.csv").string() +
              "\" --lambda 0 --weak-sigma 0 --strong-sigma 0 --strong-dropout 0" +
              " --epochs 150 --batch 32 --max-lr 0.05 --seed 1 --out \"" + out.string() +
              "\"") == 0);
  const fs::path metrics_path = g_scratch / "eval_metrics.json";
  REQUIRE(run("eval --checkpoint \"" + (out / "checkpoint.txt").string() + "\" --test \"" +
              (data / "labeled.csv").string() + "\" --out \"" + metrics_path.string() +
              "\"") == 0);
  const auto metrics = parse_json(metrics_path);
  const std::vector<std::string> expected_keys{"chebyshev",    "clark",  "canberra",
                                               "kl",           "intersection", "cosine",
                                               "sample_count"};
  CHECK(metrics.size() == expected_keys.size());
  for (const auto& key : expected_keys) CHECK(metrics.contains(key));
  CHECK(metrics.at("kl").get<double>() < 1e-3);
  CHECK(metrics.at("sample_count").get<int>() == 120);

  // Mismatched label count is rejected.
  const fs::path other = g_scratch / "eval_other";
  REQUIRE(run("synth --n-labeled 10 --m-unlabeled 0 --n-test 5 --dim 6 --labels 5 --seed 4"
              " --out-dir \"" + other.string() + "\"") == 0);
  CHECK(run("eval --checkpoint \"" + (out / "checkpoint.txt").string() + "\" --test \"" +
            (other / "labeled.csv").string() + "\" --out \"" +
            (g_scratch / "nope.json").string() + "\"") != 0);
}

TEST_CASE("ablate emits three tagged rows and is byte-deterministic") {
  const fs::path data = g_scratch / "ablate_data";
  REQUIRE(run("synth --n-labeled 100 --m-unlabeled 0 --n-test 50 --dim 5 --labels 4 --seed 5"
              " --out-dir \"" + data.string() + "\"") == 0);
  const std::string flags = "ablate --labeled \"" + (data / "labeled.csv").string() +
                            "\" --test \"" + (data / "test.csv").string() +
                            "\" --label-fraction 0.1 --lambda 0.05 --epochs 3 --batch 8" +
                            " --max-lr 0.02 --seed 1";
  const fs::path a = g_scratch / "ablate_a";
  const fs::path b = g_scratch / "ablate_b";
  REQUIRE(run(flags + " --out \"" + a.string() + "\"") == 0);
  REQUIRE(run(flags + " --out \"" + b.string() + "\"") == 0);
  CHECK(slurp(a / "ablation.json") == slurp(b / "ablation.json"));

  const auto report = parse_json(a / "ablation.json");
  CHECK(report.at("split").at("labeled").get<int>() == 10);
  CHECK(report.at("split").at("unlabeled").get<int>() == 90);
  const auto& rows = report.at("rows");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("stage").get<std::string>() == "pretrain");
  CHECK(rows[1].at("stage").get<std::string>() == "+prr");
  CHECK(rows[2].at("stage").get<std::string>() == "+consistency");
  for (const auto& row : rows) CHECK(row.contains("kl"));
}

TEST_CASE("gradcheck exit codes reflect the verdict") {
  CHECK(run("gradcheck --trials 5 --seed 1") == 0);
  CHECK(run("gradcheck --trials 5 --seed 1 --corrupt") != 0);
}

int cli_main(int argc, char** argv) {
  if (argc > 1 && argv[1][0] != '-') {
    g_cli = argv[1];
    --argc;
    ++argv;
  } else {
    g_cli = "tools/rankmatch";
  }
  g_scratch = fs::temp_directory_path() / "rankmatch_cli_tests";
  std::error_code ec;
  fs::remove_all(g_scratch, ec);
  fs::create_directories(g_scratch);

  doctest::Context context(argc, argv);
  const int rc = context.run();
  fs::remove_all(g_scratch, ec);
  return rc;
}

int main(int argc, char** argv) { return cli_main(argc, argv); }
