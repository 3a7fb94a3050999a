#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isax/cli.hpp"
#include "isax/error.hpp"
#include "isax/rng.hpp"
#include "isax/toml_lite.hpp"

using namespace isax;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"isax"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "isax_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("toml_lite: kinds, sections and comments") {
  TomlTable t = parse_toml(
      "# header comment\n"
      "name = \"fixture\"  # trailing comment\n"
      "count = 40\n"
      "rate = 2.5e-3\n"
      "flag = true\n"
      "widths = [64, 64, 64]\n"
      "[section]\n"
      "inner = 7\n");
  CHECK(t.get_string("name") == "fixture");
  CHECK(t.get_int("count") == 40);
  CHECK(t.get_double("rate") == doctest::Approx(2.5e-3));
  CHECK(t.get_bool("flag"));
  CHECK(t.get_int_array("widths") == std::vector<long>{64, 64, 64});
  CHECK(t.get_int("section.inner") == 7);
  CHECK_NOTHROW(t.require_all_consumed("test"));
}

TEST_CASE("toml_lite: integers also read as doubles, not vice versa") {
  TomlTable t = parse_toml("a = 3\nb = 3.5\n");
  CHECK(t.get_double("a") == 3.0);
  CHECK_THROWS_AS(t.get_int("b"), ConfigError);
  t.get_double("b");
  CHECK_NOTHROW(t.require_all_consumed("test"));
}

TEST_CASE("toml_lite: unknown keys are rejected with their line") {
  TomlTable t = parse_toml("known = 1\ntypo_key = 2\n");
  CHECK(t.get_int("known") == 1);
  try {
    t.require_all_consumed("config");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("typo_key") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("toml_lite: malformed input carries line diagnostics") {
  CHECK_THROWS_AS(parse_toml("a == 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = \"unterminated\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("just garbage\n"), ConfigError);
  try {
    parse_toml("ok = 1\nbad = ???\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("toml_lite: missing required key names the key") {
  TomlTable t = parse_toml("present = 1\n");
  try {
    t.get_int("absent");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("absent") != std::string::npos);
  }
}

TEST_CASE("cli: missing config file exits with code 2") {
  CHECK(run_cli({"train", "--config", "missing.toml"}) == 2);
  CHECK(run_cli({"synth", "--config", "also_missing.toml"}) == 2);
}

TEST_CASE("cli: config with unknown keys exits with code 2") {
  fs::path dir = temp_dir();
  write_file(dir / "bad.toml",
             "[synth]\nn = 2\nd = 2\nsegments = 4\nsamples = 50\nmisspelled = 1\n");
  CHECK(run_cli({"synth", "--config", (dir / "bad.toml").string()}) == 2);
}

TEST_CASE("cli: synth -> train -> eval round trip") {
  fs::path dir = temp_dir();
  fs::remove_all(dir);
  fs::create_directories(dir);

  write_file(dir / "synth.toml",
             "[synth]\n"
             "n = 2\n"
             "d = 2\n"
             "segments = 4\n"
             "samples = 160\n"
             "mixing_depth = 1\n"
             "seed = 3\n"
             "outdir = \"" + (dir / "data").string() + "\"\n");
  REQUIRE(run_cli({"synth", "--config", (dir / "synth.toml").string()}) == 0);
  REQUIRE(fs::exists(dir / "data" / "dataset.jsonl"));
  REQUIRE(fs::exists(dir / "data" / "metadata.json"));

  write_file(dir / "train.toml",
             "[train]\n"
             "data = \"" + (dir / "data" / "dataset.jsonl").string() + "\"\n" +
             "outdir = \"" + (dir / "run").string() + "\"\n" +
             "objective = \"nce_hsic\"\n"
             "n = 2\n"
             "d = 2\n"
             "negatives = 2\n"
             "epochs = 1\n"
             "batch_size = 40\n"
             "psi_hidden = [8, 8]\n"
             "encoder_hidden = [8]\n"
             "seed = 4\n");
  REQUIRE(run_cli({"train", "--config", (dir / "train.toml").string()}) == 0);
  REQUIRE(fs::exists(dir / "run" / "checkpoint_final.json"));
  REQUIRE(fs::exists(dir / "run" / "runlog.jsonl"));

  REQUIRE(run_cli({"eval", "--checkpoint", (dir / "run" / "checkpoint_final.json").string(),
                   "--data", (dir / "data" / "dataset.jsonl").string(),
                   "--out", (dir / "metrics.json").string()}) == 0);
  std::ifstream in(dir / "metrics.json");
  nlohmann::json metrics = nlohmann::json::parse(in);
  CHECK(metrics.contains("matched_score"));
  CHECK(metrics.contains("pearson_independence"));
  CHECK(metrics.contains("probe_accuracy"));
  CHECK(metrics.contains("per_pair_hsic"));
  CHECK(metrics.at("version").get<std::string>().rfind("isax", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli: hsic-test reads CSVs and prints JSON") {
  fs::path dir = temp_dir();
  std::ofstream x(dir / "x.csv"), y(dir / "y.csv");
  Rng rng(5);
  for (int i = 0; i < 64; ++i) {
    x << rng.normal() << "," << rng.normal() << "\n";
    y << rng.normal() << "," << rng.normal() << "\n";
  }
  x.close();
  y.close();
  CHECK(run_cli({"hsic-test", "--x", (dir / "x.csv").string(), "--y",
                 (dir / "y.csv").string(), "--permutations", "29"}) == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli: gradcheck exits zero on the shipped fixture") {
  CHECK(run_cli({"gradcheck"}) == 0);
}

TEST_CASE("cli: version flag succeeds") {
  CHECK(run_cli({"--version"}) == 0);
}
