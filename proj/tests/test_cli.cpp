#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "t3vae/cli/checkpoint.hpp"
#include "t3vae/cli/commands.hpp"
#include "t3vae/cli/run_config.hpp"
#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"

using namespace t3vae;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "t3vae_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "t3vae");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

void make_small_split(const std::string& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng rng(seed);
  write_csv(dir + "/train.csv", gen_univariate(1500, rng));
  write_csv(dir + "/val.csv", gen_univariate(500, rng));
}

const char* kSmallConfig = R"({
  "model": "t3vae", "nu": 18, "hidden_sizes": [16, 16], "max_epochs": 3, "seed": 11,
  "dataset": "univariate", "batch_size": 64
})";

}  // namespace

TEST_CASE("gen-data is deterministic") {
  REQUIRE(run({"gen-data", "--dataset", "univariate", "--count", "1000", "--seed", "3", "--out", path("a.csv")}) == 0);
  REQUIRE(run({"gen-data", "--dataset", "univariate", "--count", "1000", "--seed", "3", "--out", path("b.csv")}) == 0);
  REQUIRE(run({"gen-data", "--dataset", "univariate", "--count", "1000", "--seed", "4", "--out", path("c.csv")}) == 0);
  CHECK(std::hash<std::string>{}(slurp(path("a.csv"))) == std::hash<std::string>{}(slurp(path("b.csv"))));
  CHECK(slurp(path("a.csv")) != slurp(path("c.csv")));
  CHECK(read_csv(path("a.csv")).rows() == 1000);

  REQUIRE(run({"gen-data", "--dataset", "bivariate", "--count", "10", "--out", path("bi.csv")}) == 0);
  CHECK(read_csv(path("bi.csv")).cols() == 2);
  CHECK(run({"gen-data", "--dataset", "trivariate", "--count", "10", "--out", path("x.csv")}) == cli::kExitConfig);
  CHECK(run({"gen-data", "--count", "10", "--out", "/proc/no/such/file.csv"}) == cli::kExitIo);
}

TEST_CASE("gen-data presets write three splits") {
  REQUIRE(run({"gen-data", "--dataset", "univariate", "--preset", "paper", "--seed", "1", "--out", path("paper")}) == 0);
  CHECK(read_csv(path("paper/train.csv")).rows() == 200000);
  CHECK(read_csv(path("paper/val.csv")).rows() == 200000);
  CHECK(read_csv(path("paper/test.csv")).rows() == 500000);
  CHECK(run({"gen-data", "--preset", "giant", "--out", path("giant")}) == cli::kExitConfig);
}

TEST_CASE("run config validation") {
  const auto parse = [](const std::string& text) { return cli::RunConfig::from_json(json::parse(text)); };
  const auto cfg = parse(kSmallConfig);
  CHECK(cfg.lr == 1e-3);
  CHECK(cfg.patience == 15);
  CHECK(cfg.hidden_sizes == std::vector<int>{16, 16});
  CHECK(parse(cfg.canonical()).canonical() == cfg.canonical());
  CHECK_THROWS_AS(parse(R"({"model": "t3vae", "nu": 5, "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"model": "t3vae"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"model": "t3vae", "nu": 2})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"model": "gaussian_vae", "beta": 0.5})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"model": "gaussian_vae", "sigma_z": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"model": "gaussian_vae", "activation": "tanh"})"), ConfigError);
  CHECK(parse(R"({"model": "t3hvae", "nu": 5, "m1": 2, "m2": 1})").model_spec(1).m2 == 1);
  CHECK(cli::parse_seed("18446744073709551615") == 18446744073709551615ULL);
  CHECK_THROWS_AS(cli::parse_seed("-1"), ConfigError);
}

TEST_CASE("train, reload and generate") {
  make_small_split(path("small"), 5);
  write_text(path("small.json"), kSmallConfig);
  std::string text;
  REQUIRE(run({"train", "--config", path("small.json"), "--data-dir", path("small"), "--out", path("run"), "--quiet"},
              &text) == 0);
  CHECK(text.find("best epoch") != std::string::npos);

  const std::string log = slurp(path("run/train_log.csv"));
  CHECK(log.rfind("epoch,train_loss,val_loss,wall_seconds\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);

  const auto raw = json::parse(slurp(path("run/checkpoint.json")));
  CHECK(raw["format"] == "t3vae-checkpoint");
  CHECK(raw["version"] == cli::kCheckpointVersion);
  CHECK(raw["config"].dump() == cli::RunConfig::from_json(json::parse(kSmallConfig)).canonical());

  const cli::Checkpoint ck = cli::load_checkpoint(path("run/checkpoint.json"));
  CHECK(ck.epochs_run == 3);
  CHECK(ck.has_optimizer);
  const Batch val = read_csv(path("small/val.csv"));
  const double reloaded = evaluate_loss(*ck.model, val, ck.config.mc_samples, ck.val_seed);
  CHECK(std::fabs(reloaded - ck.best_val) <= 1e-12 * std::max(1.0, std::fabs(ck.best_val)));

  REQUIRE(run({"generate", "--checkpoint", path("run/checkpoint.json"), "--count", "300", "--seed", "2", "--out",
               path("gen1.csv")}) == 0);
  REQUIRE(run({"generate", "--checkpoint", path("run/checkpoint.json"), "--count", "300", "--seed", "2", "--out",
               path("gen2.csv")}) == 0);
  CHECK(read_csv(path("gen1.csv")).rows() == 300);
  CHECK(slurp(path("gen1.csv")) == slurp(path("gen2.csv")));
  const auto meta = json::parse(slurp(path("gen1.csv.meta.json")));
  CHECK(meta["latent_df"] == 19.0);
  CHECK(meta["latent_scale"].get<double>() == derive_constants(ck.spec.flat_config()).tau2);

  // version mismatch
  auto bumped = raw;
  bumped["version"] = cli::kCheckpointVersion + 1;
  write_text(path("bumped.json"), bumped.dump());
  CHECK(run({"generate", "--checkpoint", path("bumped.json"), "--count", "3", "--out", path("g.csv")}) ==
        cli::kExitConfig);
  write_text(path("broken.json"), "{\"format\": ");
  CHECK(run({"generate", "--checkpoint", path("broken.json"), "--count", "3", "--out", path("g.csv")}) ==
        cli::kExitIo);
}

TEST_CASE("train rejects bad configs and diverging runs") {
  make_small_split(path("small2"), 6);
  write_text(path("unknown.json"), R"({"model": "gaussian_vae", "epochs": 3})");
  CHECK(run({"train", "--config", path("unknown.json"), "--data-dir", path("small2"), "--out", path("r2")}) ==
        cli::kExitConfig);
  write_text(path("bivar.json"), R"({"model": "gaussian_vae", "dataset": "bivariate"})");
  CHECK(run({"train", "--config", path("bivar.json"), "--data-dir", path("small2"), "--out", path("r3")}) ==
        cli::kExitConfig);
  CHECK(run({"train", "--config", path("missing.json"), "--data-dir", path("small2"), "--out", path("r4")}) ==
        cli::kExitIo);

  fs::create_directories(path("huge"));
  Batch t = gen_univariate(200, 1);
  t(5, 0) = 1e200;
  write_csv(path("huge/train.csv"), t);
  write_csv(path("huge/val.csv"), gen_univariate(50, 2));
  write_text(path("ok.json"), R"({"model": "t3vae", "nu": 5, "hidden_sizes": [8], "max_epochs": 2})");
  CHECK(run({"train", "--config", path("ok.json"), "--data-dir", path("huge"), "--out", path("r5"), "--quiet"}) ==
        cli::kExitNumeric);
}

TEST_CASE("seed override from the environment") {
  write_text(path("seeded.json"), kSmallConfig);
  auto cfg = cli::load_run_config(path("seeded.json"));
  ::setenv("T3_SEED", "99", 1);
  cli::apply_env_overrides(cfg);
  ::unsetenv("T3_SEED");
  CHECK(cfg.seed == 99);
}

TEST_CASE("eval and hist") {
  Rng rng(7);
  Batch ref = gen_univariate(4000, rng);
  write_csv(path("ref.csv"), ref);
  std::string text;
  REQUIRE(run({"eval", "--generated", path("ref.csv"), "--reference", path("ref.csv"), "--region", "all",
               "--bootstrap", "200"},
              &text) == 0);
  std::istringstream lines(text);
  std::string line;
  std::vector<json> reports;
  while (std::getline(lines, line)) reports.push_back(json::parse(line));
  REQUIRE(reports.size() == 3);
  CHECK(reports[0]["region"] == "full");
  CHECK(std::fabs(reports[0]["statistic"].get<double>()) < 1e-12);
  CHECK(reports[2]["region"] == "right");
  CHECK(reports[2]["rows_generated"].get<long>() == (ref.array() > 6.0).count());

  Batch narrow(1000, 1);
  for (Eigen::Index i = 0; i < narrow.rows(); ++i) narrow(i, 0) = rng.normal();
  write_csv(path("narrow.csv"), narrow);
  REQUIRE(run({"eval", "--generated", path("narrow.csv"), "--reference", path("ref.csv"), "--region", "tails", "--out",
               path("tails.jsonl")}) == 0);
  const auto tails = json::parse(slurp(path("tails.jsonl")));
  CHECK(tails["empty"] == true);
  CHECK(run({"eval", "--generated", path("narrow.csv"), "--reference", path("bi.csv"), "--region", "full"}) ==
        cli::kExitConfig);
  CHECK(run({"eval", "--generated", path("narrow.csv"), "--reference", path("ref.csv"), "--region", "middle"}) ==
        cli::kExitConfig);

  REQUIRE(run({"hist", "--in", path("ref.csv"), "--bins", "60", "--range", "-30", "30", "--out", path("h.csv")}) == 0);
  const std::string h = slurp(path("h.csv"));
  CHECK(std::count(h.begin(), h.end(), '\n') == 61);
  write_text(path("bad.csv"), "x0\n1\noops\n");
  CHECK(run({"hist", "--in", path("bad.csv"), "--out", path("h2.csv")}) == cli::kExitIo);
}

TEST_CASE("tool binary exit codes") {
  const std::string tool = T3VAE_TOOL;
  CHECK(std::system((tool + " --help > /dev/null").c_str()) == 0);
  const int code = std::system((tool + " frobnicate > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(code) == cli::kExitConfig);
  const int hist = std::system((tool + " hist --in /nonexistent.csv --out /dev/null > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(hist) == cli::kExitIo);
}
