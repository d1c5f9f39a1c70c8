#include "t3vae/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "t3vae/cli/checkpoint.hpp"
#include "t3vae/cli/run_config.hpp"
#include "t3vae/data.hpp"
#include "t3vae/errors.hpp"
#include "t3vae/eval.hpp"

namespace t3vae::cli {

namespace fs = std::filesystem;

namespace {

struct GenDataArgs {
  std::string dataset = "univariate";
  long count = 0;
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  bool no_noise = false;
};

struct TrainArgs {
  std::string config;
  std::string data_dir;
  std::string out;
  bool quiet = false;
};

struct GenerateArgs {
  std::string checkpoint;
  long count = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string decoder_output = "sample";
};

struct EvalArgs {
  std::string generated;
  std::string reference;
  std::string region = "all";
  std::string out;
  int bootstrap = 1000;
  long max_samples = 100000;
  std::uint64_t seed = 0;
  double threshold = 0.0;
};

struct HistArgs {
  std::string in;
  int bins = 100;
  std::vector<double> range{-30.0, 30.0};
  std::string out;
};

Batch generate_dataset(const std::string& name, Eigen::Index count, Rng& rng, bool noise) {
  if (name == "univariate") return gen_univariate(count, rng);
  if (name == "bivariate") return gen_bivariate(count, rng, {noise});
  throw ConfigError("unknown dataset '" + name + "' (expected univariate or bivariate)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

void cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  Rng rng(a.seed);
  if (!a.preset.empty()) {
    const SplitSizes s = preset_sizes(a.preset);
    const Batch all = generate_dataset(a.dataset, s.total(), rng, !a.no_noise);
    Rng split_rng(a.seed, 1);
    const Split parts = split(all, {double(s.train), double(s.val), double(s.test)}, split_rng);
    ensure_dir(a.out);
    write_csv((fs::path(a.out) / "train.csv").string(), parts.train);
    write_csv((fs::path(a.out) / "val.csv").string(), parts.val);
    write_csv((fs::path(a.out) / "test.csv").string(), parts.test);
    out << "wrote " << parts.train.rows() << '/' << parts.val.rows() << '/' << parts.test.rows()
        << " rows to " << a.out << '\n';
    return;
  }
  if (a.count < 1) throw ConfigError("--count must be positive (or give --preset)");
  write_csv(a.out, generate_dataset(a.dataset, a.count, rng, !a.no_noise));
  out << "wrote " << a.count << " rows to " << a.out << '\n';
}

Batch load_split(const std::string& dir, const char* name) {
  const fs::path p = fs::path(dir) / name;
  if (!fs::exists(p)) throw IoError("missing data file '" + p.string() + "'");
  return read_csv(p.string());
}

void cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config);
  apply_env_overrides(cfg);
  const Batch train_data = load_split(a.data_dir, "train.csv");
  const Batch val_data = load_split(a.data_dir, "val.csv");
  if (train_data.cols() != val_data.cols()) throw IoError("train.csv and val.csv differ in width");
  if (cfg.dataset_dim() && *cfg.dataset_dim() != train_data.cols())
    throw ConfigError("data width " + std::to_string(train_data.cols()) + " does not match dataset '" +
                      cfg.dataset + "'");

  Rng init(cfg.seed);
  auto model = make_model(cfg.model_spec(static_cast<int>(train_data.cols())), init);
  ensure_dir(a.out);
  const fs::path log_path = fs::path(a.out) / "train_log.csv";
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot open '" + log_path.string() + "' for writing");
  log << "epoch,train_loss,val_loss,wall_seconds\n";

  const TrainResult r = train(*model, train_data, val_data, cfg.train_options(), [&](const EpochLog& e) {
    log << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ','
        << format_double(e.wall_seconds) << '\n';
    log.flush();
    if (!a.quiet)
      out << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << '\n';
  });
  const fs::path ck = fs::path(a.out) / "checkpoint.json";
  save_checkpoint(ck.string(), cfg, *model, r);
  out << "best epoch " << r.best_epoch << " val " << format_double(r.best_val)
      << (r.stopped_early ? " (early stop)" : "") << "; checkpoint " << ck.string() << '\n';
}

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.count < 1) throw ConfigError("--count must be positive");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  Rng rng(a.seed);
  const DecoderOutput output = parse_decoder_output(a.decoder_output);
  const Batch x = ck.model->generate(a.count, rng, output);
  write_csv(a.out, x);
  nlohmann::ordered_json meta;
  meta["model"] = family_name(ck.spec.family);
  meta["count"] = a.count;
  meta["seed"] = a.seed;
  meta["decoder_output"] = decoder_output_name(output);
  for (const auto& [k, v] : ck.model->generation_metadata()) {
    if (std::isfinite(v))
      meta[k] = v;
    else
      meta[k] = "inf";
  }
  const std::string meta_path = a.out + ".meta.json";
  std::ofstream m(meta_path);
  if (!m) throw IoError("cannot open '" + meta_path + "' for writing");
  m << meta.dump(2) << '\n';
  out << "wrote " << a.count << " samples to " << a.out << '\n';
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Batch gen = read_csv(a.generated);
  const Batch ref = read_csv(a.reference);
  if (gen.cols() != ref.cols()) throw ConfigError("generated and reference files differ in width");
  std::vector<Region> regions;
  if (a.region == "all")
    regions = {Region::full, Region::left, Region::right};
  else
    regions = {parse_region(a.region)};

  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw IoError("cannot open '" + a.out + "' for writing");
    sink = &file;
  }
  Rng rng(a.seed);
  MmdOptions opts;
  opts.n_bootstrap = a.bootstrap;
  opts.max_samples = a.max_samples;
  for (Region r : regions) {
    TailSpec spec = default_tail_spec(r, gen.cols());
    if (a.threshold > 0.0) spec.threshold = a.threshold;
    *sink << mmd_region_test(gen, ref, spec, rng, opts).to_json() << '\n';
  }
  if (file.is_open() && !file) throw IoError("write to '" + a.out + "' failed");
}

void cmd_hist(const HistArgs& a, std::ostream& out) {
  if (a.range.size() != 2) throw ConfigError("--range takes two values");
  const Batch data = read_csv(a.in);
  const Histogram h = log_histogram(data, a.bins, a.range[0], a.range[1]);
  write_histogram_csv(a.out, h);
  out << "binned " << data.rows() << " rows (" << h.underflow << " below, " << h.overflow << " above range) into "
      << a.out << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heavy-tailed VAE toolkit: data, training, generation, evaluation"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen_data->add_option("--dataset", gd.dataset, "univariate or bivariate")->capture_default_str();
  gen_data->add_option("--count", gd.count, "Number of rows (single file)");
  gen_data->add_option("--preset", gd.preset, "paper or quick: write train/val/test.csv into --out");
  gen_data->add_option("--seed", gd.seed, "RNG seed")->capture_default_str();
  gen_data->add_option("--out", gd.out, "Output CSV (or directory with --preset)")->required();
  gen_data->add_flag("--no-noise", gd.no_noise, "Bivariate: omit the t2 noise");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model with early stopping");
  train_cmd->add_option("--config", tr.config, "Run config JSON")->required();
  train_cmd->add_option("--data-dir", tr.data_dir, "Directory with train.csv and val.csv")->required();
  train_cmd->add_option("--out", tr.out, "Output directory for checkpoint.json and train_log.csv")->required();
  train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch output");

  GenerateArgs ge;
  auto* generate_cmd = app.add_subcommand("generate", "Sample from a trained model");
  generate_cmd->add_option("--checkpoint", ge.checkpoint, "Checkpoint JSON")->required();
  generate_cmd->add_option("--count", ge.count, "Number of samples")->required();
  generate_cmd->add_option("--seed", ge.seed, "RNG seed")->capture_default_str();
  generate_cmd->add_option("--out", ge.out, "Output CSV (metadata goes to <out>.meta.json)")->required();
  generate_cmd->add_option("--decoder-output", ge.decoder_output, "sample (draw from the decoder) or mean")
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "MMD tests of generated against reference samples");
  eval_cmd->add_option("--generated", ev.generated, "Generated samples CSV")->required();
  eval_cmd->add_option("--reference", ev.reference, "Reference samples CSV")->required();
  eval_cmd->add_option("--region", ev.region, "full, left, right, tails or all")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "JSON-lines report (default stdout)");
  eval_cmd->add_option("--bootstrap", ev.bootstrap, "Bootstrap repetitions")->capture_default_str();
  eval_cmd->add_option("--max-samples", ev.max_samples, "Subsample cap per group")->capture_default_str();
  eval_cmd->add_option("--threshold", ev.threshold, "Override the tail threshold");
  eval_cmd->add_option("--seed", ev.seed, "RNG seed")->capture_default_str();

  HistArgs hi;
  auto* hist_cmd = app.add_subcommand("hist", "Log-density histogram of the first column");
  hist_cmd->add_option("--in", hi.in, "Input CSV")->required();
  hist_cmd->add_option("--bins", hi.bins, "Number of bins")->capture_default_str();
  hist_cmd->add_option("--range", hi.range, "Lower and upper edge")->expected(2)->allow_extra_args(false);
  hist_cmd->add_option("--out", hi.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_data) cmd_gen_data(gd, out);
    if (*train_cmd) cmd_train(tr, out);
    if (*generate_cmd) cmd_generate(ge, out);
    if (*eval_cmd) cmd_eval(ev, out);
    if (*hist_cmd) cmd_hist(hi, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    err << "invalid arguments: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace t3vae::cli
