// rankclap: data generation, training, evaluation and prompt emission.
//
//   rankclap gen-data --config <path> [--seed N]
//   rankclap train --config <path> [--loss rnc_cm|sce|supcon] [--seed N]
//   rankclap eval --checkpoint <path> --data <path> [--mode voc|aoc|both]
//                 [--trials N] [--samples N] [--compare <ckpt2>]
//   rankclap gen-prompts --mode voc|aoc --lists N --out <path>
//
// Every artifact is re-read after writing; the exit code is nonzero unless
// all of them round-trip.
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace fs = std::filesystem;
using namespace rankclap;
using namespace rankclap::tools;

namespace {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes bytes and checks that reading them back gives the same bytes.
void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + path.string());
    out << bytes;
    if (!out.flush()) throw ArtifactError("write failed for " + path.string());
  }
  if (read_file(path) != bytes) throw ArtifactError("re-read mismatch for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file(path, text);
  if (nlohmann::ordered_json::parse(read_file(path)) != j) throw ArtifactError("JSON re-read mismatch for " + path.string());
}

template <class Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ostringstream s;
  writer(s);
  write_file(path, s.str());
}

std::string content_digest(const std::string& bytes) { return hex64(fnv1a64(bytes)); }

fs::path data_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "data"; }

fs::path split_path(const ExperimentConfig& cfg, Split split) {
  if (cfg.data.source == DataSource::kIngest) {
    switch (split) {
      case Split::kTrain: return cfg.data.train_path;
      case Split::kDev: return cfg.data.dev_path;
      case Split::kTest: return cfg.data.test_path;
    }
  }
  return data_dir(cfg) / (std::string(to_string(split)) + ".jsonl");
}

ExperimentConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed_flag) {
  auto cfg = load_experiment_config(path);
  if (auto s = seed_override(seed_flag)) cfg.set_seed(*s);
  cfg.validate();
  return cfg;
}

int cmd_gen_data(const std::string& config_path, std::optional<std::uint64_t> seed_flag) {
  auto cfg = load_experiment_config(config_path);
  if (cfg.data.source != DataSource::kSynthetic)
    throw ConfigError("gen-data needs data.source = \"synthetic\"; ingested files are used as they are");
  // The data seed follows the same precedence, with data.seed standing in
  // for the config value when set.
  if (auto s = seed_override(seed_flag)) cfg.data.seed = *s;
  cfg.validate();

  const SyntheticGenerator gen(cfg.generator_config());
  nlohmann::ordered_json files;
  for (auto [split, n] : {std::pair{Split::kTrain, cfg.data.n_train}, std::pair{Split::kDev, cfg.data.n_dev},
                          std::pair{Split::kTest, cfg.data.n_test}}) {
    const Dataset ds = gen.generate(split, n);
    std::ostringstream s;
    write_dataset(ds, s);
    const fs::path path = split_path(cfg, split);
    write_file(path, s.str());
    if (load_dataset(path.string()) != ds) throw ArtifactError("dataset re-read mismatch for " + path.string());
    files[std::string(to_string(split))] = {
        {"path", path.filename().string()}, {"records", ds.size()}, {"fnv1a64", content_digest(s.str())}};
  }
  const auto effective = cfg.to_json();
  write_json(data_dir(cfg) / "manifest.json", {{"command", "gen-data"},
                                               {"config", effective},
                                               {"config_digest", content_digest(effective["data"].dump())},
                                               {"files", files}});
  std::cout << "wrote " << data_dir(cfg).string() << "\n";
  return 0;
}

Dataset load_split(const ExperimentConfig& cfg, Split split) {
  const fs::path path = split_path(cfg, split);
  if (!fs::exists(path)) {
    std::string hint = cfg.data.source == DataSource::kSynthetic ? " (run gen-data first)" : "";
    throw ArtifactError("dataset file not found: " + path.string() + hint);
  }
  try {
    return load_dataset(path.string());
  } catch (const FormatError& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

int cmd_train(const std::string& config_path, std::optional<std::string> loss_flag,
              std::optional<std::uint64_t> seed_flag) {
  auto cfg = resolve_config(config_path, seed_flag);
  if (loss_flag) cfg.train.loss_kind = parse_loss_kind(*loss_flag);

  const Dataset train_ds = load_split(cfg, Split::kTrain);
  const Dataset dev_ds = load_split(cfg, Split::kDev);
  const std::string data_context = content_digest(read_file(split_path(cfg, Split::kTrain))) + ":" +
                                   content_digest(read_file(split_path(cfg, Split::kDev)));

  const auto start = std::chrono::steady_clock::now();
  const auto model0 = init_model(train_ds.audio_dim, train_ds.text_dim, cfg.embed_dim, cfg.seed);
  const auto result = train(model0, train_ds, dev_ds, cfg.train, data_context);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path run = fs::path(cfg.output_dir) / "runs" /
                       (std::string(to_string(cfg.train.loss_kind)) + "-seed" + std::to_string(cfg.seed));
  const fs::path ckpt = run / "checkpoint.json";
  write_file(ckpt, checkpoint_to_string(result.best.model, result.best.meta));
  const auto back = load_checkpoint(ckpt.string());
  if (back.model != result.best.model || back.meta != result.best.meta)
    throw ArtifactError("checkpoint re-read mismatch for " + ckpt.string());
  write_csv(run / "steps.csv", [&](std::ostream& o) { write_step_csv(result.log, o); });
  write_csv(run / "validation.csv", [&](std::ostream& o) { write_validation_csv(result.log, o); });

  const auto& vals = result.log.validations;
  write_json(run / "manifest.json",
             {{"command", "train"},
              {"config", cfg.to_json()},
              {"config_digest", result.best.meta.config_digest},
              {"seed", cfg.seed},
              {"data", {{"train", split_path(cfg, Split::kTrain).string()}, {"dev", split_path(cfg, Split::kDev).string()},
                        {"fnv1a64", data_context}}},
              {"steps", result.log.steps.size()},
              {"skipped_batches", result.log.skipped_batches},
              {"dropped_rows", result.log.dropped_rows},
              {"initial_val_loss", vals.front().val_loss},
              {"final_val_loss", vals.back().val_loss},
              {"best", {{"step", result.best.meta.step}, {"val_loss", result.best.meta.val_loss}}},
              {"checkpoint_fnv1a64", content_digest(read_file(ckpt))}});
  // Wall time lives apart from the manifest so that reruns stay byte-identical.
  write_json(run / "timing.json", {{"wall_seconds", wall}});
  std::cout << "wrote " << run.string() << " (best step " << result.best.meta.step << ", val loss "
            << result.best.meta.val_loss << ")\n";
  return 0;
}

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  std::string mode = "both";
  EvalSection settings;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> compare;
  std::optional<std::string> queries;
  std::optional<std::string> out;
};

void write_outcome(const fs::path& dir, const EvalOutcome& r) {
  write_json(dir / "alignment.json", to_json(r.alignment));
  write_csv(dir / "alignment.csv", [&](std::ostream& o) { write_alignment_csv(r.alignment, o); });
  for (const auto* rep : {&r.voc, &r.aoc}) {
    if (!*rep) continue;
    const std::string stem = "ordinality_" + std::string(to_string((*rep)->mode));
    write_json(dir / (stem + ".json"), to_json(**rep));
    write_csv(dir / (stem + ".csv"), [&](std::ostream& o) { write_ordinality_csv(**rep, o); });
    write_csv(dir / (stem + "_plot.csv"), [&](std::ostream& o) { write_ordinality_plot_csv(**rep, o); });
  }
}

nlohmann::ordered_json welch_json(std::span<const double> a, std::span<const double> b) {
  const auto sa = summarize(a), sb = summarize(b);
  nlohmann::ordered_json j = {{"mean", sa.mean}, {"std", sa.stddev}, {"compare_mean", sb.mean},
                              {"compare_std", sb.stddev}, {"n", a.size()}, {"compare_n", b.size()}};
  try {
    const auto w = welch_t_test(a, b);
    j["t"] = w.t;
    j["df"] = w.df;
    j["p_two_tailed"] = w.p_two_tailed;
  } catch (const UndefinedStatistic& e) {
    j["t"] = nullptr;
    j["df"] = nullptr;
    j["p_two_tailed"] = nullptr;
    j["note"] = e.what();
  }
  return j;
}

int cmd_eval(const EvalFlags& f) {
  if (f.mode != "voc" && f.mode != "aoc" && f.mode != "both")
    throw InvalidArgument("--mode must be voc, aoc or both, got '" + f.mode + "'");
  const bool voc = f.mode != "aoc", aoc = f.mode != "voc";
  const std::uint64_t seed = seed_override(f.seed).value_or(0);
  const auto cp = load_checkpoint(f.checkpoint);
  Dataset pool;
  try {
    pool = load_dataset(f.data);
  } catch (const FormatError& e) {
    throw ArtifactError(f.data + ": " + e.what());
  }
  std::optional<Dataset> precomputed;
  if (f.queries) precomputed = load_dataset(*f.queries);
  const auto queries = QuerySource::for_dataset(pool, precomputed ? &*precomputed : nullptr);

  const fs::path out = f.out ? fs::path(*f.out) : fs::path(f.checkpoint).parent_path() / "eval";
  const auto r = evaluate_model(cp.model, pool, queries, f.settings, seed, voc, aoc);
  write_outcome(out, r);

  nlohmann::ordered_json manifest = {
      {"command", "eval"},
      {"checkpoint", f.checkpoint},
      {"checkpoint_fnv1a64", content_digest(read_file(f.checkpoint))},
      {"data", f.data},
      {"data_fnv1a64", content_digest(read_file(f.data))},
      {"mode", f.mode},
      {"seed", seed},
      {"settings",
       {{"trials", f.settings.trials},
        {"samples", f.settings.samples},
        {"lists", f.settings.lists},
        {"projections", f.settings.projections}}}};

  if (f.compare) {
    const auto other = load_checkpoint(*f.compare);
    const auto r2 = evaluate_model(other.model, pool, queries, f.settings, seed, voc, aoc);
    write_outcome(out / "compare", r2);
    nlohmann::ordered_json cmp = {{"checkpoint", f.checkpoint}, {"compare_checkpoint", *f.compare}, {"seed", seed},
                                  {"test", "welch_two_tailed"}};
    cmp["mmd"] = welch_json(r.alignment.mmd_values(), r2.alignment.mmd_values());
    cmp["wasserstein"] = welch_json(r.alignment.wasserstein_values(), r2.alignment.wasserstein_values());
    if (voc) cmp["voc_tau"] = welch_json(r.voc->taus(), r2.voc->taus());
    if (aoc) cmp["aoc_tau"] = welch_json(r.aoc->taus(), r2.aoc->taus());
    write_json(out / "comparison.json", cmp);
    manifest["compare_checkpoint"] = *f.compare;
    manifest["compare_checkpoint_fnv1a64"] = content_digest(read_file(*f.compare));
  }
  write_json(out / "manifest.json", manifest);

  std::cout << "alignment: mmd " << r.alignment.mmd.mean << " +- " << r.alignment.mmd.stddev << ", wasserstein "
            << r.alignment.wasserstein.mean << " +- " << r.alignment.wasserstein.stddev << "\n";
  for (const auto* rep : {&r.voc, &r.aoc})
    if (*rep)
      std::cout << to_string((*rep)->mode) << " tau " << (*rep)->tau.mean << " +- " << (*rep)->tau.stddev << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_gen_prompts(const std::string& mode_name, std::size_t lists, const std::string& out_path) {
  const auto mode = parse_ordinality_mode(mode_name);
  if (lists < 1) throw InvalidArgument("--lists must be >= 1");
  std::string text;
  for (const auto& list : eval_grid(mode, lists)) {
    for (const auto& y : list) {
      nlohmann::ordered_json j = {{"valence", y.valence()},
                                  {"arousal", y.arousal()},
                                  {"llm_prompt", render_style_prompt(y).prompt_text},
                                  {"template_caption", template_caption(y)}};
      text += j.dump() + "\n";
    }
  }
  write_file(out_path, text);
  std::cout << "wrote " << lists * kGridListLength << " prompts to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-N-Contrast cross-modal training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> loss;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic train/dev/test files");
  gen->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Data seed; overrides RANKCLAP_SEED and the config");

  auto* tr = app.add_subcommand("train", "Train one model and keep the best-validation checkpoint");
  tr->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
  tr->add_option("--loss", loss, "rnc_cm, sce or supcon; overrides the config");
  tr->add_option("--seed", seed, "Master seed; overrides RANKCLAP_SEED and the config");

  EvalFlags ef;
  auto* ev = app.add_subcommand("eval", "Alignment and ordinality reports for a checkpoint");
  ev->add_option("--checkpoint", ef.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ef.data, "Evaluation pool (ingestion format)")->required()->check(CLI::ExistingFile);
  ev->add_option("--mode", ef.mode, "voc, aoc or both")->capture_default_str();
  ev->add_option("--trials", ef.settings.trials, "Alignment trials")->capture_default_str();
  ev->add_option("--samples", ef.settings.samples, "Pairs per alignment trial")->capture_default_str();
  ev->add_option("--lists", ef.settings.lists, "Ordinality lists")->capture_default_str();
  ev->add_option("--projections", ef.settings.projections, "Sliced-Wasserstein projections")->capture_default_str();
  ev->add_option("--seed", ef.seed, "Seed; overrides RANKCLAP_SEED (default 0)");
  ev->add_option("--compare", ef.compare, "Second checkpoint; emits Welch tests per metric")
      ->check(CLI::ExistingFile);
  ev->add_option("--queries", ef.queries, "Precomputed query features keyed by grid label (non-synthetic pools)")
      ->check(CLI::ExistingFile);
  ev->add_option("--out", ef.out, "Output directory (default: <checkpoint dir>/eval)");

  std::string prompt_mode, prompt_out;
  std::size_t prompt_lists = 100;
  auto* gp = app.add_subcommand("gen-prompts", "Write style-description prompts for the ordinality grid");
  gp->add_option("--mode", prompt_mode, "voc or aoc")->required();
  gp->add_option("--lists", prompt_lists, "Number of lists")->capture_default_str();
  gp->add_option("--out", prompt_out, "Output JSONL path")->required();
  gp->add_option("--seed", seed, "Accepted for uniformity; prompts involve no randomness");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_gen_data(config_path, seed);
    if (tr->parsed()) return cmd_train(config_path, loss, seed);
    if (ev->parsed()) return cmd_eval(ef);
    if (gp->parsed()) return cmd_gen_prompts(prompt_mode, prompt_lists, prompt_out);
  } catch (const std::exception& e) {
    std::cerr << "rankclap: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
