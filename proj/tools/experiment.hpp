// Experiment configuration shared by the command-line tool and the acceptance
// harness. Files are TOML; unknown keys are rejected so typos fail loudly.
#ifndef RANKCLAP_TOOLS_EXPERIMENT_HPP_
#define RANKCLAP_TOOLS_EXPERIMENT_HPP_

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "rankclap/rankclap.hpp"

namespace rankclap::tools {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataSource { kSynthetic, kIngest };

struct DataSection {
  DataSource source = DataSource::kSynthetic;
  // Generator settings; n_items is unused in favour of the split sizes.
  SyntheticConfig synthetic;
  std::size_t n_train = 2000;
  std::size_t n_dev = 500;
  std::size_t n_test = 1000;
  // Falls back to the master seed when absent.
  std::optional<std::uint64_t> seed;
  // Ingestion files, resolved against the config file's directory.
  std::string train_path;
  std::string dev_path;
  std::string test_path;
};

struct EvalSection {
  std::size_t trials = 10;
  std::size_t samples = 1000;
  std::size_t lists = 100;
  std::size_t projections = 128;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  DataSection data;
  std::size_t embed_dim = 16;
  TrainConfig train;
  EvalSection eval;

  std::uint64_t data_seed() const { return data.seed.value_or(seed); }

  void set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
  }

  SyntheticConfig generator_config() const {
    SyntheticConfig c = data.synthetic;
    c.n_items = data.n_train;
    c.seed = data_seed();
    return c;
  }

  void validate() const {
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (data.source == DataSource::kSynthetic) {
      if (data.n_train < 1 || data.n_dev < 1 || data.n_test < 1)
        throw ConfigError("data: n_train, n_dev and n_test must be >= 1");
      generator_config().validate();
    } else if (data.train_path.empty() || data.dev_path.empty() || data.test_path.empty()) {
      throw ConfigError("data: source \"ingest\" needs train_path, dev_path and test_path");
    }
    if (embed_dim < 1) throw ConfigError("model: embed_dim must be >= 1");
    train.validate();
    if (eval.trials < 1 || eval.samples < 2 || eval.lists < 1 || eval.projections < 1)
      throw ConfigError("eval: trials, lists and projections must be >= 1 and samples >= 2");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json d;
    if (data.source == DataSource::kSynthetic) {
      d = {{"source", "synthetic"},
           {"seed", data_seed()},
           {"n_train", data.n_train},
           {"n_dev", data.n_dev},
           {"n_test", data.n_test},
           {"generator", generator_config().to_json()}};
    } else {
      d = {{"source", "ingest"},
           {"train_path", data.train_path},
           {"dev_path", data.dev_path},
           {"test_path", data.test_path}};
    }
    return {{"seed", seed},
            {"output_dir", output_dir},
            {"data", d},
            {"model", {{"embed_dim", embed_dim}}},
            {"train", train.to_json()},
            {"eval",
             {{"trials", eval.trials},
              {"samples", eval.samples},
              {"lists", eval.lists},
              {"projections", eval.projections}}}};
  }
};

namespace detail {

inline void reject_unknown_keys(const toml::table& t, std::string_view where, const std::set<std::string>& known) {
  for (const auto& [k, v] : t) {
    if (!known.contains(std::string(k.str())))
      throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + std::string(where));
  }
}

inline const toml::table* subtable(const toml::table& t, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  const auto* table = node->as_table();
  if (!table) throw ConfigError("'" + std::string(key) + "' must be a table");
  return table;
}

template <class T>
void read_value(const toml::table& t, std::string_view key, T& out, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) return;
  const std::string name = std::string(where) + "." + std::string(key);
  if constexpr (std::is_same_v<T, bool>) {
    auto v = node->value<bool>();
    if (!v || !node->is_boolean()) throw ConfigError(name + " must be a boolean");
    out = *v;
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!node->is_number()) throw ConfigError(name + " must be a number");
    out = *node->value<double>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!node->is_integer()) throw ConfigError(name + " must be an integer");
    const auto v = *node->value<std::int64_t>();
    if (v < 0) throw ConfigError(name + " must be >= 0");
    out = static_cast<T>(v);
  } else {
    if (!node->is_string()) throw ConfigError(name + " must be a string");
    out = *node->value<std::string>();
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {},
                                                std::string_view source_name = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source_name) + ": " + std::string(e.description()));
  }
  using detail::read_value;
  ExperimentConfig cfg;
  detail::reject_unknown_keys(root, "top level", {"seed", "output_dir", "data", "model", "train", "eval"});
  read_value(root, "seed", cfg.seed, "top");
  read_value(root, "output_dir", cfg.output_dir, "top");

  if (const auto* d = detail::subtable(root, "data")) {
    detail::reject_unknown_keys(*d, "[data]",
                                {"source", "seed", "n_train", "n_dev", "n_test", "audio_dim", "text_dim",
                                 "latent_dim", "noise_audio", "noise_text", "gap_magnitude", "frequency_scale",
                                 "train_path", "dev_path", "test_path"});
    std::string source = "synthetic";
    read_value(*d, "source", source, "data");
    if (source == "synthetic") {
      cfg.data.source = DataSource::kSynthetic;
    } else if (source == "ingest") {
      cfg.data.source = DataSource::kIngest;
    } else {
      throw ConfigError("data.source must be \"synthetic\" or \"ingest\", got \"" + source + "\"");
    }
    if (d->contains("seed")) {
      std::uint64_t s = 0;
      read_value(*d, "seed", s, "data");
      cfg.data.seed = s;
    }
    read_value(*d, "n_train", cfg.data.n_train, "data");
    read_value(*d, "n_dev", cfg.data.n_dev, "data");
    read_value(*d, "n_test", cfg.data.n_test, "data");
    auto& g = cfg.data.synthetic;
    read_value(*d, "audio_dim", g.audio_dim, "data");
    read_value(*d, "text_dim", g.text_dim, "data");
    read_value(*d, "latent_dim", g.latent_dim, "data");
    read_value(*d, "noise_audio", g.noise_audio, "data");
    read_value(*d, "noise_text", g.noise_text, "data");
    read_value(*d, "gap_magnitude", g.gap_magnitude, "data");
    read_value(*d, "frequency_scale", g.frequency_scale, "data");
    for (auto [key, field] : {std::pair{"train_path", &cfg.data.train_path}, std::pair{"dev_path", &cfg.data.dev_path},
                              std::pair{"test_path", &cfg.data.test_path}}) {
      read_value(*d, key, *field, "data");
      if (!field->empty() && std::filesystem::path(*field).is_relative() && !base_dir.empty())
        *field = (base_dir / *field).lexically_normal().string();
    }
  }

  if (const auto* m = detail::subtable(root, "model")) {
    detail::reject_unknown_keys(*m, "[model]", {"embed_dim"});
    read_value(*m, "embed_dim", cfg.embed_dim, "model");
  }

  if (const auto* t = detail::subtable(root, "train")) {
    detail::reject_unknown_keys(*t, "[train]",
                                {"loss", "symmetric_rnc", "learning_rate", "batch_size", "epochs", "beta1", "beta2",
                                 "epsilon", "validation_every", "clip_norm"});
    std::string loss(to_string(cfg.train.loss_kind));
    read_value(*t, "loss", loss, "train");
    try {
      cfg.train.loss_kind = parse_loss_kind(loss);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("train.loss: ") + e.what());
    }
    read_value(*t, "symmetric_rnc", cfg.train.symmetric_rnc, "train");
    read_value(*t, "learning_rate", cfg.train.learning_rate, "train");
    read_value(*t, "batch_size", cfg.train.batch_size, "train");
    read_value(*t, "epochs", cfg.train.epochs, "train");
    read_value(*t, "beta1", cfg.train.beta1, "train");
    read_value(*t, "beta2", cfg.train.beta2, "train");
    read_value(*t, "epsilon", cfg.train.epsilon, "train");
    read_value(*t, "validation_every", cfg.train.validation_every, "train");
    read_value(*t, "clip_norm", cfg.train.clip_norm, "train");
  }

  if (const auto* e = detail::subtable(root, "eval")) {
    detail::reject_unknown_keys(*e, "[eval]", {"trials", "samples", "lists", "projections"});
    read_value(*e, "trials", cfg.eval.trials, "eval");
    read_value(*e, "samples", cfg.eval.samples, "eval");
    read_value(*e, "lists", cfg.eval.lists, "eval");
    read_value(*e, "projections", cfg.eval.projections, "eval");
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), std::filesystem::path(path).parent_path(), path);
}

// Seed precedence: explicit flag, then RANKCLAP_SEED, then the config value.
inline std::optional<std::uint64_t> seed_override(std::optional<std::uint64_t> flag) {
  if (flag) return flag;
  const char* env = std::getenv("RANKCLAP_SEED");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-')
    throw ConfigError(std::string("RANKCLAP_SEED is not a non-negative integer: '") + env + "'");
  return static_cast<std::uint64_t>(v);
}

// Text-side query features for the ordinality test: regenerated from a
// synthetic dataset's provenance, or looked up in a precomputed file.
class QuerySource {
 public:
  static QuerySource for_dataset(const Dataset& pool, const Dataset* precomputed) {
    QuerySource q;
    if (precomputed) {
      q.table_.emplace(*precomputed);
    } else if (auto cfg = synthetic_provenance(pool.provenance)) {
      q.generator_.emplace(*cfg);
    }
    return q;
  }
  bool available() const noexcept { return generator_.has_value() || table_.has_value(); }
  std::vector<double> operator()(const ValenceArousal& y, RngStream& rng) const {
    if (generator_) return generator_->text_features(y, rng);
    if (table_) return (*table_)(y, rng);
    throw InvalidArgument("ordinality test needs query features: the pool is not synthetic and no query file was given");
  }

 private:
  std::optional<SyntheticGenerator> generator_;
  std::optional<LabelKeyedQueries> table_;
};

struct EvalOutcome {
  AlignmentReport alignment;
  std::optional<OrdinalityReport> voc;
  std::optional<OrdinalityReport> aoc;
};

// Alignment trials on the pool's projected embeddings plus the requested
// ordinality tests, all seeded from seed.
inline EvalOutcome evaluate_model(const TwoTowerModel& model, const Dataset& pool, const QuerySource& queries,
                                  const EvalSection& settings, std::uint64_t seed, bool voc, bool aoc) {
  if (pool.audio_dim != model.dims().audio || pool.text_dim != model.dims().text)
    throw InvalidArgument("evaluation data dims (" + std::to_string(pool.audio_dim) + ", " +
                          std::to_string(pool.text_dim) + ") do not match the checkpoint (" +
                          std::to_string(model.dims().audio) + ", " + std::to_string(model.dims().text) + ")");
  EvalOutcome out;
  const Matrix ea = project(model.audio_head(), pool.audio_matrix());
  const Matrix et = project(model.text_head(), pool.text_matrix());
  AlignmentOptions opts;
  opts.n_projections = settings.projections;
  out.alignment = alignment_trials(ea, et, settings.trials, settings.samples, seed, opts);
  if (voc) out.voc = ordinality_test(model, pool, OrdinalityMode::kValence, settings.lists, seed, queries);
  if (aoc) out.aoc = ordinality_test(model, pool, OrdinalityMode::kArousal, settings.lists, seed, queries);
  return out;
}

}  // namespace rankclap::tools

#endif  // RANKCLAP_TOOLS_EXPERIMENT_HPP_
