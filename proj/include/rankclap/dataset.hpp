#ifndef RANKCLAP_DATASET_HPP_
#define RANKCLAP_DATASET_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankclap/errors.hpp"
#include "rankclap/labels.hpp"
#include "rankclap/numkit.hpp"

namespace rankclap {

enum class Split { kTrain, kDev, kTest };

inline std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

inline std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

struct LabeledPair {
  std::vector<double> audio_features;
  std::vector<double> text_features;
  ValenceArousal label;
  std::optional<int> category;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct Dataset {
  std::vector<LabeledPair> items;
  Split split = Split::kTrain;
  std::size_t audio_dim = 0;
  std::size_t text_dim = 0;
  std::string provenance;

  std::size_t size() const noexcept { return items.size(); }

  // Throws FormatError on the first violated invariant.
  void validate() const {
    if (items.empty()) throw FormatError("dataset has no records");
    if (audio_dim == 0 || text_dim == 0) throw FormatError("dataset dims must be positive");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& it = items[i];
      if (it.audio_features.size() != audio_dim) {
        throw FormatError("record " + std::to_string(i) + ": audio has " +
                              std::to_string(it.audio_features.size()) + " values, expected " +
                              std::to_string(audio_dim),
                          i);
      }
      if (it.text_features.size() != text_dim) {
        throw FormatError("record " + std::to_string(i) + ": text has " +
                              std::to_string(it.text_features.size()) + " values, expected " +
                              std::to_string(text_dim),
                          i);
      }
      for (double v : it.audio_features)
        if (!std::isfinite(v)) throw FormatError("record " + std::to_string(i) + ": non-finite audio value", i);
      for (double v : it.text_features)
        if (!std::isfinite(v)) throw FormatError("record " + std::to_string(i) + ": non-finite text value", i);
    }
  }

  Matrix audio_matrix() const { return stack(&LabeledPair::audio_features, audio_dim); }
  Matrix text_matrix() const { return stack(&LabeledPair::text_features, text_dim); }

  std::vector<ValenceArousal> labels() const {
    std::vector<ValenceArousal> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.label);
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix stack(std::vector<double> LabeledPair::*field, std::size_t dim) const {
    Matrix m(items.size(), dim);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& src = items[i].*field;
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    return m;
  }
};

struct SyntheticConfig {
  std::size_t n_items = 2000;
  std::size_t audio_dim = 32;
  std::size_t text_dim = 24;
  std::size_t latent_dim = 8;
  double noise_audio = 0.1;
  double noise_text = 0.1;
  double gap_magnitude = 3.0;
  // Standard deviation of the random-feature frequencies; lower is smoother
  // in label space.
  double frequency_scale = 0.35;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_items < 1) throw InvalidArgument("SyntheticConfig: n_items must be >= 1");
    if (audio_dim < 2 || text_dim < 2 || latent_dim < 2)
      throw InvalidArgument("SyntheticConfig: all dims must be >= 2");
    auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
    if (!nonneg(noise_audio) || !nonneg(noise_text) || !nonneg(gap_magnitude))
      throw InvalidArgument("SyntheticConfig: noise and gap must be finite and >= 0");
    if (!(std::isfinite(frequency_scale) && frequency_scale > 0.0))
      throw InvalidArgument("SyntheticConfig: frequency_scale must be > 0");
  }

  nlohmann::ordered_json to_json() const {
    return {{"n_items", n_items},           {"audio_dim", audio_dim},
            {"text_dim", text_dim},         {"latent_dim", latent_dim},
            {"noise_audio", noise_audio},   {"noise_text", noise_text},
            {"gap_magnitude", gap_magnitude}, {"frequency_scale", frequency_scale},
            {"seed", seed}};
  }

  // Inverse of to_json; missing keys keep their defaults.
  static SyntheticConfig from_json(const nlohmann::json& j) {
    SyntheticConfig c;
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("n_items", c.n_items);
    take("audio_dim", c.audio_dim);
    take("text_dim", c.text_dim);
    take("latent_dim", c.latent_dim);
    take("noise_audio", c.noise_audio);
    take("noise_text", c.noise_text);
    take("gap_magnitude", c.gap_magnitude);
    take("frequency_scale", c.frequency_scale);
    take("seed", c.seed);
    return c;
  }
};

inline constexpr std::string_view kSyntheticProvenancePrefix = "synthetic:";

// The generator config recorded in a synthetic dataset's provenance, if any.
inline std::optional<SyntheticConfig> synthetic_provenance(std::string_view provenance) {
  if (!provenance.starts_with(kSyntheticProvenancePrefix)) return std::nullopt;
  try {
    return SyntheticConfig::from_json(nlohmann::json::parse(provenance.substr(kSyntheticProvenancePrefix.size())));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("unreadable synthetic provenance: ") + e.what());
  }
}

// Frozen-encoder stand-in. Labels are lifted into a shared latent space by a
// seeded random-feature map g(v, a) = [sin(W y + b); cos(W y + b)], then each
// modality mixes g linearly, adds Gaussian noise, and the text side is offset
// by gap_magnitude along a fixed unit vector.
class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(SyntheticConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t half = (cfg_.latent_dim + 1) / 2;
    auto freq = RngStream::derived(cfg_.seed, "synthetic/frequencies");
    freq_ = Matrix(half, 2);
    phase_.resize(half);
    for (std::size_t r = 0; r < half; ++r) {
      freq_(r, 0) = freq.normal(0.0, cfg_.frequency_scale);
      freq_(r, 1) = freq.normal(0.0, cfg_.frequency_scale);
      phase_[r] = freq.uniform(0.0, 2.0 * std::numbers::pi);
    }
    mix_audio_ = mixing_matrix(cfg_.audio_dim);
    mix_text_ = mixing_matrix(cfg_.text_dim);

    auto gap = RngStream::derived(cfg_.seed, "synthetic/gap", cfg_.text_dim);
    gap_dir_.resize(cfg_.text_dim);
    for (auto& x : gap_dir_) x = gap.normal();
    const double n = l2_norm(gap_dir_);
    for (auto& x : gap_dir_) x /= n;
  }

  const SyntheticConfig& config() const noexcept { return cfg_; }
  std::span<const double> gap_direction() const noexcept { return gap_dir_; }

  std::vector<double> latent(const ValenceArousal& y) const {
    const std::size_t half = freq_.rows();
    std::vector<double> g(cfg_.latent_dim);
    for (std::size_t r = 0; r < half; ++r) {
      const double z = freq_(r, 0) * y.valence() + freq_(r, 1) * y.arousal() + phase_[r];
      g[r] = std::sin(z);
      if (half + r < cfg_.latent_dim) g[half + r] = std::cos(z);
    }
    return g;
  }

  // Audio features for a label; rng supplies the noise draws (always drawn,
  // so the stream position does not depend on the noise level).
  std::vector<double> audio_features(const ValenceArousal& y, RngStream& rng) const {
    auto x = mix(mix_audio_, latent(y));
    for (auto& v : x) v += cfg_.noise_audio * rng.normal();
    return x;
  }

  std::vector<double> text_features(const ValenceArousal& y, RngStream& rng) const {
    auto x = mix(mix_text_, latent(y));
    for (auto& v : x) v += cfg_.noise_text * rng.normal();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += cfg_.gap_magnitude * gap_dir_[i];
    return x;
  }

  Dataset generate(Split split = Split::kTrain) const { return generate(split, cfg_.n_items); }

  Dataset generate(Split split, std::size_t n_items) const {
    auto rng = RngStream::derived(cfg_.seed, std::string("synthetic/items/") + std::string(to_string(split)));
    Dataset ds;
    ds.split = split;
    ds.audio_dim = cfg_.audio_dim;
    ds.text_dim = cfg_.text_dim;
    ds.provenance = std::string(kSyntheticProvenancePrefix) + cfg_.to_json().dump();
    ds.items.reserve(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
      const double v = rng.uniform(1.0, 7.0);
      const double a = rng.uniform(1.0, 7.0);
      const ValenceArousal y(v, a);
      auto audio = audio_features(y, rng);
      auto text = text_features(y, rng);
      ds.items.push_back({std::move(audio), std::move(text), y, quadrant(y)});
    }
    return ds;
  }

 private:
  // Keyed by output dim only, so equal-dimension modalities share one matrix.
  Matrix mixing_matrix(std::size_t dim) const {
    auto rng = RngStream::derived(cfg_.seed, "synthetic/mixing", dim);
    Matrix m(dim, cfg_.latent_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.latent_dim));
    for (auto& v : m.values()) v = scale * rng.normal();
    return m;
  }

  static std::vector<double> mix(const Matrix& m, std::span<const double> g) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), g);
    return out;
  }

  SyntheticConfig cfg_;
  Matrix freq_;
  std::vector<double> phase_;
  Matrix mix_audio_;
  Matrix mix_text_;
  std::vector<double> gap_dir_;
};

inline Dataset generate_synthetic(const SyntheticConfig& cfg, Split split = Split::kTrain) {
  return SyntheticGenerator(cfg).generate(split);
}

// Ingestion format, version 1: a JSON header line followed by one JSON
// record per line.
inline constexpr int kDatasetFormatVersion = 1;

inline void write_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  nlohmann::ordered_json header = {{"version", kDatasetFormatVersion},
                                   {"audio_dim", ds.audio_dim},
                                   {"text_dim", ds.text_dim},
                                   {"split", to_string(ds.split)}};
  if (!ds.provenance.empty()) header["provenance"] = ds.provenance;
  out << header.dump() << '\n';
  for (const auto& it : ds.items) {
    nlohmann::ordered_json rec;
    rec["valence"] = it.label.valence();
    rec["arousal"] = it.label.arousal();
    rec["category"] = it.category ? nlohmann::ordered_json(*it.category) : nlohmann::ordered_json(nullptr);
    rec["audio"] = it.audio_features;
    rec["text"] = it.text_features;
    out << rec.dump() << '\n';
  }
}

namespace detail {

inline std::vector<double> read_feature_array(const nlohmann::json& rec, const char* key,
                                              std::size_t dim, std::size_t index) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_array())
    throw FormatError("record " + std::to_string(index) + ": missing array '" + key + "'", index);
  if (it->size() != dim) {
    throw FormatError("record " + std::to_string(index) + ": '" + key + "' has " +
                          std::to_string(it->size()) + " values, expected " + std::to_string(dim),
                      index);
  }
  std::vector<double> out;
  out.reserve(dim);
  for (const auto& v : *it) {
    if (!v.is_number())
      throw FormatError("record " + std::to_string(index) + ": non-numeric value in '" + key + "'", index);
    const double x = v.get<double>();
    if (!std::isfinite(x))
      throw FormatError("record " + std::to_string(index) + ": non-finite value in '" + key + "'", index);
    out.push_back(x);
  }
  return out;
}

inline double read_label_value(const nlohmann::json& rec, const char* key, std::size_t index) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_number())
    throw FormatError("record " + std::to_string(index) + ": missing number '" + key + "'", index);
  const double x = it->get<double>();
  if (!ValenceArousal::in_range(x))
    throw FormatError("record " + std::to_string(index) + ": '" + key + "' outside [0.5, 7]", index);
  return x;
}

}  // namespace detail

inline Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
  if (!header.is_object()) throw FormatError("malformed header: not an object");
  if (!header.contains("version") || !header["version"].is_number_integer())
    throw FormatError("malformed header: missing integer 'version'");
  if (header["version"].get<int>() != kDatasetFormatVersion)
    throw FormatError("unsupported dataset version " + header["version"].dump());
  for (const char* key : {"audio_dim", "text_dim"}) {
    if (!header.contains(key) || !header[key].is_number_unsigned() || header[key].get<std::size_t>() == 0)
      throw FormatError(std::string("malformed header: '") + key + "' must be a positive integer");
  }
  if (!header.contains("split") || !header["split"].is_string())
    throw FormatError("malformed header: missing 'split'");
  auto split = parse_split(header["split"].get<std::string>());
  if (!split) throw FormatError("malformed header: unknown split " + header["split"].dump());

  Dataset ds;
  ds.split = *split;
  ds.audio_dim = header["audio_dim"].get<std::size_t>();
  ds.text_dim = header["text_dim"].get<std::size_t>();
  if (header.contains("provenance") && header["provenance"].is_string())
    ds.provenance = header["provenance"].get<std::string>();

  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("record " + std::to_string(index) + ": malformed JSON: " + e.what(), index);
    }
    if (!rec.is_object()) throw FormatError("record " + std::to_string(index) + ": not an object", index);
    const double v = detail::read_label_value(rec, "valence", index);
    const double a = detail::read_label_value(rec, "arousal", index);
    std::optional<int> category;
    if (auto c = rec.find("category"); c != rec.end() && !c->is_null()) {
      if (!c->is_number_integer())
        throw FormatError("record " + std::to_string(index) + ": 'category' must be integer or null", index);
      category = c->get<int>();
    }
    auto audio = detail::read_feature_array(rec, "audio", ds.audio_dim, index);
    auto text = detail::read_feature_array(rec, "text", ds.text_dim, index);
    ds.items.push_back({std::move(audio), std::move(text), ValenceArousal(v, a), category});
    ++index;
  }
  if (ds.items.empty()) throw FormatError("dataset has no records");
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset(ds, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  try {
    return read_dataset(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what(), e.record());
  }
}

}  // namespace rankclap

#endif  // RANKCLAP_DATASET_HPP_
