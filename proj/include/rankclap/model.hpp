#ifndef RANKCLAP_MODEL_HPP_
#define RANKCLAP_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankclap/errors.hpp"
#include "rankclap/losses.hpp"
#include "rankclap/numkit.hpp"

namespace rankclap {

struct ModelDims {
  std::size_t audio = 32;  // V
  std::size_t text = 24;   // U
  std::size_t embed = 16;  // D

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Affine map followed by ReLU: out = max(0, W x + b), W is out_dim x in_dim.
struct ProjectionHead {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  friend bool operator==(const ProjectionHead&, const ProjectionHead&) = default;
};

inline constexpr std::string_view kInitScheme = "uniform_fan_in(+-sqrt(6/in_dim));bias=0;theta=0";

class TwoTowerModel {
 public:
  TwoTowerModel() = default;
  TwoTowerModel(ProjectionHead audio, ProjectionHead text, TemperatureParam temp)
      : audio_(std::move(audio)), text_(std::move(text)), temp_(temp) {
    if (audio_.out_dim() != text_.out_dim())
      throw InvalidArgument("TwoTowerModel: heads disagree on output dim");
    if (audio_.bias.size() != audio_.out_dim() || text_.bias.size() != text_.out_dim())
      throw InvalidArgument("TwoTowerModel: bias length differs from output dim");
  }

  ModelDims dims() const noexcept { return {audio_.in_dim(), text_.in_dim(), audio_.out_dim()}; }
  const ProjectionHead& audio_head() const noexcept { return audio_; }
  const ProjectionHead& text_head() const noexcept { return text_; }
  const TemperatureParam& temperature() const noexcept { return temp_; }

  // Bumped on every parameter write; forward caches remember it.
  std::uint64_t revision() const noexcept { return revision_; }

  std::size_t parameter_count() const noexcept {
    return audio_.weight.size() + audio_.bias.size() + text_.weight.size() + text_.bias.size() + 1;
  }

  // Flat layout: audio W, audio b, text W, text b, theta.
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto* h : {&audio_, &text_}) {
      p.insert(p.end(), h->weight.values().begin(), h->weight.values().end());
      p.insert(p.end(), h->bias.begin(), h->bias.end());
    }
    p.push_back(temp_.theta);
    return p;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count())
      throw InvalidArgument("set_parameters: expected " + std::to_string(parameter_count()) + " values");
    std::size_t off = 0;
    for (auto* h : {&audio_, &text_}) {
      auto w = h->weight.values();
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                p.begin() + static_cast<std::ptrdiff_t>(off + w.size()), w.begin());
      off += w.size();
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                p.begin() + static_cast<std::ptrdiff_t>(off + h->bias.size()), h->bias.begin());
      off += h->bias.size();
    }
    temp_.theta = p[off];
    ++revision_;
  }

  ProjectionHead& mutable_audio_head() {
    ++revision_;
    return audio_;
  }
  ProjectionHead& mutable_text_head() {
    ++revision_;
    return text_;
  }
  void set_temperature(TemperatureParam t) {
    temp_ = t;
    ++revision_;
  }

  // Parameter equality; revision is bookkeeping and not compared.
  friend bool operator==(const TwoTowerModel& a, const TwoTowerModel& b) {
    return a.audio_ == b.audio_ && a.text_ == b.text_ && a.temp_.theta == b.temp_.theta;
  }

 private:
  ProjectionHead audio_;
  ProjectionHead text_;
  TemperatureParam temp_;
  std::uint64_t revision_ = 0;
};

inline ProjectionHead init_head(std::size_t in_dim, std::size_t out_dim, RngStream& rng) {
  ProjectionHead h{Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0)};
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim));
  for (auto& w : h.weight.values()) w = rng.uniform(-bound, bound);
  return h;
}

inline TwoTowerModel init_model(std::size_t audio_dim, std::size_t text_dim, std::size_t embed_dim,
                                std::uint64_t seed) {
  if (audio_dim < 1 || text_dim < 1 || embed_dim < 1) throw InvalidArgument("init_model: dims must be >= 1");
  auto ra = RngStream::derived(seed, "model/audio_head");
  auto rt = RngStream::derived(seed, "model/text_head");
  return TwoTowerModel(init_head(audio_dim, embed_dim, ra), init_head(text_dim, embed_dim, rt),
                       TemperatureParam{0.0});
}

inline TwoTowerModel init_model(const ModelDims& d, std::uint64_t seed) {
  return init_model(d.audio, d.text, d.embed, seed);
}

namespace detail {
inline Matrix affine_preactivation(const ProjectionHead& h, const Matrix& x, const char* who) {
  if (x.cols() != h.in_dim()) {
    throw InvalidArgument(std::string(who) + ": input has " + std::to_string(x.cols()) + " columns, head expects " +
                          std::to_string(h.in_dim()));
  }
  Matrix z(x.rows(), h.out_dim());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto xr = x.row(n);
    auto zr = z.row(n);
    for (std::size_t d = 0; d < h.out_dim(); ++d) zr[d] = dot(h.weight.row(d), xr) + h.bias[d];
  }
  return z;
}

inline Matrix relu(Matrix z) {
  for (auto& v : z.values()) v = v > 0.0 ? v : 0.0;
  return z;
}
}  // namespace detail

inline Matrix project(const ProjectionHead& h, const Matrix& x) {
  return detail::relu(detail::affine_preactivation(h, x, "project"));
}

struct ForwardCache {
  Matrix input_audio;
  Matrix input_text;
  Matrix pre_audio;
  Matrix pre_text;
  std::uint64_t revision = 0;
};

struct ForwardResult {
  Matrix audio;  // N x D
  Matrix text;   // N x D
  ForwardCache cache;
};

inline ForwardResult forward(const TwoTowerModel& model, const Matrix& x_audio, const Matrix& x_text) {
  if (x_audio.rows() != x_text.rows()) throw InvalidArgument("forward: audio and text batches differ in size");
  ForwardResult r;
  r.cache.pre_audio = detail::affine_preactivation(model.audio_head(), x_audio, "forward(audio)");
  r.cache.pre_text = detail::affine_preactivation(model.text_head(), x_text, "forward(text)");
  r.audio = detail::relu(r.cache.pre_audio);
  r.text = detail::relu(r.cache.pre_text);
  r.cache.input_audio = x_audio;
  r.cache.input_text = x_text;
  r.cache.revision = model.revision();
  return r;
}

struct ModelGradients {
  ProjectionHead audio;
  ProjectionHead text;
  double theta = 0.0;

  // Same layout as TwoTowerModel::parameters().
  std::vector<double> flatten() const {
    std::vector<double> p;
    for (const auto* h : {&audio, &text}) {
      p.insert(p.end(), h->weight.values().begin(), h->weight.values().end());
      p.insert(p.end(), h->bias.begin(), h->bias.end());
    }
    p.push_back(theta);
    return p;
  }
};

namespace detail {
inline ProjectionHead head_backward(const Matrix& input, const Matrix& pre, const Matrix& grad_out,
                                   std::size_t out_dim) {
  ProjectionHead g{Matrix(out_dim, input.cols()), std::vector<double>(out_dim, 0.0)};
  for (std::size_t n = 0; n < input.rows(); ++n) {
    auto xr = input.row(n);
    for (std::size_t d = 0; d < out_dim; ++d) {
      if (!(pre(n, d) > 0.0)) continue;
      const double go = grad_out(n, d);
      if (go == 0.0) continue;
      g.bias[d] += go;
      auto wr = g.weight.row(d);
      for (std::size_t c = 0; c < xr.size(); ++c) wr[c] += go * xr[c];
    }
  }
  return g;
}
}  // namespace detail

// Parameter gradients from embedding gradients. theta is left at zero; the
// loss supplies it.
inline ModelGradients backward(const TwoTowerModel& model, const ForwardCache& cache, const Matrix& grad_audio,
                               const Matrix& grad_text) {
  if (cache.revision != model.revision())
    throw InvalidState("backward: forward cache is stale (model parameters changed since forward)");
  const auto d = model.dims();
  if (cache.input_audio.cols() != d.audio || cache.input_text.cols() != d.text)
    throw InvalidState("backward: forward cache was produced by a model with different dims");
  if (grad_audio.rows() != cache.pre_audio.rows() || grad_audio.cols() != d.embed ||
      grad_text.rows() != cache.pre_text.rows() || grad_text.cols() != d.embed)
    throw InvalidArgument("backward: upstream gradient shape mismatch");
  ModelGradients g;
  g.audio = detail::head_backward(cache.input_audio, cache.pre_audio, grad_audio, d.embed);
  g.text = detail::head_backward(cache.input_text, cache.pre_text, grad_text, d.embed);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON envelope, every parameter stored as a C99 hex float so
// the round trip is bit-exact.

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t step = 0;
  double val_loss = 0.0;
  std::string config_digest;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  TwoTowerModel model;
  CheckpointMeta meta;
};

inline std::string to_hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

inline double from_hexfloat(const std::string& s) {
  if (s.empty()) throw CheckpointFormatError("empty hexfloat string");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw CheckpointFormatError("malformed hexfloat '" + s + "'");
  if (!std::isfinite(v)) throw CheckpointFormatError("non-finite parameter '" + s + "'");
  return v;
}

namespace detail {
inline nlohmann::ordered_json hex_array(std::span<const double> xs) {
  auto arr = nlohmann::ordered_json::array();
  for (double x : xs) arr.push_back(to_hexfloat(x));
  return arr;
}

inline std::vector<double> read_hex_array(const nlohmann::json& j, const char* what, std::size_t expected) {
  if (!j.is_array()) throw CheckpointFormatError(std::string(what) + " is not an array");
  if (j.size() != expected) {
    throw CheckpointFormatError(std::string(what) + " has " + std::to_string(j.size()) + " values, expected " +
                                std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& e : j) {
    if (!e.is_string()) throw CheckpointFormatError(std::string(what) + " contains a non-string entry");
    out.push_back(from_hexfloat(e.get<std::string>()));
  }
  return out;
}
}  // namespace detail

inline std::string checkpoint_to_string(const TwoTowerModel& model, const CheckpointMeta& meta) {
  const auto d = model.dims();
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["dims"] = {{"audio", d.audio}, {"text", d.text}, {"embed", d.embed}};
  j["weights_hexfloat"] = {{"audio", detail::hex_array(model.audio_head().weight.values())},
                           {"text", detail::hex_array(model.text_head().weight.values())}};
  j["biases_hexfloat"] = {{"audio", detail::hex_array(model.audio_head().bias)},
                          {"text", detail::hex_array(model.text_head().bias)}};
  j["theta_hexfloat"] = to_hexfloat(model.temperature().theta);
  j["step"] = meta.step;
  j["val_loss"] = meta.val_loss;
  j["config_digest"] = meta.config_digest;
  return j.dump(1) + "\n";
}

inline Checkpoint checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointFormatError(std::string("corrupt checkpoint payload: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("version")) throw CheckpointFormatError("checkpoint has no version field");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kCheckpointVersion)
      throw CheckpointFormatError("unsupported checkpoint version " + j["version"].dump());
    const auto& dj = j.at("dims");
    ModelDims d{dj.at("audio").get<std::size_t>(), dj.at("text").get<std::size_t>(),
                dj.at("embed").get<std::size_t>()};
    if (d.audio == 0 || d.text == 0 || d.embed == 0) throw CheckpointFormatError("checkpoint dims must be positive");
    const auto& w = j.at("weights_hexfloat");
    const auto& b = j.at("biases_hexfloat");
    ProjectionHead audio{Matrix(d.embed, d.audio, detail::read_hex_array(w.at("audio"), "audio weights", d.embed * d.audio)),
                         detail::read_hex_array(b.at("audio"), "audio biases", d.embed)};
    ProjectionHead text{Matrix(d.embed, d.text, detail::read_hex_array(w.at("text"), "text weights", d.embed * d.text)),
                        detail::read_hex_array(b.at("text"), "text biases", d.embed)};
    if (!j.at("theta_hexfloat").is_string()) throw CheckpointFormatError("theta_hexfloat is not a string");
    const double theta = from_hexfloat(j.at("theta_hexfloat").get<std::string>());
    Checkpoint cp{TwoTowerModel(std::move(audio), std::move(text), TemperatureParam{theta}), {}};
    cp.meta.step = j.at("step").get<std::uint64_t>();
    if (!j.at("val_loss").is_number()) throw CheckpointFormatError("val_loss is not a number");
    cp.meta.val_loss = j.at("val_loss").get<double>();
    cp.meta.config_digest = j.at("config_digest").get<std::string>();
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointFormatError(std::string("corrupt checkpoint payload: ") + e.what());
  }
}

inline void save_checkpoint(const TwoTowerModel& model, const CheckpointMeta& meta, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << checkpoint_to_string(model, meta);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace rankclap

#endif  // RANKCLAP_MODEL_HPP_
