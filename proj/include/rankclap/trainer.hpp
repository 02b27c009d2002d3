#ifndef RANKCLAP_TRAINER_HPP_
#define RANKCLAP_TRAINER_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankclap/dataset.hpp"
#include "rankclap/errors.hpp"
#include "rankclap/losses.hpp"
#include "rankclap/model.hpp"
#include "rankclap/numkit.hpp"

namespace rankclap {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamOptions& opt) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("adam_step: shape mismatch (params " + std::to_string(params.size()) + ", grads " +
                          std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()) + ")");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

struct TrainConfig {
  LossKind loss_kind = LossKind::kRncCm;
  bool symmetric_rnc = false;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // 0 validates once per epoch.
  std::size_t validation_every = 0;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("TrainConfig: learning_rate must be finite and >= 0");
    if (batch_size < 2) throw InvalidArgument("TrainConfig: batch_size must be >= 2");
    if (epochs < 1) throw InvalidArgument("TrainConfig: epochs must be >= 1");
    if (!(clip_norm >= 0.0)) throw InvalidArgument("TrainConfig: clip_norm must be >= 0");
  }

  AdamOptions adam() const { return {learning_rate, beta1, beta2, epsilon}; }

  nlohmann::ordered_json to_json() const {
    return {{"loss", to_string(loss_kind)}, {"symmetric_rnc", symmetric_rnc}, {"learning_rate", learning_rate},
            {"batch_size", batch_size},     {"epochs", epochs},               {"seed", seed},
            {"beta1", beta1},               {"beta2", beta2},                 {"epsilon", epsilon},
            {"validation_every", validation_every}, {"clip_norm", clip_norm}};
  }
};

inline std::string config_digest(const TrainConfig& cfg, const ModelDims& dims, std::string_view context = {}) {
  nlohmann::ordered_json j = {{"train", cfg.to_json()},
                              {"dims", {dims.audio, dims.text, dims.embed}},
                              {"init", kInitScheme},
                              {"context", context}};
  return hex64(fnv1a64(j.dump()));
}

struct StepRecord {
  std::uint64_t step;
  double train_loss;
  double tau;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct ValidationRecord {
  std::uint64_t step;
  double val_loss;
  friend bool operator==(const ValidationRecord&, const ValidationRecord&) = default;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<ValidationRecord> validations;
  std::size_t skipped_batches = 0;
  std::size_t dropped_rows = 0;

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

inline void write_step_csv(const TrainLog& log, std::ostream& out) {
  out << "step,train_loss,tau\n";
  for (const auto& r : log.steps)
    out << r.step << ',' << detail::csv_double(r.train_loss) << ',' << detail::csv_double(r.tau) << '\n';
}

inline void write_validation_csv(const TrainLog& log, std::ostream& out) {
  out << "step,val_loss\n";
  for (const auto& r : log.validations) out << r.step << ',' << detail::csv_double(r.val_loss) << '\n';
}

struct BatchEvaluation {
  double loss = 0.0;
  std::vector<double> grads;  // flat, TwoTowerModel::parameters() layout; empty unless requested
  std::size_t rows_used = 0;
  std::size_t rows_dropped = 0;
};

// Loss (and optionally the flat parameter gradient) of one mini-batch.
// Pairs whose projection is all-zero in either tower are dropped: they have no
// defined cosine and receive no gradient through the ReLU. Returns nullopt if
// fewer than two pairs remain.
inline std::optional<BatchEvaluation> evaluate_batch(const TwoTowerModel& model, const Dataset& ds,
                                                     std::span<const std::size_t> indices, LossKind kind,
                                                     RncOptions rnc, bool with_grad) {
  if (indices.size() < 2) return std::nullopt;
  Matrix xa(indices.size(), ds.audio_dim), xt(indices.size(), ds.text_dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& it = ds.items[indices[r]];
    std::copy(it.audio_features.begin(), it.audio_features.end(), xa.row(r).begin());
    std::copy(it.text_features.begin(), it.text_features.end(), xt.row(r).begin());
  }
  auto fwd = forward(model, xa, xt);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (l2_norm(fwd.audio.row(r)) >= kDegenerateNormThreshold && l2_norm(fwd.text.row(r)) >= kDegenerateNormThreshold)
      keep.push_back(r);
  }
  BatchEvaluation out;
  out.rows_dropped = indices.size() - keep.size();
  if (keep.size() < 2) return std::nullopt;

  std::vector<ValenceArousal> labels;
  std::vector<int> cats;
  labels.reserve(keep.size());
  for (auto r : keep) {
    const auto& it = ds.items[indices[r]];
    labels.push_back(it.label);
    if (kind == LossKind::kSupCon) {
      if (!it.category)
        throw InvalidArgument("supcon loss needs categories; item " + std::to_string(indices[r]) + " has none");
      cats.push_back(*it.category);
    }
  }
  const Matrix ea = fwd.audio.gather_rows(keep);
  const Matrix et = fwd.text.gather_rows(keep);
  auto res = evaluate_loss(kind, ea, et, {labels, cats}, model.temperature(), rnc);
  out.loss = res.loss;
  out.rows_used = keep.size();
  if (with_grad) {
    const std::size_t dim = ea.cols();
    Matrix ga(indices.size(), dim), gt(indices.size(), dim);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      auto sa = res.grad_audio.row(r);
      auto st = res.grad_text.row(r);
      std::copy(sa.begin(), sa.end(), ga.row(keep[r]).begin());
      std::copy(st.begin(), st.end(), gt.row(keep[r]).begin());
    }
    auto g = backward(model, fwd.cache, ga, gt);
    g.theta = res.grad_theta;
    out.grads = g.flatten();
  }
  return out;
}

// Mean loss over fixed, unshuffled batches; each batch weighted by the
// number of pairs it used.
inline double validation_loss(const TwoTowerModel& model, const Dataset& ds, std::size_t batch_size, LossKind kind,
                              RncOptions rnc = {}) {
  double weighted = 0.0;
  std::size_t used = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(ds.size(), start + batch_size); ++i) idx.push_back(i);
    auto ev = evaluate_batch(model, ds, idx, kind, rnc, false);
    if (!ev) continue;
    weighted += ev->loss * static_cast<double>(ev->rows_used);
    used += ev->rows_used;
  }
  if (used == 0) throw TrainingError("validation_loss: no usable batch in validation set");
  return weighted / static_cast<double>(used);
}

struct TrainResult {
  Checkpoint best;
  TrainLog log;
  TwoTowerModel final_model;
};

// Mini-batch Adam training. The model passed in is the starting point (step
// 0) and is itself a checkpoint candidate. Validations happen at step 0, then
// every validation_every steps or at each epoch end; the lowest validation
// loss wins, ties going to the earliest step.
inline TrainResult train(TwoTowerModel model, const Dataset& train_ds, const Dataset& dev_ds,
                         const TrainConfig& cfg, std::string_view digest_context = {}) {
  cfg.validate();
  if (train_ds.size() == 0 || dev_ds.size() == 0) throw InvalidArgument("train: datasets must be nonempty");
  const auto dims = model.dims();
  if (train_ds.audio_dim != dims.audio || train_ds.text_dim != dims.text || dev_ds.audio_dim != dims.audio ||
      dev_ds.text_dim != dims.text)
    throw InvalidArgument("train: dataset dims do not match model dims");

  const RncOptions rnc{cfg.symmetric_rnc};
  const std::string digest = config_digest(cfg, dims, digest_context);
  TrainResult result;
  auto& log = result.log;

  std::uint64_t step = 0;
  auto validate_now = [&]() {
    const double vl = validation_loss(model, dev_ds, cfg.batch_size, cfg.loss_kind, rnc);
    if (!std::isfinite(vl))
      throw TrainingError("non-finite validation loss at step " + std::to_string(step) +
                          ", tau=" + std::to_string(model.temperature().tau()));
    log.validations.push_back({step, vl});
    if (log.validations.size() == 1 || vl < result.best.meta.val_loss) {
      result.best.model = model;
      result.best.meta = {step, vl, digest};
    }
  };
  validate_now();

  AdamState adam(model.parameter_count());
  const AdamOptions adam_opt = cfg.adam();
  std::vector<std::size_t> order(train_ds.size());
  std::vector<std::size_t> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto rng = RngStream::derived(cfg.seed, "trainer/shuffle", epoch);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
      if (batch.size() < 2) {
        ++log.skipped_batches;
        continue;
      }
      auto ev = evaluate_batch(model, train_ds, batch, cfg.loss_kind, rnc, true);
      if (!ev) {
        ++log.skipped_batches;
        continue;
      }
      log.dropped_rows += ev->rows_dropped;
      const double tau = model.temperature().tau();
      if (!std::isfinite(ev->loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at step " << step + 1 << " (tau=" << tau << ", batch indices:";
        for (auto b : batch) msg << ' ' << b;
        msg << ')';
        throw TrainingError(msg.str());
      }
      if (cfg.clip_norm > 0.0) {
        const double norm = l2_norm(ev->grads);
        if (norm > cfg.clip_norm)
          for (auto& g : ev->grads) g *= cfg.clip_norm / norm;
      }
      auto params = model.parameters();
      adam_step(params, ev->grads, adam, adam_opt);
      model.set_parameters(params);
      ++step;
      log.steps.push_back({step, ev->loss, tau});
      if (cfg.validation_every > 0 && step % cfg.validation_every == 0) validate_now();
    }
    if (cfg.validation_every == 0) validate_now();
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace rankclap

#endif  // RANKCLAP_TRAINER_HPP_
