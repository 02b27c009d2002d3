#ifndef RANKCLAP_LOSSES_HPP_
#define RANKCLAP_LOSSES_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rankclap/errors.hpp"
#include "rankclap/labels.hpp"
#include "rankclap/numkit.hpp"

namespace rankclap {

// Temperature as tau = exp(theta), so every theta maps to a positive tau.
struct TemperatureParam {
  double theta = 0.0;

  double tau() const noexcept { return std::exp(theta); }
  static TemperatureParam from_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("temperature must be positive");
    return {std::log(tau)};
  }
};

struct LossResult {
  double loss = 0.0;
  Matrix grad_audio;
  Matrix grad_text;
  double grad_theta = 0.0;  // d loss / d theta
};

enum class LossKind { kRncCm, kSce, kSupCon };

inline std::string_view to_string(LossKind k) noexcept {
  switch (k) {
    case LossKind::kRncCm: return "rnc_cm";
    case LossKind::kSce: return "sce";
    case LossKind::kSupCon: return "supcon";
  }
  return "rnc_cm";
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "rnc_cm" || s == "rnc") return LossKind::kRncCm;
  if (s == "sce") return LossKind::kSce;
  if (s == "supcon") return LossKind::kSupCon;
  throw InvalidArgument("unknown loss kind '" + std::string(s) + "'");
}

struct LabelL2Distance {
  double operator()(const ValenceArousal& a, const ValenceArousal& b) const { return label_distance(a, b); }
};

// For anchor i and positive j, the ascending candidate indices k whose label
// is strictly farther from the anchor than the positive's.
class RankSets {
 public:
  RankSets() = default;
  explicit RankSets(std::size_t n) : n_(n), sets_(n * n) {}

  std::size_t size() const noexcept { return n_; }
  const std::vector<std::size_t>& at(std::size_t anchor, std::size_t positive) const {
    return sets_[anchor * n_ + positive];
  }
  std::vector<std::size_t>& at(std::size_t anchor, std::size_t positive) {
    return sets_[anchor * n_ + positive];
  }

  friend bool operator==(const RankSets&, const RankSets&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<std::size_t>> sets_;
};

template <class Distance = LabelL2Distance>
RankSets build_rank_sets(std::span<const ValenceArousal> labels_a, std::span<const ValenceArousal> labels_t,
                         Distance&& distance = {}) {
  if (labels_a.size() != labels_t.size())
    throw InvalidArgument("build_rank_sets: label arrays differ in length");
  const std::size_t n = labels_a.size();
  RankSets sets(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) d[k] = distance(labels_a[i], labels_t[k]);
    for (std::size_t j = 0; j < n; ++j) {
      auto& s = sets.at(i, j);
      for (std::size_t k = 0; k < n; ++k)
        if (d[k] > d[j]) s.push_back(k);
    }
  }
  return sets;
}

namespace detail {

// Cosine logits L = sim / tau together with what the backward pass needs.
struct CosineLogits {
  Matrix unit_a;
  Matrix unit_t;
  std::vector<double> norm_a;
  std::vector<double> norm_t;
  Matrix sim;
  Matrix logits;
  double tau = 1.0;
};

inline CosineLogits cosine_logits(const Matrix& e_a, const Matrix& e_t, const TemperatureParam& temp,
                                  std::string_view who) {
  if (e_a.rows() != e_t.rows() || e_a.cols() != e_t.cols()) {
    throw InvalidArgument(std::string(who) + ": embedding shapes differ (" + std::to_string(e_a.rows()) + "x" +
                          std::to_string(e_a.cols()) + " vs " + std::to_string(e_t.rows()) + "x" +
                          std::to_string(e_t.cols()) + ")");
  }
  if (!std::isfinite(temp.theta)) throw InvalidArgument(std::string(who) + ": non-finite temperature");
  CosineLogits c;
  c.norm_a = row_norms(e_a);
  c.norm_t = row_norms(e_t);
  require_nondegenerate(c.norm_a, who);
  require_nondegenerate(c.norm_t, who);
  c.unit_a = e_a;
  c.unit_t = e_t;
  for (std::size_t i = 0; i < e_a.rows(); ++i) {
    for (auto& v : c.unit_a.row(i)) v /= c.norm_a[i];
    for (auto& v : c.unit_t.row(i)) v /= c.norm_t[i];
  }
  const std::size_t n = e_a.rows();
  c.tau = temp.tau();
  c.sim = Matrix(n, n);
  c.logits = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      c.sim(i, k) = dot(c.unit_a.row(i), c.unit_t.row(k));
      c.logits(i, k) = c.sim(i, k) / c.tau;
    }
  }
  return c;
}

// Chain rule from dLoss/dLogits through L = cos(a_i, t_k) / exp(theta).
inline LossResult backprop_logits(const CosineLogits& c, const Matrix& grad_logits, double loss) {
  const std::size_t n = c.sim.rows();
  const std::size_t dim = c.unit_a.cols();
  LossResult r;
  r.loss = loss;
  r.grad_audio = Matrix(n, dim);
  r.grad_text = Matrix(n, dim);
  double g_theta = 0.0;
  Matrix g_sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      g_theta -= grad_logits(i, k) * c.logits(i, k);
      g_sim(i, k) = grad_logits(i, k) / c.tau;
    }
  }
  r.grad_theta = g_theta;
  // d cos(a, t) / d a = (t_hat - cos * a_hat) / |a|
  for (std::size_t i = 0; i < n; ++i) {
    auto ga = r.grad_audio.row(i);
    double radial = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double g = g_sim(i, k);
      if (g == 0.0) continue;
      radial += g * c.sim(i, k);
      auto tk = c.unit_t.row(k);
      for (std::size_t d = 0; d < dim; ++d) ga[d] += g * tk[d];
    }
    auto ai = c.unit_a.row(i);
    for (std::size_t d = 0; d < dim; ++d) ga[d] = (ga[d] - radial * ai[d]) / c.norm_a[i];
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto gt = r.grad_text.row(k);
    double radial = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = g_sim(i, k);
      if (g == 0.0) continue;
      radial += g * c.sim(i, k);
      auto ai = c.unit_a.row(i);
      for (std::size_t d = 0; d < dim; ++d) gt[d] += g * ai[d];
    }
    auto tk = c.unit_t.row(k);
    for (std::size_t d = 0; d < dim; ++d) gt[d] = (gt[d] - radial * tk[d]) / c.norm_t[k];
  }
  return r;
}

// One anchor of the ranked contrastive objective. Candidates are ranked by
// label distance; positive j is contrasted against itself plus every
// candidate strictly farther than j. Returns the summed -log likelihood over
// all positives and adds weight * dSum/dLogit into grad.
//
// Sorting once per anchor gives O(N log N): with tie groups in ascending
// distance, the denominator of j is logit_j plus a suffix log-sum-exp, and
// the gradient a candidate k receives from closer positives is
// exp(logit_k + W), W being a prefix log-sum-exp of -lse_j.
// Order-preserving map from a non-NaN double to an unsigned key.
inline std::uint64_t sort_key(double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  return (bits >> 63) != 0 ? ~bits : bits | (std::uint64_t{1} << 63);
}

// Stable LSD radix sort of (value, index) pairs by value, 11 bits per pass.
// Passes over a digit that all keys share are skipped.
inline void radix_sort_pairs(std::vector<std::pair<double, std::size_t>>& items,
                             std::vector<std::pair<double, std::size_t>>& scratch, std::vector<std::uint64_t>& keys,
                             std::vector<std::uint64_t>& key_scratch, std::vector<std::size_t>& count) {
  constexpr unsigned kBits = 11;
  constexpr std::size_t kBuckets = std::size_t{1} << kBits;
  const std::size_t n = items.size();
  keys.resize(n);
  key_scratch.resize(n);
  scratch.resize(n);
  for (std::size_t k = 0; k < n; ++k) keys[k] = sort_key(items[k].first);
  for (unsigned shift = 0; shift < 64; shift += kBits) {
    count.assign(kBuckets + 1, 0);
    for (std::size_t k = 0; k < n; ++k) ++count[((keys[k] >> shift) & (kBuckets - 1)) + 1];
    if (n == 0 || count[((keys[0] >> shift) & (kBuckets - 1)) + 1] == n) continue;
    for (std::size_t b = 1; b <= kBuckets; ++b) count[b] += count[b - 1];
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t dst = count[(keys[k] >> shift) & (kBuckets - 1)]++;
      scratch[dst] = items[k];
      key_scratch[dst] = keys[k];
    }
    items.swap(scratch);
    keys.swap(key_scratch);
  }
}

// Scratch buffers reused across anchors.
struct AnchorWorkspace {
  std::vector<std::pair<double, std::size_t>> sorted;
  std::vector<std::pair<double, std::size_t>> sort_scratch;
  std::vector<std::uint64_t> keys;
  std::vector<std::uint64_t> key_scratch;
  std::vector<std::size_t> count;
  std::vector<std::size_t> group_start;
  std::vector<std::size_t> group_of;
  std::vector<double> value;
  std::vector<double> farther;
};

// Logits span at most 2 / tau. Below this span every exp(logit - max) stays a
// normal double, so sums can be taken in the linear domain.
inline constexpr double kLinearDomainSpan = 600.0;

template <class Logit, class Grad>
double ranked_anchor(std::span<const double> dist, Logit&& logit, Grad&& grad, double weight, double logit_span,
                     AnchorWorkspace& ws) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t n = dist.size();
  ws.sorted.resize(n);
  for (std::size_t k = 0; k < n; ++k) ws.sorted[k] = {dist[k], k};
  radix_sort_pairs(ws.sorted, ws.sort_scratch, ws.keys, ws.key_scratch, ws.count);

  ws.group_of.resize(n);
  ws.group_start.clear();
  for (std::size_t p = 0; p < n; ++p) {
    if (p == 0 || ws.sorted[p].first > ws.sorted[p - 1].first) ws.group_start.push_back(p);
    ws.group_of[ws.sorted[p].second] = ws.group_start.size() - 1;
  }
  const std::size_t n_groups = ws.group_start.size();
  ws.group_start.push_back(n);
  ws.farther.resize(n_groups);
  ws.value.resize(n);
  auto members = [&](std::size_t g) {
    return std::span(ws.sorted).subspan(ws.group_start[g], ws.group_start[g + 1] - ws.group_start[g]);
  };

  double total = 0.0;
  if (logit_span <= kLinearDomainSpan) {
    // value[k] = exp(logit_k - m); farther[g] = sum of value over later groups.
    double m = kNegInf;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, logit(k));
    for (std::size_t k = 0; k < n; ++k) ws.value[k] = std::exp(logit(k) - m);
    double acc = 0.0;
    for (std::size_t g = n_groups; g-- > 0;) {
      ws.farther[g] = acc;
      for (const auto& [d, k] : members(g)) acc += ws.value[k];
    }
    // closer: sum over positives j in earlier groups of 1 / denom_j, so that
    // k receives value_k * closer from them.
    double closer = 0.0;
    for (std::size_t g = 0; g < n_groups; ++g) {
      double next = closer;
      for (const auto& [d, k] : members(g)) {
        const double v = ws.value[k], s = ws.farther[g], denom = v + s;
        total += std::log1p(s / v);
        grad(k) += weight * (v * closer - s / denom);
        next += 1.0 / denom;
      }
      closer = next;
    }
    return total;
  }

  // Log-domain path for very small temperatures.
  double acc = kNegInf;
  for (std::size_t g = n_groups; g-- > 0;) {
    ws.farther[g] = acc;
    for (const auto& [d, k] : members(g)) acc = log_add_exp(acc, logit(k));
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double lj = logit(j);
    ws.value[j] = log_add_exp(lj, ws.farther[ws.group_of[j]]);
    total += ws.value[j] - lj;
  }
  acc = kNegInf;
  for (std::size_t g = 0; g < n_groups; ++g) {
    const double closer = acc;
    for (const auto& [d, k] : members(g)) {
      const double lk = logit(k);
      double gk = std::exp(lk - ws.value[k]) - 1.0;
      if (closer != kNegInf) gk += std::exp(lk + closer);
      grad(k) += weight * gk;
    }
    for (const auto& [d, k] : members(g)) acc = log_add_exp(acc, -ws.value[k]);
  }
  return total;
}

inline void require_same_size(std::size_t n, std::size_t m, std::string_view who, std::string_view what) {
  if (n != m)
    throw InvalidArgument(std::string(who) + ": " + std::string(what) + " has " + std::to_string(m) +
                          " entries, expected " + std::to_string(n));
}

}  // namespace detail

struct RncOptions {
  // Average the audio-anchored objective with its text-anchored mirror.
  bool symmetric = false;
};

// Cross-modal Rank-N-Contrast:
//   (1/N^2) sum_i sum_j -log( exp(L_ij) / sum_{k in {j} u S(i,j)} exp(L_ik) )
// with L = cos / tau and S(i,j) the strictly-farther candidates of (i, j).
template <class Distance = LabelL2Distance>
LossResult rnc_cm_loss(const Matrix& e_a, const Matrix& e_t, std::span<const ValenceArousal> labels_a,
                       std::span<const ValenceArousal> labels_t, const TemperatureParam& temp,
                       RncOptions opts = {}, Distance&& distance = {}) {
  const std::size_t n = e_a.rows();
  if (n < 1) throw InvalidArgument("rnc_cm_loss: empty batch");
  detail::require_same_size(n, labels_a.size(), "rnc_cm_loss", "labels_a");
  detail::require_same_size(n, labels_t.size(), "rnc_cm_loss", "labels_t");
  const auto c = detail::cosine_logits(e_a, e_t, temp, "rnc_cm_loss");

  Matrix grad(n, n);
  std::vector<double> dist(n);
  detail::AnchorWorkspace ws;
  const double span = 2.0 / c.tau;
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  const double direction_weight = opts.symmetric ? 0.5 : 1.0;
  const double w = direction_weight * inv_n2;

  double audio_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) dist[k] = distance(labels_a[i], labels_t[k]);
    audio_sum += detail::ranked_anchor(
        dist, [&](std::size_t k) { return c.logits(i, k); }, [&](std::size_t k) -> double& { return grad(i, k); },
        w, span, ws);
  }
  double loss = audio_sum * inv_n2;

  if (opts.symmetric) {
    double text_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) dist[k] = distance(labels_t[j], labels_a[k]);
      text_sum += detail::ranked_anchor(
          dist, [&](std::size_t k) { return c.logits(k, j); }, [&](std::size_t k) -> double& { return grad(k, j); },
          w, span, ws);
    }
    loss = 0.5 * (audio_sum + text_sum) * inv_n2;
  }
  return detail::backprop_logits(c, grad, loss);
}

// CLIP-style symmetric cross-entropy with diagonal targets; both directions
// weighted 1/2.
inline LossResult sce_loss(const Matrix& e_a, const Matrix& e_t, const TemperatureParam& temp) {
  const std::size_t n = e_a.rows();
  if (n < 2) throw InvalidArgument("sce_loss: batch must have at least 2 pairs");
  const auto c = detail::cosine_logits(e_a, e_t, temp, "sce_loss");
  Matrix grad(n, n);
  const double w = 0.5 / static_cast<double>(n);
  std::vector<double> buf(n);
  double row_sum = 0.0, col_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = c.logits(i, k);
    const double lse = logsumexp(buf);
    row_sum += lse - c.logits(i, i);
    for (std::size_t k = 0; k < n; ++k) grad(i, k) += w * std::exp(buf[k] - lse);
    grad(i, i) -= w;
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = c.logits(k, j);
    const double lse = logsumexp(buf);
    col_sum += lse - c.logits(j, j);
    for (std::size_t k = 0; k < n; ++k) grad(k, j) += w * std::exp(buf[k] - lse);
    grad(j, j) -= w;
  }
  const double loss = 0.5 * (row_sum + col_sum) / static_cast<double>(n);
  return detail::backprop_logits(c, grad, loss);
}

// Cross-modal supervised contrastive loss: an audio anchor's positives are
// the text candidates sharing its category (and vice versa); the two
// directions are averaged.
inline LossResult supcon_cm_loss(const Matrix& e_a, const Matrix& e_t, std::span<const int> categories_a,
                                 std::span<const int> categories_t, const TemperatureParam& temp) {
  const std::size_t n = e_a.rows();
  if (n < 2) throw InvalidArgument("supcon_cm_loss: batch must have at least 2 pairs");
  detail::require_same_size(n, categories_a.size(), "supcon_cm_loss", "categories_a");
  detail::require_same_size(n, categories_t.size(), "supcon_cm_loss", "categories_t");
  const auto c = detail::cosine_logits(e_a, e_t, temp, "supcon_cm_loss");
  Matrix grad(n, n);
  const double w = 0.5 / static_cast<double>(n);
  std::vector<double> buf(n);

  auto direction = [&](bool audio_anchor) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto logit = [&](std::size_t k) { return audio_anchor ? c.logits(i, k) : c.logits(k, i); };
      auto g = [&](std::size_t k) -> double& { return audio_anchor ? grad(i, k) : grad(k, i); };
      const int anchor_cat = audio_anchor ? categories_a[i] : categories_t[i];
      std::size_t n_pos = 0;
      double pos_sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        buf[k] = logit(k);
        const int cat = audio_anchor ? categories_t[k] : categories_a[k];
        if (cat == anchor_cat) {
          ++n_pos;
          pos_sum += buf[k];
        }
      }
      if (n_pos == 0) {
        throw InvalidArgument(std::string("supcon_cm_loss: ") + (audio_anchor ? "audio" : "text") + " anchor " +
                              std::to_string(i) + " has no same-category candidate");
      }
      const double lse = logsumexp(buf);
      const double inv_pos = 1.0 / static_cast<double>(n_pos);
      sum += lse - pos_sum * inv_pos;
      for (std::size_t k = 0; k < n; ++k) {
        const int cat = audio_anchor ? categories_t[k] : categories_a[k];
        g(k) += w * (std::exp(buf[k] - lse) - (cat == anchor_cat ? inv_pos : 0.0));
      }
    }
    return sum;
  };
  const double audio_sum = direction(true);
  const double text_sum = direction(false);
  const double loss = 0.5 * (audio_sum + text_sum) / static_cast<double>(n);
  return detail::backprop_logits(c, grad, loss);
}

inline LossResult supcon_cm_loss(const Matrix& e_a, const Matrix& e_t, std::span<const int> categories,
                                 const TemperatureParam& temp) {
  return supcon_cm_loss(e_a, e_t, categories, categories, temp);
}

// Inputs for any of the three losses; labels feed RNC, categories feed SupCon.
struct LossBatch {
  std::span<const ValenceArousal> labels;
  std::span<const int> categories;
};

inline LossResult evaluate_loss(LossKind kind, const Matrix& e_a, const Matrix& e_t, const LossBatch& batch,
                                const TemperatureParam& temp, RncOptions rnc = {}) {
  switch (kind) {
    case LossKind::kRncCm: return rnc_cm_loss(e_a, e_t, batch.labels, batch.labels, temp, rnc);
    case LossKind::kSce: return sce_loss(e_a, e_t, temp);
    case LossKind::kSupCon: return supcon_cm_loss(e_a, e_t, batch.categories, temp);
  }
  throw InvalidArgument("evaluate_loss: unknown loss kind");
}

// Central differences at h = 1e-5 carry ~1e-11 rounding noise, so a 1e-6
// relative bound is only meaningful for gradients of at least this size;
// smaller ones are compared in absolute terms against it.
inline constexpr double kGradientScaleFloor = 1e-5;

// max |a - b| / max(|a|_inf, |b|_inf) for one gradient block. A block whose
// analytic gradient is exactly zero (e.g. embeddings of width 1, where every
// cosine is +-1) is measured against fallback_scale instead, so difference
// noise is not divided by itself.
inline double blockwise_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                       double fallback_scale = 0.0) {
  double diff = 0.0, scale = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    all_zero = all_zero && analytic[i] == 0.0;
  }
  if (all_zero) scale = fallback_scale;
  return diff / std::max(scale, kGradientScaleFloor);
}

// Analytic vs central-difference gradients on a random batch. The error is
// reported per block (audio embeddings, text embeddings, theta) relative to
// that block's largest entry, and the worst block is returned.
inline double verify_gradients(LossKind kind, std::size_t n, std::size_t dim, std::uint64_t seed,
                               RncOptions rnc = {}) {
  if (n < 2 || n > 16 || dim < 1 || dim > 8)
    throw InvalidArgument("verify_gradients: requires 2 <= N <= 16 and 1 <= D <= 8");
  auto rng = RngStream::derived(seed, "verify_gradients", static_cast<std::uint64_t>(kind));
  Matrix e_a(n, dim), e_t(n, dim);
  for (auto& v : e_a.values()) v = rng.normal();
  for (auto& v : e_t.values()) v = rng.normal();
  std::vector<ValenceArousal> labels;
  std::vector<int> cats;
  for (std::size_t i = 0; i < n; ++i) {
    labels.emplace_back(rng.uniform(1.0, 7.0), rng.uniform(1.0, 7.0));
    cats.push_back(static_cast<int>(i % 2));
  }
  rng.shuffle(std::span<int>(cats));
  const TemperatureParam temp{rng.uniform(-0.5, 0.5)};
  const LossBatch batch{labels, cats};

  const auto analytic = evaluate_loss(kind, e_a, e_t, batch, temp, rnc);

  const std::size_t na = e_a.size();
  std::vector<double> x;
  x.insert(x.end(), e_a.values().begin(), e_a.values().end());
  x.insert(x.end(), e_t.values().begin(), e_t.values().end());
  x.push_back(temp.theta);
  auto f = [&](const std::vector<double>& p) {
    Matrix a(n, dim, std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(na)));
    Matrix t(n, dim, std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(na), p.end() - 1));
    return evaluate_loss(kind, a, t, batch, TemperatureParam{p.back()}, rnc).loss;
  };
  const auto numeric = finite_diff_grad(f, x, 1e-5);
  const std::span<const double> num(numeric);

  const double theta_a = analytic.grad_theta;
  double global = std::abs(theta_a);
  for (double g : analytic.grad_audio.values()) global = std::max(global, std::abs(g));
  for (double g : analytic.grad_text.values()) global = std::max(global, std::abs(g));
  double worst = blockwise_relative_error(analytic.grad_audio.values(), num.subspan(0, na), global);
  worst = std::max(worst, blockwise_relative_error(analytic.grad_text.values(), num.subspan(na, na), global));
  worst = std::max(worst,
                   blockwise_relative_error(std::span<const double>(&theta_a, 1), num.subspan(2 * na, 1), global));
  return worst;
}

}  // namespace rankclap

#endif  // RANKCLAP_LOSSES_HPP_
