#ifndef RANKCLAP_EVAL_HPP_
#define RANKCLAP_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "rankclap/dataset.hpp"
#include "rankclap/errors.hpp"
#include "rankclap/labels.hpp"
#include "rankclap/model.hpp"
#include "rankclap/numkit.hpp"

namespace rankclap {

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - y[d];
    s += diff * diff;
  }
  return s;
}

namespace detail {
inline double median_inplace(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Fixed argument order for symmetric statistics, so f(X, Y) and f(Y, X)
// evaluate the same floating-point expression.
inline bool canonical_first(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  const auto xv = x.values();
  const auto yv = y.values();
  return !std::lexicographical_compare(yv.begin(), yv.end(), xv.begin(), xv.end());
}
}  // namespace detail

// Median of all pairwise Euclidean distances in the pooled sample.
inline double median_pairwise_distance(const Matrix& x, const Matrix& y) {
  const std::size_t n = x.rows(), m = y.rows();
  auto pooled_row = [&](std::size_t i) { return i < n ? x.row(i) : y.row(i - n); };
  std::vector<double> d;
  d.reserve((n + m) * (n + m - 1) / 2);
  for (std::size_t i = 0; i < n + m; ++i)
    for (std::size_t j = i + 1; j < n + m; ++j) d.push_back(std::sqrt(squared_distance(pooled_row(i), pooled_row(j))));
  if (d.empty()) return 0.0;
  return detail::median_inplace(d);
}

// Biased MMD estimate with the Gaussian RBF kernel
// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)); returns sqrt(max(0, MMD^2)).
// sigma defaults to the median pooled pairwise distance.
inline double mmd_rbf(const Matrix& x, const Matrix& y, std::optional<double> bandwidth = std::nullopt) {
  if (x.rows() < 2 || y.rows() < 2) throw InvalidArgument("mmd_rbf: both samples need at least 2 rows");
  if (x.cols() != y.cols()) throw InvalidArgument("mmd_rbf: dimension mismatch");
  if (!detail::canonical_first(x, y)) return mmd_rbf(y, x, bandwidth);
  double sigma = bandwidth ? *bandwidth : median_pairwise_distance(x, y);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    if (bandwidth) throw InvalidArgument("mmd_rbf: bandwidth must be positive and finite");
    sigma = 0.0;
  }
  sigma = std::max(sigma, 1e-12);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto mean_kernel = [&](const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < b.rows(); ++j) row += std::exp(-squared_distance(a.row(i), b.row(j)) * inv);
      s += row;
    }
    return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };
  const double kxx = mean_kernel(x, x);
  const double kyy = mean_kernel(y, y);
  const double kxy = mean_kernel(x, y);
  return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy));
}

namespace detail {
// Quantile of a sorted sample at level u, linear between order statistics
// placed at (i + 0.5) / n.
inline double sorted_quantile(std::span<const double> sorted, double u) {
  const double pos = std::clamp(u * static_cast<double>(sorted.size()) - 0.5, 0.0,
                                static_cast<double>(sorted.size() - 1));
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double wasserstein2_1d_sorted(std::span<const double> a, std::span<const double> b) {
  const std::size_t big = std::max(a.size(), b.size());
  double s = 0.0;
  if (a.size() == b.size()) {
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  } else {
    for (std::size_t i = 0; i < big; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(big);
      const double diff = sorted_quantile(a, u) - sorted_quantile(b, u);
      s += diff * diff;
    }
  }
  return std::sqrt(s / static_cast<double>(big));
}
}  // namespace detail

// 1-D 2-Wasserstein distance between two empirical samples.
inline double wasserstein2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("wasserstein2_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return detail::wasserstein2_1d_sorted(a, b);
}

// Mean over seeded random unit directions of the 1-D 2-Wasserstein distance
// between the projected samples.
inline double sliced_wasserstein(const Matrix& x, const Matrix& y, std::size_t n_projections, std::uint64_t seed) {
  if (x.rows() < 1 || y.rows() < 1) throw InvalidArgument("sliced_wasserstein: empty sample");
  if (x.cols() != y.cols()) throw InvalidArgument("sliced_wasserstein: dimension mismatch");
  if (n_projections < 1) throw InvalidArgument("sliced_wasserstein: need at least one projection");
  const std::size_t dim = x.cols();
  auto rng = RngStream::derived(seed, "sliced_wasserstein", dim);
  std::vector<double> dir(dim), px(x.rows()), py(y.rows());
  double total = 0.0;
  for (std::size_t p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    do {
      for (auto& v : dir) v = rng.normal();
      norm = l2_norm(dir);
    } while (norm < 1e-12);
    for (auto& v : dir) v /= norm;
    for (std::size_t i = 0; i < x.rows(); ++i) px[i] = dot(x.row(i), dir);
    for (std::size_t i = 0; i < y.rows(); ++i) py[i] = dot(y.row(i), dir);
    std::sort(px.begin(), px.end());
    std::sort(py.begin(), py.end());
    total += detail::wasserstein2_1d_sorted(px, py);
  }
  return total / static_cast<double>(n_projections);
}

// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
// O(n^3)). Returns assignment[row] = column.
inline std::vector<std::size_t> min_cost_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw InvalidArgument("min_cost_assignment: cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials over rows (u) and columns (v); p[j] = row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

// Exact 2-Wasserstein distance between equal-size uniform point clouds.
inline double exact_wasserstein2(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.rows() < 1) throw InvalidArgument("exact_wasserstein2: needs n == m >= 1");
  if (x.rows() > 64) throw InvalidArgument("exact_wasserstein2: limited to n <= 64");
  if (x.cols() != y.cols()) throw InvalidArgument("exact_wasserstein2: dimension mismatch");
  const std::size_t n = x.rows();
  Matrix cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = squared_distance(x.row(i), y.row(j));
  const auto a = min_cost_assignment(cost);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += cost(i, a[i]);
  return std::sqrt(s / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Kendall's tau-b

struct KendallCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t ties_x = 0;     // tied in x only
  std::int64_t ties_y = 0;     // tied in y only
  std::int64_t ties_both = 0;  // tied in both; excluded from every term

  friend bool operator==(const KendallCounts&, const KendallCounts&) = default;
};

namespace detail {
// Merge sort counting strict inversions.
inline std::int64_t count_inversions(std::span<double> v, std::span<double> tmp) {
  const std::size_t n = v.size();
  if (n < 2) return 0;
  const std::size_t mid = n / 2;
  std::int64_t inv = count_inversions(v.subspan(0, mid), tmp.subspan(0, mid)) +
                     count_inversions(v.subspan(mid), tmp.subspan(mid));
  std::size_t i = 0, j = mid, k = 0;
  while (i < mid && j < n) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < n) tmp[k++] = v[j++];
  std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(n), v.begin());
  return inv;
}

template <class It, class Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
  std::int64_t total = 0;
  while (first != last) {
    It run = first;
    std::int64_t len = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++len;
    }
    total += len * (len - 1) / 2;
    first = run;
  }
  return total;
}
}  // namespace detail

// Pair counts via Knight's O(n log n) method.
inline KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kendall: sequences differ in length");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {x[i], y[i]};
  std::sort(p.begin(), p.end());
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - (n > 0 ? 1 : 0)) / 2;
  const std::int64_t tx = detail::tied_pairs(p.begin(), p.end(), [](auto& a, auto& b) { return a.first == b.first; });
  const std::int64_t txy = detail::tied_pairs(p.begin(), p.end(), [](auto& a, auto& b) { return a == b; });
  std::vector<double> ys(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = p[i].second;
  const std::int64_t discordant = detail::count_inversions(ys, tmp);
  const std::int64_t ty = detail::tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });
  KendallCounts c;
  c.discordant = discordant;
  c.ties_both = txy;
  c.ties_x = tx - txy;
  c.ties_y = ty - txy;
  c.concordant = n0 - tx - ty + txy - discordant;
  return c;
}

inline double kendall_tau_b(const KendallCounts& c) {
  const std::int64_t cd = c.concordant + c.discordant;
  const std::int64_t den_x = cd + c.ties_x;
  const std::int64_t den_y = cd + c.ties_y;
  if (den_x == 0 || den_y == 0) throw UndefinedStatistic("kendall_tau_b: a sequence is constant");
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(den_x) * static_cast<double>(den_y));
}

inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("kendall_tau_b: need equal lengths >= 2");
  return kendall_tau_b(kendall_counts(x, y));
}

// ---------------------------------------------------------------------------
// Welch's unequal-variance t-test

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_tailed = 1.0;
};

struct SampleSummary {
  double mean = 0.0;
  double stddev = 0.0;  // n - 1 denominator; 0 for a single value
};

inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch_t_test: each sample needs at least 2 values");
  const auto sa = summarize(a);
  const auto sb = summarize(b);
  const double va = sa.stddev * sa.stddev / static_cast<double>(a.size());
  const double vb = sb.stddev * sb.stddev / static_cast<double>(b.size());
  if (va == 0.0 && vb == 0.0) throw UndefinedStatistic("welch_t_test: both samples have zero variance");
  WelchResult r;
  const double se2 = va + vb;
  r.t = (sa.mean - sb.mean) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t_distribution<double> dist(r.df);
  r.p_two_tailed = std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(r.t)));
  return r;
}

// ---------------------------------------------------------------------------
// Embedding-distribution alignment

struct AlignmentOptions {
  std::size_t n_projections = 128;
  // Compare unit-normalized embeddings (zero rows stay at the origin); the
  // training objectives only see directions.
  bool normalize = true;
};

struct AlignmentTrial {
  double mmd;
  double wasserstein;
};

struct AlignmentReport {
  std::vector<AlignmentTrial> trials;
  SampleSummary mmd;
  SampleSummary wasserstein;
  std::size_t n_trials = 0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  AlignmentOptions options;

  std::vector<double> mmd_values() const {
    std::vector<double> v;
    for (const auto& t : trials) v.push_back(t.mmd);
    return v;
  }
  std::vector<double> wasserstein_values() const {
    std::vector<double> v;
    for (const auto& t : trials) v.push_back(t.wasserstein);
    return v;
  }
};

// Paired index sets, one per trial, each drawn without replacement.
inline std::vector<std::vector<std::size_t>> alignment_sample_indices(std::size_t pool_size, std::size_t n_trials,
                                                                      std::size_t n_samples, std::uint64_t seed) {
  if (n_samples > pool_size)
    throw InvalidArgument("alignment_trials: n_samples " + std::to_string(n_samples) + " exceeds pool size " +
                          std::to_string(pool_size));
  std::vector<std::vector<std::size_t>> sets;
  for (std::size_t t = 0; t < n_trials; ++t) {
    auto rng = RngStream::derived(seed, "alignment/sample", t);
    sets.push_back(rng.sample_without_replacement(pool_size, n_samples));
  }
  return sets;
}

// Unit-normalizes each row; all-zero rows stay at the origin.
inline Matrix normalize_nonzero_rows(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double n = l2_norm(m.row(i));
    if (n < kDegenerateNormThreshold) continue;
    for (auto& v : m.row(i)) v /= n;
  }
  return m;
}

inline AlignmentReport alignment_trials_on(const Matrix& audio_pool, const Matrix& text_pool,
                                           const std::vector<std::vector<std::size_t>>& index_sets,
                                           std::uint64_t seed, AlignmentOptions opts = {}) {
  if (audio_pool.rows() != text_pool.rows() || audio_pool.cols() != text_pool.cols())
    throw InvalidArgument("alignment_trials: audio and text pools must have equal shapes");
  if (index_sets.empty()) throw InvalidArgument("alignment_trials: n_trials must be >= 1");
  AlignmentReport r;
  r.n_trials = index_sets.size();
  r.n_samples = index_sets.front().size();
  r.seed = seed;
  r.options = opts;
  const Matrix a_all = opts.normalize ? normalize_nonzero_rows(audio_pool) : audio_pool;
  const Matrix t_all = opts.normalize ? normalize_nonzero_rows(text_pool) : text_pool;
  for (std::size_t t = 0; t < index_sets.size(); ++t) {
    const Matrix a = a_all.gather_rows(index_sets[t]);
    const Matrix x = t_all.gather_rows(index_sets[t]);
    const std::uint64_t proj_seed = RngStream::derived(seed, "alignment/projections", t).next_u64();
    r.trials.push_back({mmd_rbf(a, x), sliced_wasserstein(a, x, opts.n_projections, proj_seed)});
  }
  const auto mv = r.mmd_values();
  const auto wv = r.wasserstein_values();
  r.mmd = summarize(mv);
  r.wasserstein = summarize(wv);
  return r;
}

inline AlignmentReport alignment_trials(const Matrix& audio_pool, const Matrix& text_pool, std::size_t n_trials,
                                        std::size_t n_samples, std::uint64_t seed, AlignmentOptions opts = {}) {
  if (n_trials < 1) throw InvalidArgument("alignment_trials: n_trials must be >= 1");
  return alignment_trials_on(audio_pool, text_pool,
                             alignment_sample_indices(audio_pool.rows(), n_trials, n_samples, seed), seed, opts);
}

// ---------------------------------------------------------------------------
// Cross-modal ordinality test

inline constexpr std::string_view kQueryOrder = "ascending_varied_attribute";

struct OrdinalityList {
  std::vector<ValenceArousal> queries;        // in processing order
  std::vector<std::size_t> retrieved;         // pool indices, distinct
  std::vector<double> query_values;           // varied attribute of each query
  std::vector<double> retrieved_values;       // same attribute of the retrieved item
  double tau = 0.0;
  bool tau_defined = true;
};

struct OrdinalityReport {
  OrdinalityMode mode = OrdinalityMode::kValence;
  std::vector<OrdinalityList> lists;
  SampleSummary tau;
  std::size_t pool_size = 0;
  std::size_t excluded_pool_items = 0;
  std::size_t degenerate_queries = 0;
  std::uint64_t seed = 0;

  std::vector<double> taus() const {
    std::vector<double> v;
    for (const auto& l : lists) v.push_back(l.tau);
    return v;
  }
};

// Greedy no-replacement retrieval over eval_grid(mode, n_lists). For each
// list, queries run in ascending order of the varied attribute; each takes
// the highest-scoring pool item not yet retrieved in that list (lowest index
// on ties). The pool resets between lists.
//
// score(list_index, query, scores) fills one score per pool item. A list
// whose retrieved values are all equal has no defined tau; it is counted as
// tau = 0 and flagged.
template <class Scorer>
OrdinalityReport run_ordinality(std::span<const ValenceArousal> pool_labels, OrdinalityMode mode,
                                std::size_t n_lists, Scorer&& score, std::span<const char> eligible = {}) {
  const std::size_t pool = pool_labels.size();
  std::size_t n_eligible = pool;
  if (!eligible.empty()) {
    if (eligible.size() != pool) throw InvalidArgument("run_ordinality: eligibility mask size mismatch");
    n_eligible = static_cast<std::size_t>(std::count(eligible.begin(), eligible.end(), char{1}));
  }
  if (n_eligible < kGridListLength)
    throw InvalidArgument("ordinality_test: pool has " + std::to_string(n_eligible) + " usable items, need at least " +
                          std::to_string(kGridListLength));
  OrdinalityReport report;
  report.mode = mode;
  report.pool_size = pool;
  report.excluded_pool_items = pool - n_eligible;

  const auto grid = eval_grid(mode, n_lists);
  std::vector<double> scores(pool);
  std::vector<char> taken(pool);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    auto queries = grid[l];
    std::stable_sort(queries.begin(), queries.end(), [&](const ValenceArousal& a, const ValenceArousal& b) {
      return varied_attribute(a, mode) < varied_attribute(b, mode);
    });
    std::fill(taken.begin(), taken.end(), char{0});
    OrdinalityList out;
    out.queries = queries;
    for (const auto& q : queries) {
      score(l, q, std::span<double>(scores));
      std::size_t best = pool;
      for (std::size_t k = 0; k < pool; ++k) {
        if (taken[k] || (!eligible.empty() && !eligible[k])) continue;
        if (best == pool || scores[k] > scores[best]) best = k;
      }
      taken[best] = 1;
      out.retrieved.push_back(best);
      out.query_values.push_back(varied_attribute(q, mode));
      out.retrieved_values.push_back(varied_attribute(pool_labels[best], mode));
    }
    try {
      out.tau = kendall_tau_b(out.query_values, out.retrieved_values);
    } catch (const UndefinedStatistic&) {
      out.tau = 0.0;
      out.tau_defined = false;
    }
    report.lists.push_back(std::move(out));
  }
  const auto t = report.taus();
  report.tau = summarize(t);
  return report;
}

// Text-side features for a query label; synthetic and ingested sources both
// satisfy this shape: std::vector<double>(const ValenceArousal&, RngStream&).
struct SyntheticQuerySource {
  const SyntheticGenerator* generator;
  std::vector<double> operator()(const ValenceArousal& y, RngStream& rng) const {
    return generator->text_features(y, rng);
  }
};

// Precomputed text features keyed by grid label (valence, arousal rounded to
// 1e-6).
class LabelKeyedQueries {
 public:
  explicit LabelKeyedQueries(const Dataset& ds) {
    for (const auto& it : ds.items) table_.emplace(key(it.label), it.text_features);
  }
  std::vector<double> operator()(const ValenceArousal& y, RngStream&) const {
    auto it = table_.find(key(y));
    if (it == table_.end())
      throw InvalidArgument("no precomputed query for label (" + std::to_string(y.valence()) + ", " +
                            std::to_string(y.arousal()) + ")");
    return it->second;
  }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  static std::pair<long long, long long> key(const ValenceArousal& y) {
    return {std::llround(y.valence() * 1e6), std::llround(y.arousal() * 1e6)};
  }
  std::map<std::pair<long long, long long>, std::vector<double>> table_;
};

// Model-based ordinality test: pool items are projected through the audio
// head, each query's text features through the text head, and scores are
// cosine similarities. Pool items with an all-zero embedding are excluded;
// an all-zero query scores every item equally.
template <class QuerySource>
OrdinalityReport ordinality_test(const TwoTowerModel& model, const Dataset& audio_pool, OrdinalityMode mode,
                                 std::size_t n_lists, std::uint64_t seed, QuerySource&& queries) {
  if (audio_pool.size() < kGridListLength)
    throw InvalidArgument("ordinality_test: pool smaller than list length");
  if (audio_pool.audio_dim != model.dims().audio)
    throw InvalidArgument("ordinality_test: pool audio dim does not match model");
  Matrix pool = project(model.audio_head(), audio_pool.audio_matrix());
  std::vector<char> eligible(pool.rows(), 1);
  for (std::size_t k = 0; k < pool.rows(); ++k) {
    const double n = l2_norm(pool.row(k));
    if (n < kDegenerateNormThreshold) {
      eligible[k] = 0;
      continue;
    }
    for (auto& v : pool.row(k)) v /= n;
  }
  const auto labels = audio_pool.labels();
  std::size_t degenerate = 0;
  std::size_t current_list = static_cast<std::size_t>(-1);
  std::optional<RngStream> rng;
  auto scorer = [&](std::size_t list, const ValenceArousal& q, std::span<double> scores) {
    if (list != current_list) {
      current_list = list;
      rng.emplace(RngStream::derived(seed, std::string("ordinality/") + std::string(to_string(mode)), list));
    }
    const auto feat = queries(q, *rng);
    if (feat.size() != model.dims().text) throw InvalidArgument("ordinality_test: query feature dim mismatch");
    Matrix e = project(model.text_head(), Matrix(1, feat.size(), feat));
    const double n = l2_norm(e.row(0));
    if (n < kDegenerateNormThreshold) {
      ++degenerate;
      std::fill(scores.begin(), scores.end(), 0.0);
      return;
    }
    for (std::size_t k = 0; k < pool.rows(); ++k) scores[k] = dot(pool.row(k), e.row(0)) / n;
  };
  auto report = run_ordinality(labels, mode, n_lists, scorer, eligible);
  report.degenerate_queries = degenerate;
  report.seed = seed;
  return report;
}

// ---------------------------------------------------------------------------
// Report export

inline nlohmann::ordered_json to_json(const AlignmentReport& r) {
  nlohmann::ordered_json j;
  j["n_trials"] = r.n_trials;
  j["n_samples"] = r.n_samples;
  j["seed"] = r.seed;
  j["n_projections"] = r.options.n_projections;
  j["normalized_embeddings"] = r.options.normalize;
  j["mmd"] = {{"mean", r.mmd.mean}, {"std", r.mmd.stddev}, {"per_trial", r.mmd_values()}};
  j["wasserstein"] = {{"mean", r.wasserstein.mean}, {"std", r.wasserstein.stddev}, {"per_trial", r.wasserstein_values()}};
  return j;
}

inline nlohmann::ordered_json to_json(const OrdinalityReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  j["query_order"] = kQueryOrder;
  j["seed"] = r.seed;
  j["pool_size"] = r.pool_size;
  j["excluded_pool_items"] = r.excluded_pool_items;
  j["degenerate_queries"] = r.degenerate_queries;
  j["tau"] = {{"mean", r.tau.mean}, {"std", r.tau.stddev}, {"per_list", r.taus()}};
  auto lists = nlohmann::ordered_json::array();
  for (const auto& l : r.lists) {
    nlohmann::ordered_json lj;
    auto q = nlohmann::ordered_json::array();
    for (const auto& y : l.queries) q.push_back({y.valence(), y.arousal()});
    lj["queries"] = q;
    lj["retrieved"] = l.retrieved;
    lj["retrieved_values"] = l.retrieved_values;
    lj["tau"] = l.tau;
    lj["tau_defined"] = l.tau_defined;
    lists.push_back(std::move(lj));
  }
  j["lists"] = std::move(lists);
  return j;
}

inline void write_alignment_csv(const AlignmentReport& r, std::ostream& out) {
  out << "metric,mean,std,n_trials,n_samples\n";
  out << "mmd," << detail::csv_double(r.mmd.mean) << ',' << detail::csv_double(r.mmd.stddev) << ',' << r.n_trials
      << ',' << r.n_samples << '\n';
  out << "wasserstein," << detail::csv_double(r.wasserstein.mean) << ',' << detail::csv_double(r.wasserstein.stddev)
      << ',' << r.n_trials << ',' << r.n_samples << '\n';
}

inline void write_ordinality_csv(const OrdinalityReport& r, std::ostream& out) {
  out << "mode,mean_tau,std_tau,n_lists\n";
  out << to_string(r.mode) << ',' << detail::csv_double(r.tau.mean) << ',' << detail::csv_double(r.tau.stddev) << ','
      << r.lists.size() << '\n';
}

// One row per query: list index, query value, retrieved ground-truth value.
inline void write_ordinality_plot_csv(const OrdinalityReport& r, std::ostream& out) {
  out << "list,query_value,retrieved_value\n";
  for (std::size_t l = 0; l < r.lists.size(); ++l)
    for (std::size_t q = 0; q < r.lists[l].query_values.size(); ++q)
      out << l << ',' << detail::csv_double(r.lists[l].query_values[q]) << ','
          << detail::csv_double(r.lists[l].retrieved_values[q]) << '\n';
}

}  // namespace rankclap

#endif  // RANKCLAP_EVAL_HPP_
