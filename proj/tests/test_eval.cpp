#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "rankclap/eval.hpp"
#include "rankclap/trainer.hpp"

using namespace rankclap;

namespace {

Matrix cloud(std::size_t n, std::size_t d, RngStream& rng, double shift = 0.0) {
  auto m = oracle::random_matrix(n, d, rng);
  for (auto& v : m.values()) v += shift;
  return m;
}

double oracle_score(OrdinalityMode mode, const ValenceArousal& q, const ValenceArousal& item) {
  return -std::abs(varied_attribute(q, mode) - varied_attribute(item, mode));
}

}  // namespace

TEST(Mmd, ZeroOnIdenticalAndSymmetric) {
  RngStream rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto x = cloud(2 + rng.below(30), 1 + rng.below(6), rng);
    const auto y = cloud(2 + rng.below(30), x.cols(), rng, 0.5);
    EXPECT_LE(mmd_rbf(x, x), 1e-12);
    EXPECT_EQ(mmd_rbf(x, y), mmd_rbf(y, x));
    EXPECT_EQ(mmd_rbf(x, y, 0.7), mmd_rbf(y, x, 0.7));
  }
}

TEST(Mmd, TwoPointClosedForm) {
  const Matrix x(2, 1, std::vector<double>{0, 0});
  const Matrix y(2, 1, std::vector<double>{2, 2});
  EXPECT_NEAR(mmd_rbf(x, y, 1.0), std::sqrt(2.0 - 2.0 * std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(mmd_rbf(x, y, 1.0), 1.3150397, 1e-7);
}

TEST(Mmd, MatchesKernelSumOracle) {
  RngStream rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto x = cloud(5 + rng.below(10), 3, rng);
    const auto y = cloud(5 + rng.below(10), 3, rng, 0.3);
    const double sigma = rng.uniform(0.3, 3.0);
    EXPECT_NEAR(mmd_rbf(x, y, sigma), oracle::mmd(x, y, sigma), 1e-12);
  }
}

TEST(Mmd, MedianHeuristicBandwidth) {
  const Matrix x(2, 1, std::vector<double>{0, 1});
  const Matrix y(2, 1, std::vector<double>{3, 7});
  // Pooled pairwise distances 1, 3, 7, 2, 6, 4 have median 3.5.
  EXPECT_EQ(median_pairwise_distance(x, y), 3.5);
  EXPECT_EQ(mmd_rbf(x, y), mmd_rbf(x, y, 3.5));
  EXPECT_THROW(mmd_rbf(Matrix(1, 1), y), InvalidArgument);
}

TEST(SlicedWasserstein, ZeroOnIdenticalAndSymmetric) {
  RngStream rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = cloud(1 + rng.below(30), 1 + rng.below(6), rng);
    const auto y = cloud(1 + rng.below(30), x.cols(), rng, 1.0);
    EXPECT_LE(sliced_wasserstein(x, x, 32, 9), 1e-12);
    EXPECT_EQ(sliced_wasserstein(x, y, 32, 9), sliced_wasserstein(y, x, 32, 9));
  }
}

TEST(SlicedWasserstein, UnitTranslation) {
  const Matrix x(2, 1, std::vector<double>{0, 0});
  const Matrix y(2, 1, std::vector<double>{1, 1});
  for (std::uint64_t seed : {0u, 1u, 2u}) EXPECT_NEAR(sliced_wasserstein(x, y, 5, seed), 1.0, 1e-15);
}

TEST(SlicedWasserstein, UnequalSizesUseQuantileInterpolation) {
  const std::vector<double> a{0.0, 1.0};
  const std::vector<double> b{0.0, 0.5, 1.0, 1.5};
  // Quantiles at (i + 0.5) / 4 of a: 0, 0.25, 0.75, 1.
  const double expected = std::sqrt((0.0 + 0.0625 + 0.0625 + 0.25) / 4.0);
  EXPECT_NEAR(wasserstein2_1d(a, b), expected, 1e-15);
  EXPECT_EQ(wasserstein2_1d(a, b), wasserstein2_1d(b, a));
}

TEST(ExactWasserstein, HungarianMatchesPermutationBruteForce) {
  RngStream rng(4);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng.below(7);
    const auto x = cloud(n, 2, rng), y = cloud(n, 2, rng, 0.4);
    EXPECT_NEAR(exact_wasserstein2(x, y), oracle::w2_by_permutation(x, y), 1e-12);
  }
}

TEST(ExactWasserstein, SlicedIsBoundedByExact) {
  // Each slice is a 1-Lipschitz projection, so the slice average cannot
  // exceed the exact distance; the lower band is empirical.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(500 + seed);
    const auto x = cloud(4, 2, rng), y = cloud(4, 2, rng, 0.5);
    const double exact = oracle::w2_by_permutation(x, y);
    const double sliced = sliced_wasserstein(x, y, 512, seed);
    EXPECT_LE(sliced, exact + 1e-12) << seed;
    EXPECT_GE(sliced, 0.5 * exact) << seed;
  }
}

TEST(ExactWasserstein, TranslationGivesTwoOverPiInTwoDimensions) {
  RngStream rng(5);
  const auto x = cloud(6, 2, rng);
  auto y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) y(i, 0) += 1.0;
  EXPECT_NEAR(exact_wasserstein2(x, y), 1.0, 1e-12);
  EXPECT_NEAR(sliced_wasserstein(x, y, 20000, 1), 2.0 / std::numbers::pi, 0.01);
}

TEST(Kendall, MonotoneSequences) {
  const std::vector<double> x{1, 2, 3}, up{1, 2, 3}, down{3, 2, 1};
  EXPECT_EQ(kendall_tau_b(x, up), 1.0);
  EXPECT_EQ(kendall_tau_b(x, down), -1.0);
  RngStream rng(6);
  std::vector<double> a(50), b(50), c(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = static_cast<double>(i) + rng.uniform();
    b[i] = std::exp(a[i] / 10);
    c[i] = -b[i];
  }
  EXPECT_EQ(kendall_tau_b(a, b), 1.0);
  EXPECT_EQ(kendall_tau_b(a, c), -1.0);
}

TEST(Kendall, TiedExample) {
  const std::vector<double> x{1, 2, 2, 3}, y{1, 3, 2, 4};
  const auto c = kendall_counts(x, y);
  EXPECT_EQ(c.concordant, 5);
  EXPECT_EQ(c.discordant, 0);
  EXPECT_EQ(c.ties_x, 1);
  EXPECT_EQ(c.ties_y, 0);
  EXPECT_NEAR(kendall_tau_b(x, y), 5.0 / std::sqrt(30.0), 1e-15);
}

TEST(Kendall, MatchesPairCountingOnTiedSequences) {
  RngStream rng(7);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(40);
    const auto levels = 1 + rng.below(6);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(levels));
      y[i] = static_cast<double>(rng.below(levels + 1));
    }
    const auto got = kendall_counts(x, y);
    const auto want = oracle::pair_counts(x, y);
    ASSERT_EQ(got.concordant, want.concordant) << t;
    ASSERT_EQ(got.discordant, want.discordant) << t;
    ASSERT_EQ(got.ties_x, want.ties_x) << t;
    ASSERT_EQ(got.ties_y, want.ties_y) << t;
    ASSERT_EQ(got.ties_both, want.ties_both) << t;
    const bool defined = want.concordant + want.discordant + want.ties_x > 0 &&
                         want.concordant + want.discordant + want.ties_y > 0;
    if (defined)
      EXPECT_EQ(kendall_tau_b(x, y), oracle::tau_b(want));
    else
      EXPECT_THROW(kendall_tau_b(x, y), UndefinedStatistic);
  }
}

TEST(Kendall, SymmetryAndNegation) {
  RngStream rng(8);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(20), y(20), ny(20);
    for (std::size_t i = 0; i < 20; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
      ny[i] = -y[i];
    }
    EXPECT_EQ(kendall_tau_b(x, y), kendall_tau_b(y, x));
    EXPECT_EQ(kendall_tau_b(x, ny), -kendall_tau_b(x, y));
  }
}

TEST(Kendall, ConstantSequenceUndefined) {
  EXPECT_THROW(kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), UndefinedStatistic);
  EXPECT_THROW(kendall_tau_b(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
}

TEST(Welch, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const auto r = welch_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p_two_tailed, 1.0);
}

TEST(Welch, ShiftedIntegers) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.t, -1.0, 1e-14);
  EXPECT_NEAR(r.df, 8.0, 1e-12);
  EXPECT_NEAR(r.p_two_tailed, 0.34659350708733416, 1e-12);  // scipy.stats.ttest_ind(equal_var=False)
}

TEST(Welch, TwoDegreesOfFreedomClosedForm) {
  // df = 2 has the closed-form two-tailed p = 1 - |t| / sqrt(2 + t^2).
  const std::vector<double> a{0, 1}, b{3, 4};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.df, 2.0, 1e-12);
  EXPECT_NEAR(r.t, -3.0 / std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(r.p_two_tailed, 1.0 - std::abs(r.t) / std::sqrt(2.0 + r.t * r.t), 1e-12);
}

TEST(Welch, SeparatedNormals) {
  RngStream rng(9);
  std::vector<double> a(30), b(30);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal(5.0, 1.0);
  EXPECT_LT(welch_t_test(a, b).p_two_tailed, 1e-6);
  EXPECT_THROW(welch_t_test(std::vector<double>{1, 1}, std::vector<double>{2, 2}), UndefinedStatistic);
  EXPECT_THROW(welch_t_test(std::vector<double>{1}, std::vector<double>{2, 3}), InvalidArgument);
}

TEST(Alignment, IdenticalPoolsGiveZero) {
  RngStream rng(10);
  const auto pool = cloud(300, 4, rng);
  const auto r = alignment_trials(pool, pool, 4, 100, 3);
  for (const auto& t : r.trials) {
    EXPECT_LE(t.mmd, 1e-12);
    EXPECT_LE(t.wasserstein, 1e-12);
  }
  EXPECT_THROW(alignment_trials(pool, pool, 2, 301, 3), InvalidArgument);
}

TEST(Alignment, DeterministicAndPermutationInvariant) {
  RngStream rng(11);
  const auto a = cloud(200, 3, rng), t = cloud(200, 3, rng, 0.2);
  const auto r1 = alignment_trials(a, t, 3, 50, 17);
  const auto r2 = alignment_trials(a, t, 3, 50, 17);
  EXPECT_EQ(to_json(r1).dump(), to_json(r2).dump());

  std::vector<std::size_t> perm(200), inverse(200);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  for (std::size_t i = 0; i < 200; ++i) inverse[perm[i]] = i;
  auto sets = alignment_sample_indices(200, 3, 50, 17);
  auto moved = sets;
  for (auto& s : moved)
    for (auto& i : s) i = inverse[i];
  const auto r3 = alignment_trials_on(a.gather_rows(perm), t.gather_rows(perm), moved, 17);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(r3.trials[k].mmd, r1.trials[k].mmd);
    EXPECT_EQ(r3.trials[k].wasserstein, r1.trials[k].wasserstein);
  }
}

TEST(Alignment, ZeroRowsStayAtOrigin) {
  Matrix m(3, 2, std::vector<double>{3, 4, 0, 0, 0, -2});
  const auto n = normalize_nonzero_rows(m);
  const auto v = n.values();
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{0.6, 0.8, 0, 0, 0, -1}));
}

TEST(Alignment, TrainingReducesMmd) {
  SyntheticConfig sc;
  sc.seed = 2024;
  SyntheticGenerator gen(sc);
  const auto tr = gen.generate(Split::kTrain, 2000), dv = gen.generate(Split::kDev, 500),
             te = gen.generate(Split::kTest, 1000);
  const auto m0 = init_model(32, 24, 16, 1);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.learning_rate = 1e-3;
  cfg.symmetric_rnc = true;
  const auto trained = train(m0, tr, dv, cfg).best.model;
  auto report = [&](const TwoTowerModel& m) {
    return alignment_trials(project(m.audio_head(), te.audio_matrix()), project(m.text_head(), te.text_matrix()), 10,
                            1000, 1);
  };
  EXPECT_LT(report(trained).mmd.mean, report(m0).mmd.mean);
}

TEST(Ordinality, OracleSimilarityGivesPerfectTau) {
  SyntheticConfig sc;
  const auto pool = generate_synthetic(sc, Split::kTest);
  const auto labels = pool.labels();
  for (auto mode : {OrdinalityMode::kValence, OrdinalityMode::kArousal}) {
    const auto r = run_ordinality(labels, mode, 100, [&](std::size_t, const ValenceArousal& q, std::span<double> s) {
      for (std::size_t k = 0; k < labels.size(); ++k) s[k] = oracle_score(mode, q, labels[k]);
    });
    ASSERT_EQ(r.lists.size(), 100u);
    for (const auto& l : r.lists) {
      EXPECT_EQ(l.tau, 1.0);
      EXPECT_TRUE(l.tau_defined);
      auto sorted = l.retrieved;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
      EXPECT_TRUE(std::is_sorted(l.query_values.begin(), l.query_values.end()));
    }
    EXPECT_EQ(r.tau.mean, 1.0);
  }
}

TEST(Ordinality, RandomScoresCentreOnZero) {
  SyntheticConfig sc;
  const auto labels = generate_synthetic(sc, Split::kTest).labels();
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (auto mode : {OrdinalityMode::kValence, OrdinalityMode::kArousal}) {
      RngStream rng(seed);
      const auto r = run_ordinality(labels, mode, 100, [&](std::size_t, const ValenceArousal&, std::span<double> s) {
        for (auto& v : s) v = rng.uniform();
      });
      EXPECT_LT(std::abs(r.tau.mean), 0.15) << seed;
    }
}

TEST(Ordinality, NoReplacementWithinListAndPoolResets) {
  // A scorer that always prefers item 0 forces distinct retrievals per list,
  // and item 0 comes back first in every list.
  std::vector<ValenceArousal> labels;
  for (int i = 0; i < 20; ++i) labels.emplace_back(1.0 + 0.3 * i, 4.0);
  const auto r = run_ordinality(labels, OrdinalityMode::kValence, 3, [](std::size_t, const ValenceArousal&, std::span<double> s) {
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = -static_cast<double>(k);
  });
  for (const auto& l : r.lists) {
    for (std::size_t q = 0; q < l.retrieved.size(); ++q) EXPECT_EQ(l.retrieved[q], q);
  }
}

TEST(Ordinality, ConstantRetrievalCountsAsZero) {
  std::vector<ValenceArousal> labels(20, ValenceArousal{3.0, 3.0});
  const auto r = run_ordinality(labels, OrdinalityMode::kArousal, 2,
                                [](std::size_t, const ValenceArousal&, std::span<double> s) {
                                  std::fill(s.begin(), s.end(), 0.0);
                                });
  for (const auto& l : r.lists) {
    EXPECT_FALSE(l.tau_defined);
    EXPECT_EQ(l.tau, 0.0);
  }
}

TEST(Ordinality, PoolTooSmall) {
  std::vector<ValenceArousal> labels(13, ValenceArousal{3.0, 3.0});
  EXPECT_THROW(run_ordinality(labels, OrdinalityMode::kValence, 1,
                              [](std::size_t, const ValenceArousal&, std::span<double>) {}),
               InvalidArgument);
}

TEST(Ordinality, ModelHarnessDeterministicAndBounded) {
  SyntheticConfig sc;
  SyntheticGenerator gen(sc);
  const auto pool = gen.generate(Split::kTest, 300);
  const auto m = init_model(32, 24, 16, 4);
  const auto a = ordinality_test(m, pool, OrdinalityMode::kValence, 20, 5, SyntheticQuerySource{&gen});
  const auto b = ordinality_test(m, pool, OrdinalityMode::kValence, 20, 5, SyntheticQuerySource{&gen});
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  for (double t : a.taus()) {
    EXPECT_GE(t, -1.0);
    EXPECT_LE(t, 1.0);
  }
  EXPECT_THROW(ordinality_test(init_model(31, 24, 16, 4), pool, OrdinalityMode::kValence, 1, 5,
                               SyntheticQuerySource{&gen}),
               InvalidArgument);
}

TEST(Ordinality, LabelKeyedQueriesLookUpGridLabels) {
  Dataset ds;
  ds.audio_dim = ds.text_dim = 2;
  ds.items.push_back({{1, 0}, {0.25, 0.5}, ValenceArousal{1.5, 0.5}, std::nullopt});
  LabelKeyedQueries q(ds);
  RngStream rng(0);
  EXPECT_EQ(q(ValenceArousal{1.5, 0.5}, rng), (std::vector<double>{0.25, 0.5}));
  EXPECT_THROW(q(ValenceArousal{2.0, 0.5}, rng), InvalidArgument);
}

TEST(Reports, CsvAndJsonLayout) {
  AlignmentReport a;
  a.trials = {{0.5, 0.25}, {0.5, 0.25}};
  a.mmd = {0.5, 0.0};
  a.wasserstein = {0.25, 0.0};
  a.n_trials = 2;
  a.n_samples = 10;
  std::ostringstream csv;
  write_alignment_csv(a, csv);
  EXPECT_EQ(csv.str(), "metric,mean,std,n_trials,n_samples\nmmd,0.5,0,2,10\nwasserstein,0.25,0,2,10\n");
  const auto j = to_json(a);
  EXPECT_EQ(j["mmd"]["per_trial"].size(), 2u);

  std::vector<ValenceArousal> labels;
  for (int i = 0; i < 14; ++i) labels.emplace_back(0.5 * (i + 1), 1.0);
  const auto r = run_ordinality(labels, OrdinalityMode::kValence, 1, [&](std::size_t, const ValenceArousal& q, std::span<double> s) {
    for (std::size_t k = 0; k < labels.size(); ++k) s[k] = oracle_score(OrdinalityMode::kValence, q, labels[k]);
  });
  std::ostringstream plot;
  write_ordinality_plot_csv(r, plot);
  EXPECT_EQ(plot.str().substr(0, plot.str().find('\n', plot.str().find('\n') + 1)),
            "list,query_value,retrieved_value\n0,0.5,0.5");
  EXPECT_EQ(to_json(r)["query_order"], "ascending_varied_attribute");
}
