#include <gtest/gtest.h>

#include <cstdlib>

#include "experiment.hpp"

using namespace rankclap;
using namespace rankclap::tools;

TEST(ExperimentConfig, EmptyFileGivesDefaults) {
  const auto cfg = parse_experiment_config("");
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_EQ(cfg.data.n_train, 2000u);
  EXPECT_EQ(cfg.data.n_dev, 500u);
  EXPECT_EQ(cfg.data.n_test, 1000u);
  EXPECT_EQ(cfg.embed_dim, 16u);
  EXPECT_EQ(cfg.train.learning_rate, 1e-4);
  EXPECT_EQ(cfg.eval.trials, 10u);
  EXPECT_EQ(cfg.eval.samples, 1000u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfig, ReadsEverySection) {
  const auto cfg = parse_experiment_config(R"(
seed = 4
output_dir = "o"
[data]
seed = 11
n_train = 10
gap_magnitude = 1.5
[model]
embed_dim = 3
[train]
loss = "supcon"
symmetric_rnc = true
learning_rate = 0.5
epochs = 2
[eval]
lists = 7
)");
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_EQ(cfg.train.seed, 4u);
  EXPECT_EQ(cfg.data_seed(), 11u);
  EXPECT_EQ(cfg.generator_config().n_items, 10u);
  EXPECT_EQ(cfg.generator_config().seed, 11u);
  EXPECT_EQ(cfg.data.synthetic.gap_magnitude, 1.5);
  EXPECT_EQ(cfg.embed_dim, 3u);
  EXPECT_EQ(cfg.train.loss_kind, LossKind::kSupCon);
  EXPECT_TRUE(cfg.train.symmetric_rnc);
  EXPECT_EQ(cfg.train.learning_rate, 0.5);
  EXPECT_EQ(cfg.train.epochs, 2u);
  EXPECT_EQ(cfg.eval.lists, 7u);
  EXPECT_EQ(cfg.output_dir, "o");
}

TEST(ExperimentConfig, DataSeedFallsBackToMasterSeed) {
  auto cfg = parse_experiment_config("seed = 9");
  EXPECT_EQ(cfg.data_seed(), 9u);
  cfg.set_seed(3);
  EXPECT_EQ(cfg.data_seed(), 3u);
  EXPECT_EQ(cfg.train.seed, 3u);
}

TEST(ExperimentConfig, RejectsBadInput) {
  EXPECT_THROW(parse_experiment_config("sed = 1"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[train]\nlr = 1"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[train]\nloss = \"mse\""), ConfigError);
  EXPECT_THROW(parse_experiment_config("[train]\nepochs = -1"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[train]\nepochs = 1.5"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[data]\nsource = \"disk\""), ConfigError);
  EXPECT_THROW(parse_experiment_config("seed = "), ConfigError);
  EXPECT_THROW(parse_experiment_config("data = 3"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[data]\nn_train = 0").validate(), ConfigError);
  EXPECT_THROW(parse_experiment_config("[data]\nsource = \"ingest\"").validate(), ConfigError);
  EXPECT_THROW(parse_experiment_config("[train]\nbatch_size = 1").validate(), InvalidArgument);
}

TEST(ExperimentConfig, IngestPathsResolveAgainstConfigDir) {
  const auto cfg = parse_experiment_config("[data]\nsource = \"ingest\"\ntrain_path = \"a/t.jsonl\"\n"
                                           "dev_path = \"/abs/d.jsonl\"\ntest_path = \"e.jsonl\"",
                                           "/cfg/dir");
  EXPECT_EQ(cfg.data.train_path, "/cfg/dir/a/t.jsonl");
  EXPECT_EQ(cfg.data.dev_path, "/abs/d.jsonl");
  EXPECT_EQ(cfg.data.test_path, "/cfg/dir/e.jsonl");
}

TEST(ExperimentConfig, ShippedDefaultConfigIsValid) {
  const auto cfg = load_experiment_config(RANKCLAP_DEFAULT_CONFIG);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.data.synthetic.gap_magnitude, 3.0);
  EXPECT_EQ(cfg.data.synthetic.audio_dim, 32u);
  EXPECT_EQ(cfg.data.synthetic.text_dim, 24u);
  EXPECT_EQ(cfg.embed_dim, 16u);
  EXPECT_EQ(cfg.train.epochs, 15u);
}

TEST(SeedOverride, FlagBeatsEnvironment) {
  ::setenv("RANKCLAP_SEED", "21", 1);
  EXPECT_EQ(seed_override(std::nullopt), 21u);
  EXPECT_EQ(seed_override(5), 5u);
  ::setenv("RANKCLAP_SEED", "-3", 1);
  EXPECT_THROW(seed_override(std::nullopt), ConfigError);
  ::setenv("RANKCLAP_SEED", "7x", 1);
  EXPECT_THROW(seed_override(std::nullopt), ConfigError);
  ::unsetenv("RANKCLAP_SEED");
  EXPECT_EQ(seed_override(std::nullopt), std::nullopt);
}
