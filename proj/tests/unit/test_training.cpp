// Copyright 2026 The mcprec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mcprec/corpus.hpp"
#include "mcprec/error.hpp"
#include "mcprec/training.hpp"
#include "synthetic.hpp"

namespace mcprec {
namespace {

Eigen::MatrixXd unit_columns(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return normalize_columns(m);
}

TEST(SampleBatchTest, SinglePositiveAlwaysChosen) {
  const InteractionSet interactions{{"t1", {"m1"}}, {"t2", {"m2", "m3"}}};
  Rng rng(1);
  const std::vector<std::string> tasks{"t1"};
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_batch(tasks, interactions, rng).front().server_id, "m1");
}

TEST(SampleBatchTest, DistinctTasksAndPositivesFromSet) {
  InteractionSet interactions;
  std::vector<std::string> tasks;
  for (int t = 0; t < 4; ++t) {
    tasks.push_back("t" + std::to_string(t));
    interactions[tasks.back()] = {"a" + std::to_string(t), "b" + std::to_string(t)};
  }
  Rng rng(2);
  const auto batch = sample_batch(tasks, interactions, rng);
  ASSERT_EQ(batch.size(), 4u);
  std::set<std::string> ids;
  for (const auto& pair : batch) {
    ids.insert(pair.task_id);
    const auto& positives = interactions.at(pair.task_id);
    EXPECT_NE(std::find(positives.begin(), positives.end(), pair.server_id), positives.end());
  }
  EXPECT_EQ(ids.size(), 4u);
  const std::vector<std::string> repeated{"t0", "t0"};
  EXPECT_THROW(sample_batch(repeated, interactions, rng), std::invalid_argument);
}

TEST(SampleBatchTest, EmptyPositivesSkipped) {
  const InteractionSet interactions{{"t1", {}}, {"t2", {"m2"}}};
  Rng rng(3);
  const std::vector<std::string> tasks{"t1", "t2", "t3"};
  const auto batch = sample_batch(tasks, interactions, rng);
  ASSERT_EQ(batch.size(), 1u);
  EXPECT_EQ(batch[0].task_id, "t2");
}

TEST(SampleBatchTest, SeededSequenceRepeats) {
  InteractionSet interactions;
  std::vector<std::string> tasks;
  for (int t = 0; t < 30; ++t) {
    tasks.push_back("t" + std::to_string(t));
    interactions[tasks.back()] = {"x", "y", "z"};
  }
  Rng a(9), b(9);
  for (int epoch = 0; epoch < 3; ++epoch) {
    const auto ea = epoch_batches(tasks, interactions, 7, a);
    const auto eb = epoch_batches(tasks, interactions, 7, b);
    ASSERT_EQ(ea.size(), 5u);
    ASSERT_EQ(ea.back().size(), 2u);
    for (std::size_t i = 0; i < ea.size(); ++i) {
      for (std::size_t j = 0; j < ea[i].size(); ++j) {
        ASSERT_EQ(ea[i][j].task_id, eb[i][j].task_id);
        ASSERT_EQ(ea[i][j].server_id, eb[i][j].server_id);
      }
    }
  }
}

TEST(ContrastiveLossTest, SingleExampleIsZero) {
  Rng rng(4);
  const auto t = unit_columns(3, 1, rng);
  const auto s = unit_columns(3, 1, rng);
  for (auto kind : {LossKind::kSymmetric, LossKind::kOneSided}) {
    const auto r = contrastive_loss(t, s, 0.07, kind);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_TRUE(r.d_task.isZero());
  }
}

TEST(ContrastiveLossTest, EqualScoresGiveLn2) {
  Eigen::MatrixXd t(2, 2), s(2, 2);
  t << 1, 1, 0, 0;
  s << 1, 1, 0, 0;
  for (auto kind : {LossKind::kSymmetric, LossKind::kOneSided}) {
    EXPECT_NEAR(contrastive_loss(t, s, 1.0, kind).loss, std::log(2.0), 1e-15);
  }
}

TEST(ContrastiveLossTest, SeparatedPositivesApproachZero) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_LT(contrastive_loss(eye, eye, 0.01, LossKind::kSymmetric).loss, 1e-40);
  EXPECT_GT(contrastive_loss(eye, eye, 1.0, LossKind::kSymmetric).loss,
            contrastive_loss(eye, eye, 0.1, LossKind::kSymmetric).loss);
}

TEST(ContrastiveLossTest, RejectsBadTemperature) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(contrastive_loss(eye, eye, 0.0), std::invalid_argument);
  EXPECT_THROW(contrastive_loss(eye, eye, -1.0), std::invalid_argument);
}

TEST(ContrastiveLossTest, NonNegativeOnRandomBatches) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const std::size_t b = 1 + rng.index(12);
    const auto t = unit_columns(5, b, rng);
    const auto s = unit_columns(5, b, rng);
    for (auto kind : {LossKind::kSymmetric, LossKind::kOneSided, LossKind::kBce}) {
      const double loss = contrastive_loss(t, s, rng.uniform(0.05, 2.0), kind).loss;
      ASSERT_GE(loss, 0.0);
      ASSERT_TRUE(std::isfinite(loss));
    }
  }
}

TEST(ContrastiveLossTest, SharedPositiveStillCountsAsNegative) {
  Eigen::MatrixXd t(2, 2), s(2, 2);
  t << 1, 0, 0, 1;
  s << 1, 1, 0, 0;  // both tasks drew the same server
  const auto r = contrastive_loss(t, s, 1.0, LossKind::kOneSided);
  const double row0 = std::log(2.0);
  const double row1 = std::log(2.0);
  EXPECT_NEAR(r.loss, (row0 + row1) / 2.0, 1e-15);
}

TEST(ContrastiveLossTest, BceMatchesDefinition) {
  Rng rng(6);
  const auto t = unit_columns(4, 3, rng);
  const auto s = unit_columns(4, 3, rng);
  const double tau = 0.5;
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double x = t.col(i).dot(s.col(j)) / tau;
      const double p = 1.0 / (1.0 + std::exp(-x));
      expected += i == j ? -std::log(p) : -std::log(1.0 - p);
    }
  }
  EXPECT_NEAR(contrastive_loss(t, s, tau, LossKind::kBce).loss, expected / 9.0, 1e-12);
}

TEST(GradientTest, FiniteDifferencesSmallNet) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto p = testing::make_gradient_problem(6, 4, 3, 2, seed);
    for (auto kind : {LossKind::kSymmetric, LossKind::kOneSided, LossKind::kBce}) {
      const auto check = testing::check_gradients(p.encoder, p.tasks, p.servers, 0.07, kind);
      EXPECT_LT(check.max_relative_error, 1e-4) << "seed " << seed << " loss " << to_string(kind);
    }
  }
}

TEST(GradientTest, BackwardIsLinearInUpstream) {
  auto p = testing::make_gradient_problem(6, 4, 3, 3, 7);
  TowerTrace trace;
  const Eigen::MatrixXd z = forward_batch(p.encoder.task_tower, p.tasks, Mode::kInfer, nullptr, &trace);
  trace.mask.assign(trace.pre.size(), Eigen::MatrixXd());
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (const auto& layer : backward(p.encoder.task_tower, p.tasks, trace, zero)) {
    EXPECT_TRUE(layer.weight.isZero());
    EXPECT_TRUE(layer.bias.isZero());
  }
  Rng rng(8);
  Eigen::MatrixXd upstream(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = rng.uniform(-1, 1);
  const auto once = backward(p.encoder.task_tower, p.tasks, trace, upstream);
  const auto twice = backward(p.encoder.task_tower, p.tasks, trace, 2.0 * upstream);
  for (std::size_t l = 0; l < once.size(); ++l) {
    EXPECT_TRUE(twice[l].weight.isApprox(2.0 * once[l].weight, 1e-14));
    EXPECT_TRUE(twice[l].bias.isApprox(2.0 * once[l].bias, 1e-14));
  }
}

DualGradients zero_gradients(const DualEncoder& e) {
  DualGradients g;
  for (const auto& l : e.task_tower.layers) g.task.push_back({0.0 * l.weight, 0.0 * l.bias});
  for (const auto& l : e.server_tower.layers) g.server.push_back({0.0 * l.weight, 0.0 * l.bias});
  return g;
}

TEST(OptimizerTest, ZeroGradientNoDecayIsNoop) {
  auto p = testing::make_gradient_problem(6, 4, 3, 2, 9);
  const auto before = p.encoder;
  AdamWState state;
  OptimizerConfig config;
  config.weight_decay = 0.0;
  ASSERT_TRUE(optimizer_step(p.encoder, zero_gradients(p.encoder), state, config));
  for (std::size_t l = 0; l < before.task_tower.layers.size(); ++l) {
    EXPECT_EQ(p.encoder.task_tower.layers[l].weight, before.task_tower.layers[l].weight);
    EXPECT_EQ(p.encoder.server_tower.layers[l].bias, before.server_tower.layers[l].bias);
  }
}

TEST(OptimizerTest, FirstStepMovesByLearningRate) {
  auto p = testing::make_gradient_problem(6, 4, 3, 2, 10);
  const auto before = p.encoder;
  auto g = zero_gradients(p.encoder);
  for (auto& l : g.task) {
    l.weight.setConstant(0.37);
    l.bias.setConstant(-2.5);
  }
  AdamWState state;
  OptimizerConfig config;
  config.weight_decay = 0.0;
  ASSERT_TRUE(optimizer_step(p.encoder, g, state, config));
  for (std::size_t l = 0; l < before.task_tower.layers.size(); ++l) {
    const Eigen::MatrixXd dw = p.encoder.task_tower.layers[l].weight - before.task_tower.layers[l].weight;
    const Eigen::VectorXd db = p.encoder.task_tower.layers[l].bias - before.task_tower.layers[l].bias;
    EXPECT_NEAR(dw.maxCoeff(), -1e-3, 1e-10);
    EXPECT_NEAR(dw.minCoeff(), -1e-3, 1e-10);
    EXPECT_NEAR(db.maxCoeff(), 1e-3, 1e-10);
  }
}

TEST(OptimizerTest, DecayOnlyShrinksMultiplicatively) {
  auto p = testing::make_gradient_problem(6, 4, 3, 2, 11);
  const auto before = p.encoder;
  AdamWState state;
  OptimizerConfig config;
  config.learning_rate = 0.01;
  config.weight_decay = 0.1;
  ASSERT_TRUE(optimizer_step(p.encoder, zero_gradients(p.encoder), state, config));
  for (std::size_t l = 0; l < before.task_tower.layers.size(); ++l) {
    EXPECT_TRUE(p.encoder.task_tower.layers[l].weight.isApprox(before.task_tower.layers[l].weight * 0.999, 1e-15));
  }
}

TEST(OptimizerTest, NonFiniteGradientSkipsStep) {
  auto p = testing::make_gradient_problem(6, 4, 3, 2, 12);
  const auto before = p.encoder;
  auto g = zero_gradients(p.encoder);
  g.server[1].bias(0) = std::numeric_limits<double>::quiet_NaN();
  AdamWState state;
  EXPECT_FALSE(optimizer_step(p.encoder, g, state, OptimizerConfig{}));
  EXPECT_EQ(state.step, 0u);
  EXPECT_EQ(p.encoder.task_tower.layers[0].weight, before.task_tower.layers[0].weight);
}

struct SmallTraining {
  testing::SyntheticCorpus corpus;
  DatasetSplit split;
  Vocabulary vocab;
  TrainConfig config;

  SmallTraining() {
    testing::SyntheticConfig c;
    c.clusters = 4;
    c.tasks_per_cluster = 16;
    c.servers_per_cluster = 16;
    c.groups_per_cluster = 4;
    corpus = testing::make_synthetic(c);
    split = split_dataset(labeled_task_ids(corpus.dataset), 3);
    std::vector<std::string> texts;
    for (const auto& s : corpus.dataset.servers) texts.push_back(concat_text(s));
    for (const auto& t : corpus.dataset.tasks) texts.push_back(concat_text(t));
    vocab = Vocabulary::build(texts);
    config.epochs = 10;
    config.batch_size = 8;
    config.tower.hidden_dim = 32;
    config.tower.output_dim = 16;
    config.seed = 5;
    config.eval_k = 5;
  }
};

TEST(TrainTest, ZeroEpochsKeepsInitialParameters) {
  SmallTraining t;
  t.config.epochs = 0;
  const auto result = train(t.corpus.dataset, t.split, t.vocab, t.config);
  EXPECT_EQ(result.best_epoch, 0u);
  EXPECT_TRUE(result.log.empty());
  Rng init(t.config.seed);
  const auto fresh = make_dual_encoder(t.config.tower, t.vocab, init);
  EXPECT_EQ(result.best.task_tower.layers[0].weight, fresh.task_tower.layers[0].weight);
  const auto dir = testing::scratch_dir("train-zero");
  save_checkpoint(result.best, dir / "c.bin");
  EXPECT_NO_THROW(load_checkpoint(dir / "c.bin", t.vocab));
}

TEST(TrainTest, DeterministicAcrossRuns) {
  SmallTraining t;
  t.config.epochs = 4;
  const auto a = train(t.corpus.dataset, t.split, t.vocab, t.config);
  const auto b = train(t.corpus.dataset, t.split, t.vocab, t.config);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json().dump(), b.log[i].to_json().dump());
  EXPECT_NEAR(a.log.back().loss, b.log.back().loss, 1e-9);
  EXPECT_EQ(a.best.server_tower.layers[2].weight, b.best.server_tower.layers[2].weight);
}

TEST(TrainTest, LossTrendsDownward) {
  SmallTraining t;
  const auto result = train(t.corpus.dataset, t.split, t.vocab, t.config);
  ASSERT_EQ(result.log.size(), 10u);
  int upticks = 0;
  for (std::size_t i = 1; i < result.log.size(); ++i) upticks += result.log[i].loss > result.log[i - 1].loss;
  EXPECT_LE(upticks, 2);
  EXPECT_LT(result.log.back().loss, result.log.front().loss);
  ASSERT_TRUE(result.best_valid_recall.has_value());
  EXPECT_GT(result.best_epoch, 0u);
}

TEST(TrainTest, LogRecordShape) {
  EpochRecord r;
  r.epoch = 3;
  r.loss = 0.5;
  r.k = 10;
  EXPECT_EQ(r.to_json().dump(), R"({"epoch":3,"loss":0.5,"recall@10_valid":null})");
  r.valid_recall = 0.25;
  EXPECT_EQ(r.to_json().dump(), R"({"epoch":3,"loss":0.5,"recall@10_valid":0.25})");
}

TEST(TrainTest, InvalidConfigRejected) {
  TrainConfig config;
  config.temperature = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = {};
  config.batch_size = 0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = {};
  config.optimizer.learning_rate = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
  EXPECT_THROW(parse_loss_kind("hinge"), ConfigError);
}

}  // namespace
}  // namespace mcprec
