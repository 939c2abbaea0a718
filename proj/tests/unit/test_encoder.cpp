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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mcprec/encoder.hpp"
#include "mcprec/error.hpp"
#include "mcprec/lexical.hpp"
#include "synthetic.hpp"

namespace mcprec {
namespace {

TowerConfig small(std::size_t in, std::size_t layers = 3) {
  TowerConfig config;
  config.input_dim = in;
  config.hidden_dim = 8;
  config.output_dim = 4;
  config.layers = layers;
  return config;
}

SparseVector sparse(std::vector<std::uint32_t> idx, std::vector<double> val, std::size_t dim) {
  return {std::move(idx), std::move(val), dim};
}

TEST(TowerTest, ShapesChain) {
  Rng rng(1);
  const auto tower = init_tower(small(10), rng);
  ASSERT_EQ(tower.layers.size(), 3u);
  EXPECT_EQ(tower.layers[0].weight.rows(), 8);
  EXPECT_EQ(tower.layers[0].weight.cols(), 10);
  EXPECT_EQ(tower.layers[1].weight.rows(), 8);
  EXPECT_EQ(tower.layers[2].weight.rows(), 4);
  EXPECT_EQ(tower.parameter_count(), 10u * 8 + 8 + 8 * 8 + 8 + 8 * 4 + 4);
  EXPECT_TRUE(tower.all_finite());
}

TEST(TowerTest, InitBoundsAndZeroBias) {
  Rng rng(2);
  const auto tower = init_tower(small(25), rng);
  for (const auto& layer : tower.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_TRUE(layer.bias.isZero());
  }
}

TEST(TowerTest, InvalidConfig) {
  Rng rng(1);
  auto config = small(10);
  config.dropout = 1.0;
  EXPECT_THROW(init_tower(config, rng), ConfigError);
  config = small(0);
  EXPECT_THROW(init_tower(config, rng), ConfigError);
}

TEST(ForwardTest, ZeroInputPropagatesBiases) {
  Rng rng(3);
  auto tower = init_tower(small(6), rng);
  for (auto& layer : tower.layers) layer.bias.setRandom();
  Eigen::VectorXd expected = tower.layers[0].bias;
  for (std::size_t l = 1; l < tower.layers.size(); ++l) {
    expected = tower.layers[l].weight * expected.cwiseMax(0.0) + tower.layers[l].bias;
  }
  const auto out = forward(tower, sparse({}, {}, 6));
  EXPECT_TRUE(out.isApprox(expected, 1e-14));
}

TEST(ForwardTest, InferIsDeterministic) {
  Rng rng(4);
  const auto tower = init_tower(small(6), rng);
  const auto in = sparse({1, 4}, {0.6, 0.8}, 6);
  EXPECT_EQ(forward(tower, in), forward(tower, in));
}

TEST(ForwardTest, IdentitySingleLayer) {
  TowerConfig config;
  config.input_dim = 5;
  config.output_dim = 5;
  config.layers = 1;
  Rng rng(5);
  auto tower = init_tower(config, rng);
  tower.layers[0].weight = Eigen::MatrixXd::Identity(5, 5);
  const auto out = forward(tower, sparse({0, 3}, {0.25, -2.0}, 5));
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(5);
  expected(0) = 0.25;
  expected(3) = -2.0;
  EXPECT_EQ(out, expected);
}

TEST(ForwardTest, DimensionMismatchThrows) {
  Rng rng(6);
  const auto tower = init_tower(small(6), rng);
  EXPECT_THROW(forward(tower, sparse({}, {}, 7)), std::invalid_argument);
}

TEST(ForwardTest, TrainModeNeedsRngAndDropsUnits) {
  Rng rng(7);
  auto config = small(6);
  config.dropout = 0.5;
  const auto tower = init_tower(config, rng);
  const auto in = sparse({0, 1, 2}, {0.5, 0.5, 0.5}, 6);
  EXPECT_THROW(forward(tower, in, Mode::kTrain), std::invalid_argument);
  Rng a(9), b(9);
  EXPECT_EQ(forward(tower, in, Mode::kTrain, &a), forward(tower, in, Mode::kTrain, &b));
}

TEST(ForwardTest, BatchMatchesSingle) {
  Rng rng(8);
  const auto tower = init_tower(small(6), rng);
  const std::vector<SparseVector> inputs{sparse({0}, {1.0}, 6), sparse({2, 5}, {0.3, 0.4}, 6), sparse({}, {}, 6)};
  const auto batch = forward_batch(tower, to_batch(inputs, 6), Mode::kInfer, nullptr);
  for (std::size_t c = 0; c < inputs.size(); ++c) {
    EXPECT_TRUE(batch.col(static_cast<Eigen::Index>(c)).isApprox(forward(tower, inputs[c]), 1e-12) ||
                batch.col(static_cast<Eigen::Index>(c)).isZero());
  }
}

TEST(NormalizeTest, ThreeFour) {
  const auto n = normalize(Eigen::Vector2d(3, 4));
  EXPECT_FALSE(n.degenerate);
  EXPECT_NEAR(n.vector(0), 0.6, 1e-15);
  EXPECT_NEAR(n.vector(1), 0.8, 1e-15);
}

TEST(NormalizeTest, ScaleInvariant) {
  Eigen::VectorXd z(3);
  z << 1.5, -2.0, 0.25;
  const auto a = normalize(z).vector;
  for (double c : {1e-3, 2.0, 7.5, 1e6}) EXPECT_TRUE(normalize(c * z).vector.isApprox(a, 1e-14));
  EXPECT_TRUE(normalize(a).vector.isApprox(a, 1e-15));
}

TEST(NormalizeTest, ZeroFlagged) {
  const auto n = normalize(Eigen::VectorXd::Zero(4));
  EXPECT_TRUE(n.degenerate);
  EXPECT_TRUE(n.vector.isZero());
}

TEST(SemanticScoreTest, Cases) {
  Eigen::VectorXd a(2), b(2);
  a << 0.6, 0.8;
  b << -0.8, 0.6;
  EXPECT_DOUBLE_EQ(semantic_score(a, a), 1.0);
  EXPECT_DOUBLE_EQ(semantic_score(a, b), 0.0);
  EXPECT_DOUBLE_EQ(semantic_score(a, -a), -1.0);
  EXPECT_EQ(semantic_score(a, b), semantic_score(b, a));
  EXPECT_THROW(semantic_score(2.0 * a, b), std::invalid_argument);
  EXPECT_THROW(semantic_score(a, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(SemanticScoreTest, SymmetricOnRandomVectors) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd x(16), y(16);
    for (int j = 0; j < 16; ++j) {
      x(j) = rng.uniform(-1, 1);
      y(j) = rng.uniform(-1, 1);
    }
    const auto a = normalize(x).vector;
    const auto b = normalize(y).vector;
    ASSERT_EQ(semantic_score(a, b), semantic_score(b, a));
    ASSERT_LE(std::abs(semantic_score(a, b)), 1.0 + 1e-12);
  }
}

TEST(CheckpointTest, RoundTripAndFingerprint) {
  const std::vector<std::string> texts{"alpha beta", "gamma delta"};
  const auto vocab = Vocabulary::build(texts);
  TowerConfig config = small(0);
  Rng rng(13);
  const auto encoder = make_dual_encoder(config, vocab, rng);
  const auto dir = testing::scratch_dir("encoder-ckpt");
  save_checkpoint(encoder, dir / "c.bin");
  const auto back = load_checkpoint(dir / "c.bin", vocab);
  ASSERT_EQ(back.task_tower.layers.size(), encoder.task_tower.layers.size());
  for (std::size_t l = 0; l < back.task_tower.layers.size(); ++l) {
    EXPECT_EQ(back.task_tower.layers[l].weight, encoder.task_tower.layers[l].weight);
    EXPECT_EQ(back.server_tower.layers[l].bias, encoder.server_tower.layers[l].bias);
  }
  const std::vector<std::string> other_texts{"alpha beta", "gamma epsilon"};
  const auto other = Vocabulary::build(other_texts);
  EXPECT_THROW(load_checkpoint(dir / "c.bin", other), DataError);
}

TEST(CheckpointTest, TruncatedFileRejected) {
  const std::vector<std::string> texts{"alpha beta"};
  const auto vocab = Vocabulary::build(texts);
  Rng rng(14);
  const auto dir = testing::scratch_dir("encoder-trunc");
  save_checkpoint(make_dual_encoder(small(0), vocab, rng), dir / "c.bin");
  std::filesystem::resize_file(dir / "c.bin", std::filesystem::file_size(dir / "c.bin") / 2);
  EXPECT_THROW(load_checkpoint(dir / "c.bin", vocab), DataError);
}

TEST(DualEncoderTest, IdentityEncoderNormalizesInput) {
  const std::vector<std::string> texts{"alpha beta", "gamma delta"};
  const auto vocab = Vocabulary::build(texts);
  const auto encoder = make_identity_encoder(vocab);
  EXPECT_EQ(encoder.embedding_dim(), vocab.size());
  const auto z = encoder.encode_task(l2_normalize(vectorize("alpha gamma", vocab)).vector);
  EXPECT_NEAR(z.vector.norm(), 1.0, 1e-12);
  EXPECT_NEAR(z.vector(*vocab.index_of("alpha")), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(DualEncoderTest, EncodedOutputsAreUnitNorm) {
  const std::vector<std::string> texts{"alpha beta", "gamma delta", "beta gamma"};
  const auto vocab = Vocabulary::build(texts);
  Rng rng(15);
  const auto encoder = make_dual_encoder(small(0), vocab, rng);
  for (const auto& text : texts) {
    const auto input = l2_normalize(vectorize(text, vocab)).vector;
    EXPECT_NEAR(encoder.encode_task(input).vector.norm(), 1.0, 1e-6);
    EXPECT_NEAR(encoder.encode_server(input).vector.norm(), 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace mcprec
