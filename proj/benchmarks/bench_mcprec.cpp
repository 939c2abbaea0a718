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

#include <memory>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/encoder.hpp"
#include "mcprec/lexical.hpp"
#include "mcprec/random.hpp"
#include "mcprec/recommender.hpp"
#include "mcprec/training.hpp"

namespace mcprec {
namespace {

constexpr std::size_t kServers = 5642;

std::string random_text(Rng& rng, std::size_t words, std::size_t vocabulary) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += fmt::format("w{}", rng.index(vocabulary));
  }
  return out;
}

struct Corpus {
  ServerCorpus servers;
  std::vector<std::string> texts;
  Vocabulary vocabulary;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Rng rng(11);
    std::vector<McpRecord> records;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < kServers; ++i) {
      McpRecord r;
      r.id = fmt::format("srv-{:05}", i);
      r.name = random_text(rng, 3, 8000);
      r.description = random_text(rng, 40, 8000);
      r.category = fmt::format("cat{}", rng.index(20));
      r.subcategory = fmt::format("sub{}", rng.index(5));
      records.push_back(std::move(r));
      texts.push_back(concat_text(records.back()));
    }
    auto vocabulary = Vocabulary::build(texts);
    return Corpus{ServerCorpus(std::move(records)), std::move(texts), std::move(vocabulary)};
  }();
  return c;
}

void BM_Vectorize(benchmark::State& state) {
  const auto& c = corpus();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vectorize(c.texts[i++ % c.texts.size()], c.vocabulary));
  }
}
BENCHMARK(BM_Vectorize);

void BM_TowerForward(benchmark::State& state) {
  const auto& c = corpus();
  Rng rng(3);
  const auto encoder = make_dual_encoder(TowerConfig{}, c.vocabulary, rng);
  const auto input = vectorize(c.texts[0], c.vocabulary);
  for (auto _ : state) benchmark::DoNotOptimize(encoder.encode_task(input));
}
BENCHMARK(BM_TowerForward);

void BM_Recommend(benchmark::State& state) {
  const auto& c = corpus();
  Rng rng(5);
  const auto encoder = make_dual_encoder(TowerConfig{}, c.vocabulary, rng);
  auto index = std::make_shared<const EmbeddingIndex>(encode_corpus(encoder, c.servers, c.vocabulary));
  auto taxonomy = std::make_shared<Taxonomy>();
  for (int category = 0; category < 20; ++category) {
    for (int sub = 0; sub < 5; ++sub) taxonomy->add(fmt::format("cat{}", category), fmt::format("sub{}", sub));
  }
  const Engine engine(c.servers, c.vocabulary, encoder, index, StructuralScorer(std::move(taxonomy)));
  TaskQuery query;
  query.text = random_text(rng, 30, 8000);
  query.attributes.category = "cat3";
  query.attributes.subcategory = "sub1";
  for (auto _ : state) benchmark::DoNotOptimize(recommend(engine, query, RecommendConfig{}));
  state.counters["servers"] = static_cast<double>(kServers);
}
BENCHMARK(BM_Recommend)->Unit(benchmark::kMillisecond);

void BM_ContrastiveLoss(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd tasks = Eigen::MatrixXd::Random(256, batch);
  Eigen::MatrixXd servers = Eigen::MatrixXd::Random(256, batch);
  tasks.colwise().normalize();
  servers.colwise().normalize();
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss(tasks, servers, 0.07));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace mcprec

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
