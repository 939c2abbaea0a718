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

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcprec/evidence.hpp"
#include "mcprec/recommender.hpp"
#include "mcprec/request_parser.hpp"
#include "mcprec/rerank.hpp"

namespace mcprec {

struct ServiceConfig {
  std::size_t top_k = 5;
  std::size_t k1 = 20;
  std::size_t k2 = 50;
  FusionWeights fusion;
  CallOptions call;
  std::filesystem::path session_log;  // append-only JSONL; empty keeps sessions in memory
  std::vector<std::string> themes;    // extra theme names for the parser
};

struct ServiceResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

class RecommendationService {
 public:
  // Replays `config.session_log` when it exists. Throws DataError on a
  // malformed log and ConfigError on an invalid configuration.
  explicit RecommendationService(ServiceConfig config, std::shared_ptr<const RerankBackend> backend = nullptr,
                                 std::shared_ptr<const DraftGenerator> generator = nullptr);

  // Swaps the engine snapshot between requests; null marks the service as
  // not ready.
  void set_engine(std::shared_ptr<const Engine> engine);
  std::shared_ptr<const Engine> engine() const;

  // Routes one request. Never throws; errors become 4xx/5xx bodies.
  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body);

  ServiceResponse create_session();
  ServiceResponse recommend(const nlohmann::json& request);
  ServiceResponse session(std::string_view id) const;
  ServiceResponse health() const;

  std::size_t session_count() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Session {
    std::mutex mutex;
    std::string id;
    std::optional<StructuredTaskSpec> spec;
    nlohmann::ordered_json turns = nlohmann::ordered_json::array();
    std::string last_pool;
  };

  std::shared_ptr<Session> new_session();
  std::shared_ptr<Session> find_session(std::string_view id) const;
  void persist(const nlohmann::ordered_json& record);
  void replay_log();

  ServiceConfig config_;
  std::shared_ptr<const RerankBackend> backend_;
  std::shared_ptr<const DraftGenerator> generator_;

  mutable std::mutex engine_mutex_;
  std::shared_ptr<const Engine> engine_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::mt19937_64 id_source_;

  std::mutex log_mutex_;
  std::ofstream log_;
};

}  // namespace mcprec
