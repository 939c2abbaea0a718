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

#include "mcprec/service.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcprec/error.hpp"
#include "mcprec/text.hpp"

namespace mcprec {
namespace {

using ojson = nlohmann::ordered_json;

ServiceResponse error(int status, std::string message) { return {status, ojson{{"error", std::move(message)}}}; }

std::string hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::string pool_id(const Engine& engine, const CandidatePool& pool) {
  std::string key = hex(engine.snapshot_id());
  for (const auto& id : pool.ids()) {
    key += '\n';
    key += id;
  }
  return hex(fnv1a(key));
}

ParserContext parser_context(const Engine& engine, const std::vector<std::string>& extra_themes) {
  ParserContext context;
  context.vocabulary = &engine.vocabulary();
  context.taxonomy = &engine.scorer().taxonomy();
  context.themes = engine.scorer().rules().themes();
  for (const auto& theme : extra_themes) context.themes.push_back(fold_categorical(theme));
  std::sort(context.themes.begin(), context.themes.end());
  context.themes.erase(std::unique(context.themes.begin(), context.themes.end()), context.themes.end());
  return context;
}

}  // namespace

RecommendationService::RecommendationService(ServiceConfig config, std::shared_ptr<const RerankBackend> backend,
                                             std::shared_ptr<const DraftGenerator> generator)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      generator_(generator ? std::move(generator) : std::make_shared<const TemplateDraftGenerator>()),
      id_source_(std::random_device{}()) {
  RecommendConfig{config_.k1, config_.k2, config_.top_k, config_.fusion}.validate();
  if (!config_.session_log.empty()) {
    replay_log();
    log_.open(config_.session_log, std::ios::app);
    if (!log_) throw ConfigError(fmt::format("cannot open session log {}", config_.session_log.string()));
  }
}

void RecommendationService::set_engine(std::shared_ptr<const Engine> engine) {
  std::lock_guard lock(engine_mutex_);
  engine_ = std::move(engine);
}

std::shared_ptr<const Engine> RecommendationService::engine() const {
  std::lock_guard lock(engine_mutex_);
  return engine_;
}

std::size_t RecommendationService::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<RecommendationService::Session> RecommendationService::new_session() {
  auto session = std::make_shared<Session>();
  std::lock_guard lock(sessions_mutex_);
  do {
    session->id = hex(id_source_());
  } while (sessions_.count(session->id));
  sessions_.emplace(session->id, session);
  return session;
}

std::shared_ptr<RecommendationService::Session> RecommendationService::find_session(std::string_view id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void RecommendationService::persist(const ojson& record) {
  if (!log_.is_open()) return;
  std::lock_guard lock(log_mutex_);
  log_ << record.dump() << '\n';
  log_.flush();
}

void RecommendationService::replay_log() {
  std::ifstream in(config_.session_log);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto record = ojson::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("session_id")) {
      throw DataError(fmt::format("{}:{}: malformed session record", config_.session_log.string(), number));
    }
    const auto id = record["session_id"].get<std::string>();
    auto& session = sessions_[id];
    if (!session) {
      session = std::make_shared<Session>();
      session->id = id;
    }
    if (!record.contains("turn")) continue;
    try {
      if (record.contains("spec") && !record["spec"].is_null()) {
        session->spec = StructuredTaskSpec::from_json(record["spec"]);
      }
    } catch (const std::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", config_.session_log.string(), number, e.what()));
    }
    session->last_pool = record.value("pool_id", std::string());
    session->turns.push_back({{"turn", record["turn"]}, {"request", record["request"]}, {"response", record["response"]}});
  }
  spdlog::info("restored {} session(s) from {}", sessions_.size(), config_.session_log.string());
}

ServiceResponse RecommendationService::create_session() {
  auto session = new_session();
  persist({{"session_id", session->id}});
  return {201, ojson{{"session_id", session->id}}};
}

ServiceResponse RecommendationService::session(std::string_view id) const {
  auto session = find_session(id);
  if (!session) return error(404, fmt::format("unknown session {}", id));
  std::lock_guard lock(session->mutex);
  ojson out;
  out["session_id"] = session->id;
  out["spec"] = session->spec ? session->spec->to_json() : ojson(nullptr);
  out["turns"] = session->turns;
  return {200, std::move(out)};
}

ServiceResponse RecommendationService::health() const {
  auto engine = this->engine();
  if (!engine) return {503, ojson{{"status", "not_ready"}}};
  return {200, ojson{{"status", "ok"}, {"snapshot", hex(engine->snapshot_id())}, {"servers", engine->servers().size()}}};
}

ServiceResponse RecommendationService::recommend(const nlohmann::json& request) {
  if (!request.is_object()) return error(400, "request body must be a JSON object");
  std::string text;
  std::optional<std::string> session_id;
  ConstraintOverrides overrides;
  bool has_overrides = false;
  try {
    if (auto it = request.find("task_text"); it != request.end() && !it->is_null()) {
      if (!it->is_string()) return error(400, "task_text must be a string");
      text = trim(it->get<std::string>());
    }
    if (auto it = request.find("session_id"); it != request.end() && !it->is_null()) {
      if (!it->is_string()) return error(400, "session_id must be a string");
      session_id = it->get<std::string>();
    }
    if (auto it = request.find("overrides"); it != request.end() && !it->is_null()) {
      overrides = ConstraintOverrides::from_json(*it);
      has_overrides = true;
    }
  } catch (const std::exception& e) {
    return error(400, e.what());
  }

  auto engine = this->engine();
  if (!engine) return error(503, "engine is not loaded");

  std::shared_ptr<Session> session;
  if (session_id) {
    session = find_session(*session_id);
    if (!session) return error(404, fmt::format("unknown session {}", *session_id));
  }
  if (text.empty()) {
    const bool refinable = session && has_overrides;
    if (!refinable) return error(400, "task_text must be a non-empty string");
  }
  if (!session) {
    session = new_session();
    persist({{"session_id", session->id}});
  }

  std::lock_guard lock(session->mutex);
  if (text.empty() && !session->spec) return error(400, "task_text must be a non-empty string");
  const auto context = parser_context(*engine, config_.themes);
  const RuleBasedParser parser(context);
  const StructuredTaskSpec* previous = session->spec ? &*session->spec : nullptr;
  StructuredTaskSpec spec = text.empty() ? *previous : parser.parse(text, previous);
  if (has_overrides) apply(spec, overrides);

  ojson response;
  response["session_id"] = session->id;
  response["turn"] = session->turns.size() + 1;
  response["spec"] = spec.to_json();
  response["recommendations"] = ojson::array();
  std::string pool;
  if (!spec.complete()) {
    response["status"] = "clarification";
    response["clarifications"] = spec.clarifications;
  } else {
    const TaskQuery query{session->id, "", spec.query_text(), spec.attributes()};
    const RecommendConfig rc{config_.k1, config_.k2, config_.top_k, config_.fusion};
    Recommendation recommendation;
    try {
      recommendation = mcprec::recommend(*engine, query, rc, backend_.get(), config_.call);
    } catch (const std::exception& e) {
      spdlog::error("recommendation failed: {}", e.what());
      return error(500, "recommendation failed");
    }
    const DraftInput input{&engine->servers(), &recommendation, spec.intent, config_.top_k};
    const auto checked = assemble_evidence(input, *generator_);
    response["status"] = std::string(to_string(recommendation.list.status));
    if (!recommendation.list.reason.empty()) response["reason"] = recommendation.list.reason;
    response["reliability"] = std::string(to_string(checked.reliability));
    for (const auto& card : checked.draft.cards) response["recommendations"].push_back(card.to_json());
    pool = pool_id(*engine, recommendation.pool);
    response["pool_id"] = pool;
    response["snapshot"] = hex(engine->snapshot_id());
  }

  session->spec = spec;
  session->last_pool = pool;
  const auto turn = response["turn"];
  const auto logged = ojson::parse(request.dump());
  session->turns.push_back({{"turn", turn}, {"request", logged}, {"response", response}});
  persist({{"session_id", session->id},
           {"turn", turn},
           {"spec", spec.to_json()},
           {"pool_id", pool},
           {"request", logged},
           {"response", response}});
  return {200, std::move(response)};
}

ServiceResponse RecommendationService::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    if (path == "/health") {
      return method == "GET" ? health() : error(405, "method not allowed");
    }
    if (path == "/sessions") {
      return method == "POST" ? create_session() : error(405, "method not allowed");
    }
    if (path.rfind("/sessions/", 0) == 0) {
      const auto id = path.substr(10);
      if (id.empty() || id.find('/') != std::string_view::npos) return error(404, "not found");
      return method == "GET" ? session(id) : error(405, "method not allowed");
    }
    if (path == "/recommend") {
      if (method != "POST") return error(405, "method not allowed");
      const auto request = nlohmann::json::parse(body, nullptr, false);
      if (request.is_discarded()) return error(400, "request body is not valid JSON");
      return recommend(request);
    }
    return error(404, "not found");
  } catch (const std::exception& e) {
    spdlog::error("request {} {} failed: {}", method, path, e.what());
    return error(500, "internal error");
  }
}

}  // namespace mcprec
