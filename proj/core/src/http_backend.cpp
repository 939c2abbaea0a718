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

#include "mcprec/http_backend.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mcprec/error.hpp"

namespace mcprec {

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("re-ranker endpoint must be an http(s) URL");
  const auto scheme = config_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("re-ranker endpoint must be an http(s) URL");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  if (origin_.size() <= scheme_end + 3) throw ConfigError("re-ranker endpoint has no host");
  if (config_.model.empty()) throw ConfigError("re-ranker model name is required");
  if (config_.timeout.count() <= 0) throw ConfigError("re-ranker timeout must be positive");
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError(fmt::format("environment variable {} is not set", config_.api_key_env));
    }
    api_key_ = key;
  }
}

std::string HttpChatBackend::request_body(const std::string& prompt, const CallOptions& options) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["temperature"] = options.temperature;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  return body.dump();
}

BackendReply HttpChatBackend::parse_reply(const std::string& body) {
  const auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return {false, {}, "reply is not JSON"};
  try {
    return {true, parsed.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
  } catch (const nlohmann::json::exception&) {
    return {false, {}, "reply has no choices[0].message.content"};
  }
}

BackendReply HttpChatBackend::complete(const RerankRequest&, const std::string& prompt,
                                       const CallOptions& options) const {
  const auto timeout = std::min(options.timeout, config_.timeout);
  httplib::Client client(origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  if (config_.debug) spdlog::info("re-ranker prompt:\n{}", prompt);
  auto response = client.Post(path_, headers, request_body(prompt, options), "application/json");
  if (!response) return {false, {}, httplib::to_string(response.error())};
  if (config_.debug) spdlog::info("re-ranker reply ({}):\n{}", response->status, response->body);
  if (response->status != 200) return {false, {}, fmt::format("HTTP status {}", response->status)};
  return parse_reply(response->body);
}

}  // namespace mcprec
