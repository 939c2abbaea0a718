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

#include <chrono>
#include <string>

#include "mcprec/rerank.hpp"

namespace mcprec {

// OpenAI-compatible chat-completions endpoint.
struct HttpBackendConfig {
  std::string endpoint;                      // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key_env = "MCPREC_API_KEY";  // empty: send no credential
  std::chrono::milliseconds timeout{30000};
  bool debug = false;                        // log raw prompts and replies
};

class HttpChatBackend final : public RerankBackend {
 public:
  // Validates the configuration and reads the credential; throws ConfigError
  // so misconfiguration surfaces at startup.
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string_view name() const override { return "external"; }
  BackendReply complete(const RerankRequest& request, const std::string& prompt,
                        const CallOptions& options) const override;

  // Builds the request body; exposed for tests.
  std::string request_body(const std::string& prompt, const CallOptions& options) const;
  // Extracts choices[0].message.content from a reply body.
  static BackendReply parse_reply(const std::string& body);

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
};

}  // namespace mcprec
