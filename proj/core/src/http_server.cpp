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

#include "mcprec/http_server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace mcprec {

struct HttpServer::Impl {
  RecommendationService& service;
  HttpServerOptions options;
  httplib::Server server;

  Impl(RecommendationService& s, HttpServerOptions o) : service(s), options(std::move(o)) {}

  void reply(const httplib::Request& request, httplib::Response& response) {
    const auto result = service.handle(request.method, request.path, request.body);
    response.status = result.status;
    response.set_content(result.body.dump(), "application/json");
  }
};

HttpServer::HttpServer(RecommendationService& service, HttpServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& server = impl_->server;
  const auto threads = impl_->options.worker_threads;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server.set_default_headers({{"Access-Control-Allow-Origin", impl_->options.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  const auto handler = [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
    impl->reply(req, res);
  };
  server.Get(R"(/.*)", handler);
  server.Post(R"(/.*)", handler);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace mcprec
