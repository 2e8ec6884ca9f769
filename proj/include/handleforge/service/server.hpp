// Copyright 2026 The HandleForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <httplib.h>

#include <memory>
#include <string>
#include <thread>

#include "api.hpp"

namespace hf::service {

/// HTTP/1.1 front end for a Service. Requests are served concurrently by
/// httplib's thread pool.
class HttpServer {
 public:
  explicit HttpServer(Service& service) : service_(service) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const Response r = service_.handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server_.Get(".*", route);
    server_.Post(".*", route);
    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  }

  ~HttpServer() { stop(); }

  /// Binds and blocks until stop() is called from another thread.
  void serve(const std::string& host, int port) {
    require(server_.bind_to_port(host, port), ErrorKind::io,
            "cannot bind " + host + ":" + std::to_string(port));
    server_.listen_after_bind();
  }

  /// Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1") {
    const int port = server_.bind_to_any_port(host);
    require(port > 0, ErrorKind::io, "cannot bind an ephemeral port on " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  Service& service_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace hf::service
