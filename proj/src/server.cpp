// Copyright 2026 The flicc-workbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flicc/error.hpp"
#include "flicc/inference.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen.
#include <httplib.h>

namespace flicc::inference {
namespace {

using json = nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", error_code_name(code)}, {"message", message}}}});
}

}  // namespace

struct Server::Impl {
  httplib::Server http;
};

Server::Server(std::shared_ptr<const Predictor> predictor, ServeOptions options)
    : predictor_(std::move(predictor)), options_(std::move(options)), impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  const std::size_t threads = std::max<std::size_t>(1, options_.threads);
  // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which would
  // let a second server silently share the port.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  http.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                            {"Access-Control-Allow-Headers", "Content-Type"}});
  http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  const auto predictor_ref = predictor_;
  http.Get("/health", [predictor_ref](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"model_version", predictor_ref->model_version()},
                         {"api_version", kApiVersion}});
  });
  const std::string labels = labels_json().dump();
  http.Get("/labels", [labels](const httplib::Request&, httplib::Response& res) {
    res.set_content(labels, "application/json");
  });
  http.Post("/predict", [predictor_ref](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      send_error(res, 400, ErrorCode::kParseError, "request body is not JSON");
      return;
    }
    if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
      send_error(res, 400, ErrorCode::kInvalidArgument, "expected {\"text\": string}");
      return;
    }
    try {
      send_json(res, 200, predictor_ref->predict(body["text"].get<std::string>()).to_json());
    } catch (const Error& e) {
      send_error(res, e.code() == ErrorCode::kEmptyText ? 400 : 500, e.code(), e.what());
    }
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", {{"code", "InternalError"}, {"message", message}}}}.dump(),
                    "application/json");
  });
}

Server::~Server() { stop(); }

void Server::bind() {
  auto& http = impl_->http;
  if (options_.port == 0) {
    port_ = http.bind_to_any_port(options_.host);
  } else {
    port_ = http.bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kBindFailure,
                "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
}

void Server::start() {
  bind();
  thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

void Server::run() {
  bind();
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_) impl_->http.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace flicc::inference
