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

#include <httplib.h>

#include <cstdlib>

#include "flicc/error.hpp"
#include "flicc/llm_baseline.hpp"

namespace flicc::llm {
namespace {

class HttpsTransport final : public Transport {
 public:
  explicit HttpsTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const HttpRequest& request) override {
    const auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "URL lacks a scheme: " + request.url);
    }
    const auto path_start = request.url.find('/', scheme_end + 3);
    const std::string origin = request.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    auto result = client.Post(path, headers, request.body, content_type);
    if (!result) {
      throw Error(ErrorCode::kProviderError,
                  "request to " + origin + " failed: " + httplib::to_string(result.error()));
    }
    HttpResponse response{result->status, result->body, std::nullopt};
    if (result->has_header("Retry-After")) {
      const std::string value = result->get_header_value("Retry-After");
      char* end = nullptr;
      const double seconds = std::strtod(value.c_str(), &end);
      if (end != value.c_str() && seconds >= 0) response.retry_after_seconds = seconds;
    }
    return response;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_https_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttpsTransport>(timeout);
}

}  // namespace flicc::llm
