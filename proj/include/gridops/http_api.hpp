/*
 * Copyright 2026 The gridops Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <memory>
#include <string>

#include "gridops/core.hpp"
#include "gridops/error.hpp"

namespace gridops {

/// HTTP status for an error code.
int http_status(ErrorCode code);

/// JSON documents as served: two-space indent plus a trailing newline.
std::string render(const nlohmann::json& document);

/// The /api/v1 surface over a Core. Uses TLS with client-certificate
/// verification when the config names a certificate, key and client CA;
/// plain HTTP otherwise (only sensible together with the trusted header).
class HttpApi {
 public:
  explicit HttpApi(Core& core);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds the listen address from the config; port 0 picks a free port.
  /// Returns the bound port.
  int bind();
  int bind(const std::string& host, int port);
  /// Serves until stop(); runs the probe scheduler alongside when asked.
  void serve(bool run_scheduler);
  /// serve() on a background thread; returns once the server accepts.
  void start(bool run_scheduler = false);
  void stop();
  bool tls() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gridops
