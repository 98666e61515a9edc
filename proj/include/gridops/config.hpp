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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridops/sla.hpp"
#include "gridops/time.hpp"

namespace gridops {

/// Values understood by the config reader: the TOML subset of strings,
/// integers, floats, booleans and flat arrays of strings.
using ConfigValue = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;
using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

/// Parses a TOML-subset document into section -> key -> value.
/// Throws CONFIG_ERROR with the line number on anything it cannot read.
ConfigTable parse_toml(std::string_view text);

struct Config {
  // [server]
  std::string listen = "127.0.0.1:8443";
  std::string tls_cert;
  std::string tls_key;
  std::string tls_client_ca;
  /// Header carrying the client DN from a TLS-terminating proxy; empty disables it.
  std::string trusted_proxy_header;
  // [sla]
  SlaConfig sla;
  // [probes]
  std::size_t probe_parallelism = 16;
  Minutes default_period{30};
  bool simulate_probes = true;
  Seconds scheduler_interval{60};
  // [alarms]
  std::string alarm_rules_file;
  // [store]
  std::string data_dir = "gridops-data";
  std::int64_t compact_every = 1000;
  // [registry]
  std::vector<std::string> root_admins;
  // [operations]
  std::string rota_file;
  // [console]
  std::int64_t console_refresh_s = 60;

  std::string listen_host() const;
  int listen_port() const;
};

/// Relative file paths are resolved against base_dir.
Config config_from_table(const ConfigTable& table, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// The --config flag when given, else $GRIDOPS_CONFIG, else none.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string>& flag);

}  // namespace gridops
