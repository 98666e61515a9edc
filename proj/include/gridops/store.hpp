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
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gridops {

enum class Namespace { Registry, ProbeResults, Usage, Wms, Tickets, Audit };

std::string_view to_string(Namespace ns);
bool is_append_only(Namespace ns);

inline constexpr Namespace kAllNamespaces[] = {Namespace::Registry, Namespace::Usage,  Namespace::Tickets,
                                               Namespace::ProbeResults, Namespace::Wms, Namespace::Audit};

/// Append-log plus snapshot persistence, one log file per namespace.
///
/// Append-only namespaces accept append() only. Keyed namespaces accept
/// upsert()/erase(); each call is one log line, so a single-record upsert is
/// atomic. Every write is flushed and fsync'd before returning. An empty
/// directory path keeps everything in memory.
class Store {
 public:
  explicit Store(std::filesystem::path data_dir = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void append(Namespace ns, const nlohmann::json& record);
  void upsert(Namespace ns, const std::string& key, const nlohmann::json& value);
  void erase(Namespace ns, const std::string& key);
  /// Many records under one flush and fsync.
  void append_batch(Namespace ns, std::span<const nlohmann::json> records);
  void upsert_batch(Namespace ns, std::span<const std::pair<std::string, nlohmann::json>> entries);

  /// Records of an append-only namespace in append order.
  std::vector<nlohmann::json> records(Namespace ns) const;
  /// Current values of a keyed namespace ordered by key.
  std::map<std::string, nlohmann::json> entries(Namespace ns) const;
  std::optional<nlohmann::json> get(Namespace ns, const std::string& key) const;
  std::size_t count(Namespace ns) const;

  /// Folds the log of a keyed namespace into its snapshot file and truncates
  /// the log. Append-only namespaces are left untouched.
  void compact();

  /// Empty when the data directory is writable.
  std::optional<std::string> health() const;
  const std::filesystem::path& data_dir() const { return dir_; }
  bool persistent() const { return !dir_.empty(); }

 private:
  struct Space {
    std::vector<nlohmann::json> log;
    std::map<std::string, nlohmann::json> values;
    std::FILE* file = nullptr;
  };

  void load(Namespace ns);
  void write_lines(Namespace ns, const std::string& lines);
  std::filesystem::path log_path(Namespace ns) const;
  std::filesystem::path snapshot_path(Namespace ns) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<Namespace, Space> spaces_;
};

}  // namespace gridops
