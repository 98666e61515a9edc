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

#include "gridops/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::Registry: return "registry";
    case Namespace::ProbeResults: return "probe_results";
    case Namespace::Usage: return "usage";
    case Namespace::Wms: return "wms";
    case Namespace::Tickets: return "tickets";
    case Namespace::Audit: return "audit";
  }
  return "?";
}

bool is_append_only(Namespace ns) {
  return ns == Namespace::ProbeResults || ns == Namespace::Wms || ns == Namespace::Audit;
}

Store::Store(fs::path data_dir) : dir_(std::move(data_dir)) {
  for (auto ns : kAllNamespaces) spaces_[ns];
  if (dir_.empty()) return;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::StoreIo, "cannot create data directory " + dir_.string() + ": " + ec.message());
  for (auto ns : kAllNamespaces) load(ns);
}

Store::~Store() {
  for (auto& [ns, space] : spaces_) {
    if (space.file) std::fclose(space.file);
  }
}

fs::path Store::log_path(Namespace ns) const { return dir_ / (std::string(to_string(ns)) + ".log"); }
fs::path Store::snapshot_path(Namespace ns) const { return dir_ / (std::string(to_string(ns)) + ".snapshot"); }

void Store::load(Namespace ns) {
  Space& space = spaces_[ns];
  const auto read_lines = [&](const fs::path& path, auto&& handle) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        // A torn final line from a crash mid-write is dropped; anything else is corruption.
        if (in.peek() == std::char_traits<char>::eof()) break;
        fail(ErrorCode::StoreIo, path.string() + ":" + std::to_string(number) + ": corrupt record");
      }
      handle(j);
    }
  };
  if (is_append_only(ns)) {
    read_lines(log_path(ns), [&](const json& j) { space.log.push_back(j); });
  } else {
    read_lines(snapshot_path(ns), [&](const json& j) { space.values[j.at("k").get<std::string>()] = j.at("v"); });
    read_lines(log_path(ns), [&](const json& j) {
      const auto key = j.at("k").get<std::string>();
      if (j.value("erase", false)) {
        space.values.erase(key);
      } else {
        space.values[key] = j.at("v");
      }
    });
  }
  space.file = std::fopen(log_path(ns).c_str(), "ab");
  if (!space.file) fail(ErrorCode::StoreIo, "cannot open " + log_path(ns).string() + ": " + std::strerror(errno));
}

void Store::write_lines(Namespace ns, const std::string& lines) {
  if (dir_.empty() || lines.empty()) return;
  std::FILE* f = spaces_[ns].file;
  if (std::fwrite(lines.data(), 1, lines.size(), f) != lines.size() || std::fflush(f) != 0 ||
      ::fsync(::fileno(f)) != 0) {
    fail(ErrorCode::StoreIo, "write to " + log_path(ns).string() + " failed: " + std::strerror(errno));
  }
}

void Store::append(Namespace ns, const json& record) {
  if (!is_append_only(ns)) {
    fail(ErrorCode::InvalidArgument, std::string(to_string(ns)) + " is a keyed namespace; use upsert");
  }
  std::lock_guard lock(mutex_);
  write_lines(ns, record.dump() + "\n");
  spaces_[ns].log.push_back(record);
}

void Store::upsert(Namespace ns, const std::string& key, const json& value) {
  if (is_append_only(ns)) {
    fail(ErrorCode::AppendOnlyViolation, std::string(to_string(ns)) + " is append-only");
  }
  std::lock_guard lock(mutex_);
  write_lines(ns, json{{"k", key}, {"v", value}}.dump() + "\n");
  spaces_[ns].values[key] = value;
}

void Store::erase(Namespace ns, const std::string& key) {
  if (is_append_only(ns)) {
    fail(ErrorCode::AppendOnlyViolation, std::string(to_string(ns)) + " is append-only");
  }
  std::lock_guard lock(mutex_);
  write_lines(ns, json{{"k", key}, {"erase", true}}.dump() + "\n");
  spaces_[ns].values.erase(key);
}

void Store::append_batch(Namespace ns, std::span<const json> records) {
  if (!is_append_only(ns)) {
    fail(ErrorCode::InvalidArgument, std::string(to_string(ns)) + " is a keyed namespace; use upsert");
  }
  std::string lines;
  for (const auto& r : records) lines += r.dump() + "\n";
  std::lock_guard lock(mutex_);
  write_lines(ns, lines);
  auto& log = spaces_[ns].log;
  log.insert(log.end(), records.begin(), records.end());
}

void Store::upsert_batch(Namespace ns, std::span<const std::pair<std::string, json>> entries) {
  if (is_append_only(ns)) {
    fail(ErrorCode::AppendOnlyViolation, std::string(to_string(ns)) + " is append-only");
  }
  std::string lines;
  for (const auto& [key, value] : entries) lines += json{{"k", key}, {"v", value}}.dump() + "\n";
  std::lock_guard lock(mutex_);
  write_lines(ns, lines);
  for (const auto& [key, value] : entries) spaces_[ns].values[key] = value;
}

std::vector<json> Store::records(Namespace ns) const {
  std::lock_guard lock(mutex_);
  return spaces_.at(ns).log;
}

std::map<std::string, json> Store::entries(Namespace ns) const {
  std::lock_guard lock(mutex_);
  return spaces_.at(ns).values;
}

std::optional<json> Store::get(Namespace ns, const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto& values = spaces_.at(ns).values;
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::size_t Store::count(Namespace ns) const {
  std::lock_guard lock(mutex_);
  const auto& space = spaces_.at(ns);
  return is_append_only(ns) ? space.log.size() : space.values.size();
}

void Store::compact() {
  if (dir_.empty()) return;
  std::lock_guard lock(mutex_);
  for (auto ns : kAllNamespaces) {
    if (is_append_only(ns)) continue;
    Space& space = spaces_[ns];
    const fs::path tmp = snapshot_path(ns).string() + ".tmp";
    {
      std::FILE* out = std::fopen(tmp.c_str(), "wb");
      if (!out) fail(ErrorCode::StoreIo, "cannot write " + tmp.string());
      bool ok = true;
      for (const auto& [key, value] : space.values) {
        const std::string line = json{{"k", key}, {"v", value}}.dump() + "\n";
        ok = ok && std::fwrite(line.data(), 1, line.size(), out) == line.size();
      }
      ok = ok && std::fflush(out) == 0 && ::fsync(::fileno(out)) == 0;
      std::fclose(out);
      if (!ok) fail(ErrorCode::StoreIo, "cannot write " + tmp.string());
    }
    fs::rename(tmp, snapshot_path(ns));
    std::fclose(space.file);
    space.file = std::fopen(log_path(ns).c_str(), "wb");
    if (!space.file) fail(ErrorCode::StoreIo, "cannot reopen " + log_path(ns).string());
  }
}

std::optional<std::string> Store::health() const {
  if (dir_.empty()) return std::nullopt;
  std::error_code ec;
  if (!fs::is_directory(dir_, ec)) return "data directory " + dir_.string() + " is missing";
  if (::access(dir_.c_str(), W_OK) != 0) return "data directory " + dir_.string() + " is not writable";
  return std::nullopt;
}

}  // namespace gridops
