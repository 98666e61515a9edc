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

#include "gridops/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gridops/error.hpp"

namespace gridops {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_fail(std::size_t line, const std::string& message) {
  fail(ErrorCode::ConfigError, "config line " + std::to_string(line) + ": " + message);
}

class ValueReader {
 public:
  ValueReader(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ConfigValue read_value() {
    skip_space();
    if (pos_ >= text_.size()) config_fail(line_, "missing value");
    const char c = text_[pos_];
    if (c == '"' || c == '\'') return read_string();
    if (c == '[') return read_array();
    return read_scalar();
  }

  void expect_end() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] != '#') config_fail(line_, "trailing characters after value");
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string read_string() {
    const char quote = text_[pos_++];
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == quote) return out;
      if (c == '\\' && quote == '"') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: config_fail(line_, std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    config_fail(line_, "unterminated string");
  }

  std::vector<std::string> read_array() {
    ++pos_;
    std::vector<std::string> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) config_fail(line_, "unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      if (text_[pos_] != '"' && text_[pos_] != '\'') config_fail(line_, "arrays may only hold strings");
      out.push_back(read_string());
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
    }
  }

  ConfigValue read_scalar() {
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != '#' && text_[end] != ' ' && text_[end] != '\t') ++end;
    std::string token(text_.substr(pos_, end - pos_));
    pos_ = end;
    if (token == "true") return true;
    if (token == "false") return false;
    std::erase(token, '_');
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), i);
    if (ec == std::errc() && p == token.data() + token.size()) return i;
    char* stop = nullptr;
    const double d = std::strtod(token.c_str(), &stop);
    if (!token.empty() && stop == token.c_str() + token.size()) return d;
    config_fail(line_, "cannot read value '" + token + "'");
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

template <typename T>
const T* lookup(const ConfigTable& table, const std::string& section, const std::string& key) {
  const auto s = table.find(section);
  if (s == table.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  if (const auto* v = std::get_if<T>(&k->second)) return v;
  fail(ErrorCode::ConfigError, "[" + section + "] " + key + " has the wrong type");
}

double number(const ConfigTable& table, const std::string& section, const std::string& key, double fallback) {
  const auto s = table.find(section);
  if (s == table.end() || !s->second.contains(key)) return fallback;
  const auto& v = s->second.at(key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  fail(ErrorCode::ConfigError, "[" + section + "] " + key + " must be a number");
}

std::string path_value(const ConfigTable& table, const std::string& section, const std::string& key,
                       const std::filesystem::path& base, const std::string& fallback) {
  const auto* v = lookup<std::string>(table, section, key);
  const std::string& text = v ? *v : fallback;
  if (text.empty()) return {};
  std::filesystem::path p(text);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.string();
}

}  // namespace

ConfigTable parse_toml(std::string_view text) {
  ConfigTable table;
  std::string section;
  table[section];
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      const auto rest = close == std::string_view::npos ? std::string_view{} : trim(line.substr(close + 1));
      if (close == std::string_view::npos || (!rest.empty() && rest.front() != '#')) {
        config_fail(line_no, "malformed section header");
      }
      section = std::string(trim(line.substr(1, close - 1)));
      if (section.empty()) config_fail(line_no, "empty section name");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_fail(line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) config_fail(line_no, "empty key");
    ValueReader reader(line.substr(eq + 1), line_no);
    auto value = reader.read_value();
    reader.expect_end();
    if (!table[section].emplace(key, std::move(value)).second) config_fail(line_no, "duplicate key " + key);
  }
  return table;
}

Config config_from_table(const ConfigTable& table, const std::filesystem::path& base) {
  Config c;
  if (const auto* v = lookup<std::string>(table, "server", "listen")) c.listen = *v;
  c.tls_cert = path_value(table, "server", "tls_cert", base, "");
  c.tls_key = path_value(table, "server", "tls_key", base, "");
  c.tls_client_ca = path_value(table, "server", "tls_client_ca", base, "");
  if (const auto* v = lookup<std::string>(table, "server", "trusted_proxy_header")) c.trusted_proxy_header = *v;

  c.sla.threshold = number(table, "sla", "threshold", c.sla.threshold);
  if (c.sla.threshold < 0.0 || c.sla.threshold > 1.0) fail(ErrorCode::ConfigError, "[sla] threshold must lie in [0, 1]");
  if (const auto* v = lookup<std::string>(table, "sla", "quarter_epoch")) c.sla.quarter_epoch = parse_date(*v);

  const double parallelism = number(table, "probes", "parallelism", 16);
  if (parallelism < 1) fail(ErrorCode::ConfigError, "[probes] parallelism must be at least 1");
  c.probe_parallelism = static_cast<std::size_t>(parallelism);
  const double period = number(table, "probes", "default_period_min", 30);
  if (period < 1) fail(ErrorCode::ConfigError, "[probes] default_period_min must be at least 1");
  c.default_period = Minutes{static_cast<std::int64_t>(period)};
  if (const auto* v = lookup<bool>(table, "probes", "simulate")) c.simulate_probes = *v;
  c.scheduler_interval = Seconds{static_cast<std::int64_t>(number(table, "probes", "scheduler_interval_s", 60))};

  c.alarm_rules_file = path_value(table, "alarms", "rules", base, "");
  c.data_dir = path_value(table, "store", "data_dir", base, c.data_dir);
  c.compact_every = static_cast<std::int64_t>(number(table, "store", "compact_every", 1000));
  if (const auto* v = lookup<std::vector<std::string>>(table, "registry", "root_admins")) c.root_admins = *v;
  c.rota_file = path_value(table, "operations", "rota_file", base, "");
  c.console_refresh_s = static_cast<std::int64_t>(number(table, "console", "refresh_s", 60));
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_table(parse_toml(buffer.str()), path.parent_path());
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return std::filesystem::path(*flag);
  if (const char* env = std::getenv("GRIDOPS_CONFIG"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

std::string Config::listen_host() const {
  const auto colon = listen.rfind(':');
  return colon == std::string::npos ? listen : listen.substr(0, colon);
}

int Config::listen_port() const {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return 8443;
  int port = 0;
  const auto digits = std::string_view(listen).substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || p != digits.data() + digits.size() || port < 0 || port > 65535) {
    fail(ErrorCode::ConfigError, "bad listen address " + listen);
  }
  return port;
}

}  // namespace gridops
