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

#include "gridops/wms.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

bool is_wms_metric(std::string_view name) {
  return std::find(kWmsMetrics.begin(), kWmsMetrics.end(), name) != kWmsMetrics.end();
}

std::string_view to_string(AlarmState state) {
  return state == AlarmState::Raised ? "RAISED" : "CLEARED";
}

json to_json(const WmsSnapshot& s) {
  json metrics = json::object();
  for (const auto& [k, v] : s.metrics) metrics[k] = v;
  return json{{"wms", s.wms}, {"ts", format_iso8601(s.timestamp)}, {"metrics", metrics},
              {"agent_version", s.agent_version}};
}

WmsSnapshot wms_snapshot_from_json(const json& j) {
  try {
    WmsSnapshot s;
    s.wms = j.at("wms").get<std::string>();
    s.timestamp = parse_iso8601(j.at("ts").get<std::string>());
    for (const auto& [k, v] : j.at("metrics").items()) s.metrics[k] = v.get<double>();
    s.agent_version = j.value("agent_version", "");
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad WMS snapshot: ") + e.what());
  }
}

namespace {

void validate_snapshot_values(const std::map<std::string, double>& metrics) {
  for (const auto name : kWmsMetrics) {
    const auto it = metrics.find(std::string(name));
    if (it == metrics.end()) fail(ErrorCode::MissingMetric, "missing metric " + std::string(name));
    const double v = it->second;
    if (!std::isfinite(v) || v < 0) fail(ErrorCode::OutOfRange, std::string(name) + " must be finite and >= 0");
  }
  if (metrics.at("disk_used_pct") > 100.0) fail(ErrorCode::OutOfRange, "disk_used_pct must be within [0, 100]");
}

}  // namespace

WmsSnapshot agent_snapshot(const std::map<std::string, double>& readings, const NodeId& wms,
                           Timestamp now, std::string agent_version) {
  WmsSnapshot s;
  s.wms = wms;
  s.timestamp = now;
  s.agent_version = std::move(agent_version);
  for (const auto& [k, v] : readings) {
    if (is_wms_metric(k)) s.metrics[k] = v;
  }
  validate_snapshot_values(s.metrics);
  return s;
}

void validate_rules(std::span<const AlarmRule> rules) {
  std::set<std::string> seen;
  for (const auto& r : rules) {
    if (!is_wms_metric(r.metric)) fail(ErrorCode::UnknownMetric, "alarm rule for unknown metric " + r.metric);
    if (!(r.clear_below <= r.raise_above)) {
      fail(ErrorCode::InvalidArgument, "clear_below must not exceed raise_above for " + r.metric);
    }
    if (!seen.insert(r.metric).second) fail(ErrorCode::InvalidArgument, "duplicate alarm rule for " + r.metric);
  }
}

std::vector<AlarmRule> alarm_rules_from_json(const json& j) {
  std::vector<AlarmRule> rules;
  try {
    for (const auto& item : j) {
      rules.push_back({item.at("metric").get<std::string>(), item.at("raise_above").get<double>(),
                       item.at("clear_below").get<double>(), item.value("guide_url", "")});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad alarm rule file: ") + e.what());
  }
  validate_rules(rules);
  return rules;
}

json to_json(std::span<const AlarmRule> rules) {
  json arr = json::array();
  for (const auto& r : rules) {
    arr.push_back({{"metric", r.metric}, {"raise_above", r.raise_above}, {"clear_below", r.clear_below},
                   {"guide_url", r.guide_url}});
  }
  return arr;
}

json to_json(const Alarm& a) {
  return json{{"wms", a.wms},
              {"metric", a.metric},
              {"state", to_string(a.state)},
              {"raised_at", format_iso8601(a.raised_at)},
              {"cleared_at", a.cleared_at ? json(format_iso8601(*a.cleared_at)) : json(nullptr)},
              {"peak_value", a.peak_value},
              {"guide_url", a.guide_url}};
}

json to_json(const AlarmTransition& t) {
  return json{{"wms", t.wms},       {"metric", t.metric},       {"to", to_string(t.to)},
              {"at", format_iso8601(t.at)}, {"value", t.value}, {"guide_url", t.guide_url}};
}

namespace {

void require_wms(const Registry& registry, const NodeId& wms) {
  const auto node = registry.find(wms);
  if (!node || node->kind != NodeKind::Service || node->service_type() != ServiceType::WMS) {
    fail(ErrorCode::UnknownWms, "unknown WMS service: " + wms);
  }
}

}  // namespace

std::vector<AlarmTransition> WmsCollector::ingest(const WmsSnapshot& snapshot,
                                                  std::span<const AlarmRule> rules,
                                                  const Registry& registry) {
  require_wms(registry, snapshot.wms);
  validate_snapshot_values(snapshot.metrics);
  std::unique_lock lock(mutex_);
  auto& series = by_wms_[snapshot.wms];
  if (series.contains(snapshot.timestamp)) {
    fail(ErrorCode::DuplicateTimestamp,
         "snapshot for " + snapshot.wms + " at " + format_iso8601(snapshot.timestamp) + " already stored");
  }
  series.emplace(snapshot.timestamp, arrivals_.size());
  arrivals_.push_back(snapshot);

  std::vector<AlarmTransition> out;
  for (const auto& rule : rules) {
    const auto it = snapshot.metrics.find(rule.metric);
    if (it == snapshot.metrics.end()) continue;
    const double value = it->second;
    const auto key = std::make_pair(snapshot.wms, rule.metric);
    const auto active = active_.find(key);
    if (active == active_.end()) {
      if (value > rule.raise_above) {
        alarms_.push_back({snapshot.wms, rule.metric, AlarmState::Raised, snapshot.timestamp, std::nullopt,
                           value, rule.guide_url});
        active_[key] = alarms_.size() - 1;
        out.push_back({snapshot.wms, rule.metric, AlarmState::Raised, snapshot.timestamp, value, rule.guide_url});
      }
    } else {
      Alarm& alarm = alarms_[active->second];
      if (value < rule.clear_below) {
        alarm.state = AlarmState::Cleared;
        alarm.cleared_at = snapshot.timestamp;
        active_.erase(active);
        out.push_back({snapshot.wms, rule.metric, AlarmState::Cleared, snapshot.timestamp, value, rule.guide_url});
      } else {
        alarm.peak_value = std::max(alarm.peak_value, value);
      }
    }
  }
  transitions_.insert(transitions_.end(), out.begin(), out.end());
  return out;
}

MetricSeries WmsCollector::history(const NodeId& wms, const std::string& metric, Window window,
                                   const Registry& registry) const {
  require_wms(registry, wms);
  if (!is_wms_metric(metric)) fail(ErrorCode::UnknownMetric, "unknown metric " + metric);
  std::shared_lock lock(mutex_);
  MetricSeries out;
  const auto it = by_wms_.find(wms);
  if (it == by_wms_.end()) return out;
  for (auto pos = it->second.lower_bound(window.start); pos != it->second.end() && pos->first < window.end; ++pos) {
    const auto& snap = arrivals_[pos->second];
    if (const auto m = snap.metrics.find(metric); m != snap.metrics.end()) out.emplace_back(pos->first, m->second);
  }
  return out;
}

std::vector<Alarm> WmsCollector::alarms(bool active_only) const {
  std::shared_lock lock(mutex_);
  std::vector<Alarm> out;
  for (const auto& a : alarms_) {
    if (!active_only || a.state == AlarmState::Raised) out.push_back(a);
  }
  return out;
}

std::vector<AlarmTransition> WmsCollector::transitions() const {
  std::shared_lock lock(mutex_);
  return transitions_;
}

std::vector<WmsSnapshot> WmsCollector::snapshots() const {
  std::shared_lock lock(mutex_);
  return arrivals_;
}

std::optional<WmsSnapshot> WmsCollector::latest(const NodeId& wms) const {
  std::shared_lock lock(mutex_);
  const auto it = by_wms_.find(wms);
  if (it == by_wms_.end() || it->second.empty()) return std::nullopt;
  return arrivals_[it->second.rbegin()->second];
}

}  // namespace gridops
