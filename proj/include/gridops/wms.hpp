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

#include <array>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridops/registry.hpp"
#include "gridops/time.hpp"

namespace gridops {

inline constexpr std::array<std::string_view, 5> kWmsMetrics = {
    "input_queue_length", "jobs_waiting", "load_1min", "disk_used_pct", "daemons_down_count"};

bool is_wms_metric(std::string_view name);

struct WmsSnapshot {
  NodeId wms;
  Timestamp timestamp;
  std::map<std::string, double> metrics;
  std::string agent_version;

  friend bool operator==(const WmsSnapshot&, const WmsSnapshot&) = default;
};

nlohmann::json to_json(const WmsSnapshot& snapshot);
WmsSnapshot wms_snapshot_from_json(const nlohmann::json& j);

/// Agent side: validates local readings against the metric catalogue.
/// Readings outside the catalogue are dropped.
WmsSnapshot agent_snapshot(const std::map<std::string, double>& readings, const NodeId& wms,
                           Timestamp now, std::string agent_version = "1.0");

struct AlarmRule {
  std::string metric;
  double raise_above = 0.0;
  double clear_below = 0.0;
  std::string guide_url;
};

/// JSON array of {"metric","raise_above","clear_below","guide_url"}.
std::vector<AlarmRule> alarm_rules_from_json(const nlohmann::json& j);
nlohmann::json to_json(std::span<const AlarmRule> rules);
void validate_rules(std::span<const AlarmRule> rules);

enum class AlarmState { Raised, Cleared };
std::string_view to_string(AlarmState state);

struct Alarm {
  NodeId wms;
  std::string metric;
  AlarmState state = AlarmState::Raised;
  Timestamp raised_at;
  std::optional<Timestamp> cleared_at;
  double peak_value = 0.0;
  std::string guide_url;
};

struct AlarmTransition {
  NodeId wms;
  std::string metric;
  AlarmState to = AlarmState::Raised;
  Timestamp at;
  double value = 0.0;
  std::string guide_url;

  friend bool operator==(const AlarmTransition&, const AlarmTransition&) = default;
};

nlohmann::json to_json(const Alarm& alarm);
nlohmann::json to_json(const AlarmTransition& transition);

using MetricSeries = std::vector<std::pair<Timestamp, double>>;

/// Collector side: stores snapshot history per WMS and runs the hysteresis
/// alarm state machine per (wms, metric).
class WmsCollector {
 public:
  /// Appends the snapshot and evaluates every rule. A metric raises when it
  /// exceeds raise_above with no active alarm and clears once it falls below
  /// clear_below; values inside the band leave the state unchanged.
  std::vector<AlarmTransition> ingest(const WmsSnapshot& snapshot, std::span<const AlarmRule> rules,
                                      const Registry& registry);

  MetricSeries history(const NodeId& wms, const std::string& metric, Window window,
                       const Registry& registry) const;

  std::vector<Alarm> alarms(bool active_only) const;
  std::vector<AlarmTransition> transitions() const;
  /// Every stored snapshot in arrival order.
  std::vector<WmsSnapshot> snapshots() const;
  std::optional<WmsSnapshot> latest(const NodeId& wms) const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<WmsSnapshot> arrivals_;
  std::map<NodeId, std::map<Timestamp, std::size_t>> by_wms_;
  std::vector<Alarm> alarms_;
  std::map<std::pair<NodeId, std::string>, std::size_t> active_;
  std::vector<AlarmTransition> transitions_;
};

}  // namespace gridops
