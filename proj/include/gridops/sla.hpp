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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridops/probe.hpp"
#include "gridops/registry.hpp"
#include "gridops/time.hpp"

namespace gridops {

struct Segment {
  Timestamp start;
  Timestamp end;
  ServiceState state = ServiceState::Unknown;

  std::int64_t minutes() const;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// A window partitioned into contiguous, non-overlapping, minute-aligned
/// state segments; adjacent segments always differ in state.
struct StatusTimeline {
  NodeId service;
  Window window;
  std::vector<Segment> segments;

  std::int64_t total_minutes() const;
  std::int64_t minutes_in(ServiceState state) const;
  std::int64_t available_minutes() const;
  std::int64_t known_minutes() const;
};

/// Floors both ends of the window to whole minutes.
Window minute_aligned(Window window);

/// Minute-resolution status. Each minute takes the state of the most recent
/// result at or before the minute start; that state holds until the result is
/// 2 x period old, after which the minute is UNKNOWN.
StatusTimeline build_timeline(const NodeId& service, Window window,
                              std::span<const ProbeResult> results,
                              Minutes period = kDefaultProbePeriod);

/// (UP + DEGRADED minutes) / total minutes; UNKNOWN counts as unavailable.
double service_availability(const StatusTimeline& timeline);
/// Fraction of minutes with a known state.
double coverage(const StatusTimeline& timeline);

struct AndResult {
  std::int64_t total_minutes = 0;
  std::int64_t available_minutes = 0;
  std::int64_t known_minutes = 0;

  double availability() const;
  double coverage() const;
};

/// Per-minute AND over timelines that share one window: a minute is available
/// iff every timeline is UP or DEGRADED in it, known iff none is UNKNOWN.
AndResult and_timelines(std::span<const StatusTimeline* const> timelines);

/// Site availability from its critical services' timelines.
/// Throws NO_CRITICAL_SERVICES when the site has no critical ACTIVE service.
double site_availability(const Registry& registry, const NodeId& site, Window window,
                         const std::map<NodeId, StatusTimeline>& timelines);

struct AvailabilityFigure {
  NodeId scope;
  NodeKind kind = NodeKind::Site;
  std::string name;
  Window window;
  double availability = 0.0;
  /// CPU count used when this figure is aggregated into its parent.
  double weight = 0.0;
  double coverage = 0.0;
};

struct WeightedValue {
  double weight = 0.0;
  double value = 0.0;
};

/// sum(w_i * v_i) / sum(w_i); zero when the weights sum to zero.
double weighted_mean(std::span<const WeightedValue> values);

/// CPU-weighted mean over the ACTIVE descendant sites of scope (or scope itself
/// when it is a site). Every such site needs an entry in site_figures.
AvailabilityFigure weighted_availability(const Registry& registry, const NodeId& scope,
                                         Window window,
                                         const std::map<NodeId, double>& site_figures);

struct SlaConfig {
  double threshold = 0.80;
  Date quarter_epoch = Date{std::chrono::year{2008} / std::chrono::May / 1};
};

/// Project quarter: Q1 starts at the epoch, each quarter spans three calendar months.
struct QuarterId {
  int index = 1;

  Window window(Date epoch) const;
};

struct AvailabilityReport {
  std::optional<QuarterId> quarter;
  Window window;
  double threshold = 0.80;
  std::uint64_t registry_version = 0;
  std::vector<AvailabilityFigure> per_service;
  std::vector<AvailabilityFigure> per_site;
  std::vector<AvailabilityFigure> per_country;
  std::vector<AvailabilityFigure> per_roc;
  AvailabilityFigure infrastructure;
  std::map<NodeId, bool> sla_conformance;
  /// Sites without any critical service: reported at availability 0.
  std::vector<NodeId> sites_without_critical_services;
};

/// Computes every figure for the window. Weights come from the registry as
/// it is now (the state at window end for past windows).
AvailabilityReport availability_report(const Registry& registry, const ProbeStore& store,
                                       Window window, const SlaConfig& config,
                                       std::optional<QuarterId> quarter = std::nullopt);

AvailabilityReport quarterly_report(QuarterId quarter, const Registry& registry,
                                    const ProbeStore& store, const SlaConfig& config);

nlohmann::json to_json(const AvailabilityFigure& figure);
nlohmann::json to_json(const AvailabilityReport& report);
/// Rows: scope_kind,scope_name,availability,weight,coverage.
std::string to_csv(const AvailabilityReport& report);
nlohmann::json to_json(const StatusTimeline& timeline);

}  // namespace gridops
