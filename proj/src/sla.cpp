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

#include "gridops/sla.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::int64_t Segment::minutes() const {
  return std::chrono::duration_cast<Minutes>(end - start).count();
}

std::int64_t StatusTimeline::total_minutes() const {
  return std::chrono::duration_cast<Minutes>(window.length()).count();
}

std::int64_t StatusTimeline::minutes_in(ServiceState state) const {
  std::int64_t total = 0;
  for (const auto& s : segments) {
    if (s.state == state) total += s.minutes();
  }
  return total;
}

std::int64_t StatusTimeline::available_minutes() const {
  return minutes_in(ServiceState::Up) + minutes_in(ServiceState::Degraded);
}

std::int64_t StatusTimeline::known_minutes() const {
  return total_minutes() - minutes_in(ServiceState::Unknown);
}

Window minute_aligned(Window window) {
  return {std::chrono::floor<Minutes>(window.start), std::chrono::floor<Minutes>(window.end)};
}

StatusTimeline build_timeline(const NodeId& service, Window window,
                              std::span<const ProbeResult> results, Minutes period) {
  window = minute_aligned(window);
  if (window.empty()) fail(ErrorCode::EmptyWindow, "timeline window is empty");
  if (period <= Minutes{0}) fail(ErrorCode::InvalidArgument, "probe period must be positive");
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].timestamp < results[i - 1].timestamp) {
      fail(ErrorCode::UnsortedResults, "probe results are not ordered by timestamp");
    }
  }

  StatusTimeline timeline{service, window, {}};
  const std::int64_t total = timeline.total_minutes();
  const auto minute_index = [&](Timestamp t) {
    const std::int64_t offset = (t - window.start).count();
    return std::clamp<std::int64_t>(ceil_div(offset, 60), 0, total);
  };
  const auto emit = [&](std::int64_t from, std::int64_t to, ServiceState state) {
    if (to <= from) return;
    const Timestamp a = window.start + Minutes{from};
    const Timestamp b = window.start + Minutes{to};
    if (!timeline.segments.empty() && timeline.segments.back().state == state &&
        timeline.segments.back().end == a) {
      timeline.segments.back().end = b;
    } else {
      timeline.segments.push_back({a, b, state});
    }
  };

  std::vector<const ProbeResult*> own;
  own.reserve(results.size());
  for (const auto& r : results) {
    if (r.service == service) own.push_back(&r);
  }
  if (own.empty()) {
    emit(0, total, ServiceState::Unknown);
    return timeline;
  }
  const Seconds stale_after = 2 * period;
  emit(0, minute_index(own.front()->timestamp), ServiceState::Unknown);
  for (std::size_t k = 0; k < own.size(); ++k) {
    const std::int64_t begin = minute_index(own[k]->timestamp);
    const std::int64_t next = k + 1 < own.size() ? minute_index(own[k + 1]->timestamp) : total;
    const std::int64_t stale = minute_index(own[k]->timestamp + stale_after);
    const std::int64_t live_end = std::clamp(stale, begin, next);
    emit(begin, live_end, state_for(own[k]->status));
    emit(live_end, next, ServiceState::Unknown);
  }
  return timeline;
}

double service_availability(const StatusTimeline& timeline) {
  return ratio(timeline.available_minutes(), timeline.total_minutes());
}

double coverage(const StatusTimeline& timeline) {
  return ratio(timeline.known_minutes(), timeline.total_minutes());
}

double AndResult::availability() const { return ratio(available_minutes, total_minutes); }
double AndResult::coverage() const { return ratio(known_minutes, total_minutes); }

AndResult and_timelines(std::span<const StatusTimeline* const> timelines) {
  AndResult result;
  if (timelines.empty()) return result;
  const Window window = timelines.front()->window;
  for (const auto* t : timelines) {
    if (!(t->window == window)) fail(ErrorCode::InvalidArgument, "timelines cover different windows");
  }
  result.total_minutes = timelines.front()->total_minutes();

  std::vector<Timestamp> cuts;
  for (const auto* t : timelines) {
    for (const auto& s : t->segments) cuts.push_back(s.start);
  }
  cuts.push_back(window.end);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::size_t> cursor(timelines.size(), 0);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const Timestamp from = cuts[c];
    const std::int64_t length = std::chrono::duration_cast<Minutes>(cuts[c + 1] - from).count();
    bool available = true;
    bool known = true;
    for (std::size_t i = 0; i < timelines.size(); ++i) {
      const auto& segs = timelines[i]->segments;
      while (segs[cursor[i]].end <= from) ++cursor[i];
      const ServiceState state = segs[cursor[i]].state;
      available = available && counts_as_available(state);
      known = known && state != ServiceState::Unknown;
    }
    if (available) result.available_minutes += length;
    if (known) result.known_minutes += length;
  }
  return result;
}

namespace {

std::vector<RegistryNode> critical_services(const Registry& registry, const NodeId& site) {
  std::vector<RegistryNode> out;
  for (const auto& child : registry.children(site)) {
    if (child.kind == NodeKind::Service && child.status == NodeStatus::Active && child.critical()) {
      out.push_back(child);
    }
  }
  return out;
}

}  // namespace

double site_availability(const Registry& registry, const NodeId& site, Window window,
                         const std::map<NodeId, StatusTimeline>& timelines) {
  const auto node = registry.node(site);
  if (node.kind != NodeKind::Site) fail(ErrorCode::UnknownSite, "not a site: " + site);
  const auto services = critical_services(registry, site);
  if (services.empty()) fail(ErrorCode::NoCriticalServices, "site " + node.name + " has no critical services");
  std::vector<const StatusTimeline*> selected;
  for (const auto& s : services) {
    const auto it = timelines.find(s.id);
    if (it == timelines.end()) fail(ErrorCode::InvalidArgument, "no timeline for critical service " + s.id);
    if (!(it->second.window == minute_aligned(window))) {
      fail(ErrorCode::InvalidArgument, "timeline window mismatch for " + s.id);
    }
    selected.push_back(&it->second);
  }
  return and_timelines(selected).availability();
}

double weighted_mean(std::span<const WeightedValue> values) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& v : values) {
    num += v.weight * v.value;
    den += v.weight;
  }
  return den > 0.0 ? num / den : 0.0;
}

namespace {

std::vector<RegistryNode> active_sites_under(const Registry& registry, const RegistryNode& scope) {
  std::vector<RegistryNode> sites;
  if (!registry.effectively_active(scope.id)) return sites;
  if (scope.kind == NodeKind::Site) {
    sites.push_back(scope);
    return sites;
  }
  for (auto& s : registry.descendants(scope.id, NodeKind::Site)) {
    if (registry.effectively_active(s.id)) sites.push_back(std::move(s));
  }
  return sites;
}

}  // namespace

AvailabilityFigure weighted_availability(const Registry& registry, const NodeId& scope,
                                         Window window,
                                         const std::map<NodeId, double>& site_figures) {
  const RegistryNode node = registry.node(scope);
  std::vector<WeightedValue> values;
  for (const auto& site : active_sites_under(registry, node)) {
    const auto it = site_figures.find(site.id);
    if (it == site_figures.end()) fail(ErrorCode::InvalidArgument, "no availability figure for site " + site.id);
    values.push_back({static_cast<double>(site.cpu_count()), it->second});
  }
  AvailabilityFigure figure;
  figure.scope = node.id;
  figure.kind = node.kind;
  figure.name = node.name;
  figure.window = window;
  figure.availability = weighted_mean(values);
  for (const auto& v : values) figure.weight += v.weight;
  return figure;
}

Window QuarterId::window(Date epoch) const {
  if (index < 1) fail(ErrorCode::InvalidArgument, "quarter index must be >= 1");
  const Timestamp origin{epoch};
  return {add_months(origin, 3 * (index - 1)), add_months(origin, 3 * index)};
}

AvailabilityReport availability_report(const Registry& registry, const ProbeStore& store,
                                       Window window, const SlaConfig& config,
                                       std::optional<QuarterId> quarter) {
  window = minute_aligned(window);
  if (window.empty()) fail(ErrorCode::EmptyWindow, "report window is empty");

  AvailabilityReport report;
  report.quarter = quarter;
  report.window = window;
  report.threshold = config.threshold;
  report.registry_version = registry.version();

  const TopologySnapshot topology = registry.export_all();
  std::map<NodeId, double> site_values;
  std::map<NodeId, double> site_coverage;

  for (const auto& site : topology.nodes) {
    if (site.kind != NodeKind::Site || !registry.effectively_active(site.id)) continue;
    std::map<NodeId, StatusTimeline> timelines;
    std::vector<const StatusTimeline*> critical;
    for (const auto& svc : registry.children(site.id)) {
      if (svc.kind != NodeKind::Service || svc.status != NodeStatus::Active) continue;
      const Minutes period = store.catalogue().status_period(svc.service_type());
      const auto results = store.status_results(svc.id, window.start - 2 * period, window.end);
      auto timeline = build_timeline(svc.id, window, results, period);
      AvailabilityFigure f;
      f.scope = svc.id;
      f.kind = NodeKind::Service;
      f.name = svc.name;
      f.window = window;
      f.availability = service_availability(timeline);
      f.coverage = coverage(timeline);
      report.per_service.push_back(f);
      timelines.emplace(svc.id, std::move(timeline));
    }
    for (const auto& svc : registry.children(site.id)) {
      if (svc.kind == NodeKind::Service && svc.status == NodeStatus::Active && svc.critical()) {
        critical.push_back(&timelines.at(svc.id));
      }
    }
    AvailabilityFigure f;
    f.scope = site.id;
    f.kind = NodeKind::Site;
    f.name = site.name;
    f.window = window;
    f.weight = static_cast<double>(site.cpu_count());
    if (critical.empty()) {
      report.sites_without_critical_services.push_back(site.id);
    } else {
      const AndResult r = and_timelines(critical);
      f.availability = r.availability();
      f.coverage = r.coverage();
    }
    site_values[site.id] = f.availability;
    site_coverage[site.id] = f.coverage;
    report.sla_conformance[site.id] = f.availability >= config.threshold;
    report.per_site.push_back(f);
  }

  const auto aggregate = [&](const RegistryNode& scope) {
    AvailabilityFigure f = weighted_availability(registry, scope.id, window, site_values);
    f.coverage = weighted_availability(registry, scope.id, window, site_coverage).availability;
    return f;
  };
  for (const auto& n : topology.nodes) {
    if (n.kind == NodeKind::Country) report.per_country.push_back(aggregate(n));
    if (n.kind == NodeKind::Roc) report.per_roc.push_back(aggregate(n));
  }

  std::vector<WeightedValue> all_sites;
  std::vector<WeightedValue> all_coverage;
  for (const auto& f : report.per_site) {
    all_sites.push_back({f.weight, f.availability});
    all_coverage.push_back({f.weight, f.coverage});
  }
  report.infrastructure.scope = "";
  report.infrastructure.kind = NodeKind::Roc;
  report.infrastructure.name = "infrastructure";
  report.infrastructure.window = window;
  report.infrastructure.availability = weighted_mean(all_sites);
  report.infrastructure.coverage = weighted_mean(all_coverage);
  for (const auto& v : all_sites) report.infrastructure.weight += v.weight;
  return report;
}

AvailabilityReport quarterly_report(QuarterId quarter, const Registry& registry,
                                    const ProbeStore& store, const SlaConfig& config) {
  return availability_report(registry, store, quarter.window(config.quarter_epoch), config, quarter);
}

json to_json(const AvailabilityFigure& f) {
  return json{{"scope", f.scope},
              {"kind", to_string(f.kind)},
              {"name", f.name},
              {"from", format_iso8601(f.window.start)},
              {"to", format_iso8601(f.window.end)},
              {"availability", f.availability},
              {"weight", f.weight},
              {"coverage", f.coverage}};
}

json to_json(const AvailabilityReport& r) {
  const auto list = [](const std::vector<AvailabilityFigure>& figures) {
    json arr = json::array();
    for (const auto& f : figures) arr.push_back(to_json(f));
    return arr;
  };
  json conformance = json::object();
  for (const auto& [site, ok] : r.sla_conformance) conformance[site] = ok;
  json infra = to_json(r.infrastructure);
  infra["kind"] = "INFRASTRUCTURE";
  return json{
      {"quarter", r.quarter ? json(r.quarter->index) : json(nullptr)},
      {"from", format_iso8601(r.window.start)},
      {"to", format_iso8601(r.window.end)},
      {"threshold", r.threshold},
      {"metadata",
       {{"weights", "registry state at report time"},
        {"registry_version", r.registry_version},
        {"unknown_policy", "unavailable"},
        {"site_rule", "AND over critical services"},
        {"sites_without_critical_services", r.sites_without_critical_services}}},
      {"infrastructure", infra},
      {"per_roc", list(r.per_roc)},
      {"per_country", list(r.per_country)},
      {"per_site", list(r.per_site)},
      {"per_service", list(r.per_service)},
      {"sla_conformance", conformance}};
}

std::string to_csv(const AvailabilityReport& r) {
  std::ostringstream out;
  out << "scope_kind,scope_name,availability,weight,coverage\n";
  const auto row = [&](std::string_view kind, const AvailabilityFigure& f) {
    std::string name = f.name;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      name = quoted + "\"";
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%.6f,%.0f,%.6f\n", f.availability, f.weight, f.coverage);
    out << kind << ',' << name << buf;
  };
  row("INFRASTRUCTURE", r.infrastructure);
  for (const auto& f : r.per_roc) row("ROC", f);
  for (const auto& f : r.per_country) row("COUNTRY", f);
  for (const auto& f : r.per_site) row("SITE", f);
  for (const auto& f : r.per_service) row("SERVICE", f);
  return out.str();
}

json to_json(const StatusTimeline& t) {
  json segs = json::array();
  for (const auto& s : t.segments) {
    segs.push_back({{"from", format_iso8601(s.start)}, {"to", format_iso8601(s.end)}, {"state", to_string(s.state)}});
  }
  return json{{"service", t.service},
              {"from", format_iso8601(t.window.start)},
              {"to", format_iso8601(t.window.end)},
              {"segments", segs}};
}

}  // namespace gridops
