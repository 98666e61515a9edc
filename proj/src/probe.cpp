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

#include "gridops/probe.hpp"

#include <algorithm>
#include <cctype>
#include <semaphore>
#include <thread>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

std::string_view to_string(ProbeStatus status) {
  switch (status) {
    case ProbeStatus::Ok: return "OK";
    case ProbeStatus::Warn: return "WARN";
    case ProbeStatus::Error: return "ERROR";
    case ProbeStatus::Timeout: return "TIMEOUT";
  }
  return "?";
}

std::string_view to_string(ServiceState state) {
  switch (state) {
    case ServiceState::Up: return "UP";
    case ServiceState::Degraded: return "DEGRADED";
    case ServiceState::Down: return "DOWN";
    case ServiceState::Unknown: return "UNKNOWN";
  }
  return "?";
}

ProbeStatus parse_probe_status(std::string_view text) {
  for (auto s : {ProbeStatus::Ok, ProbeStatus::Warn, ProbeStatus::Error, ProbeStatus::Timeout}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::InvalidArgument, "unknown probe status: " + std::string(text));
}

ServiceState parse_service_state(std::string_view text) {
  for (auto s : {ServiceState::Up, ServiceState::Degraded, ServiceState::Down, ServiceState::Unknown}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::InvalidArgument, "unknown service state: " + std::string(text));
}

ServiceState state_for(ProbeStatus status) {
  switch (status) {
    case ProbeStatus::Ok: return ServiceState::Up;
    case ProbeStatus::Warn: return ServiceState::Degraded;
    case ProbeStatus::Error:
    case ProbeStatus::Timeout: return ServiceState::Down;
  }
  return ServiceState::Unknown;
}

// ---------------------------------------------------------------------------

ProbeCatalogue::ProbeCatalogue(std::vector<ProbeDefinition> definitions)
    : definitions_(std::move(definitions)) {
  for (const auto& d : definitions_) {
    if (d.period <= Minutes{0}) fail(ErrorCode::InvalidArgument, "probe period must be positive: " + d.probe_id);
    if (d.timeout >= d.period) {
      fail(ErrorCode::InvalidArgument, "probe timeout must be shorter than its period: " + d.probe_id);
    }
  }
}

ProbeCatalogue ProbeCatalogue::defaults(Minutes basic_period) {
  std::vector<ProbeDefinition> defs;
  for (auto t : {ServiceType::CE, ServiceType::SE, ServiceType::sBDII, ServiceType::WMS,
                 ServiceType::VOMS, ServiceType::LFC, ServiceType::FTS, ServiceType::MYPROXY,
                 ServiceType::OTHER}) {
    std::string id(to_string(t));
    for (auto& c : id) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    defs.push_back({id + "-basic", t, basic_period, std::min(Minutes{10}, basic_period / 2), true, false});
  }
  defs.push_back({kMpiProbeId, ServiceType::CE, Minutes{7 * 24 * 60}, Minutes{6 * 60}, false, true});
  return ProbeCatalogue(std::move(defs));
}

std::vector<ProbeDefinition> ProbeCatalogue::for_type(ServiceType type) const {
  std::vector<ProbeDefinition> out;
  for (const auto& d : definitions_) {
    if (d.service_type == type) out.push_back(d);
  }
  return out;
}

const ProbeDefinition* ProbeCatalogue::find(std::string_view probe_id) const {
  for (const auto& d : definitions_) {
    if (d.probe_id == probe_id) return &d;
  }
  return nullptr;
}

Minutes ProbeCatalogue::status_period(ServiceType type) const {
  std::optional<Minutes> best;
  for (const auto& d : definitions_) {
    if (d.service_type == type && d.critical && (!best || d.period < *best)) best = d.period;
  }
  return best.value_or(kDefaultProbePeriod);
}

bool ProbeCatalogue::is_critical(std::string_view probe_id) const {
  const auto* d = find(probe_id);
  // Probes outside the catalogue (ad-hoc fixtures) count toward status.
  return d == nullptr || d->critical;
}

// ---------------------------------------------------------------------------

json to_json(const ProbeResult& r) {
  return json{{"service", r.service},
              {"probe", r.probe_id},
              {"ts", format_iso8601(r.timestamp)},
              {"status", to_string(r.status)},
              {"detail", r.detail}};
}

ProbeResult probe_result_from_json(const json& j) {
  try {
    ProbeResult r;
    r.service = j.at("service").get<std::string>();
    r.probe_id = j.at("probe").get<std::string>();
    r.timestamp = parse_iso8601(j.at("ts").get<std::string>());
    r.status = parse_probe_status(j.at("status").get<std::string>());
    r.detail = j.value("detail", "");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad probe result: ") + e.what());
  }
}

std::string to_json_line(const ProbeResult& result) { return to_json(result).dump(); }

json to_json(const ServiceStatus& s) {
  json j{{"service", s.service}, {"state", to_string(s.state)}, {"as_of", format_iso8601(s.as_of)}};
  j["source_result"] = s.source_result ? to_json(*s.source_result) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

std::vector<DueProbe> due_probes(Timestamp now, const TopologySnapshot& topology,
                                 const LastRunMap& last_run, const ProbeCatalogue& catalogue) {
  std::unordered_map<NodeId, const RegistryNode*> index;
  for (const auto& n : topology.nodes) index[n.id] = &n;
  const auto active_chain = [&](const RegistryNode& n) {
    const RegistryNode* cur = &n;
    while (cur) {
      if (cur->status != NodeStatus::Active) return false;
      if (!cur->parent) return true;
      const auto it = index.find(*cur->parent);
      cur = it == index.end() ? nullptr : it->second;
    }
    return true;
  };

  std::vector<DueProbe> due;
  for (const auto& n : topology.nodes) {
    if (n.kind != NodeKind::Service || !active_chain(n)) continue;
    ServiceType type;
    try {
      type = n.service_type();
    } catch (const Error&) {
      continue;
    }
    const RegistryNode* site = nullptr;
    if (n.parent) {
      const auto it = index.find(*n.parent);
      if (it != index.end()) site = it->second;
    }
    for (const auto& def : catalogue.for_type(type)) {
      if (def.requires_mpi && !(site && site->attribute_flag("mpi"))) continue;
      const auto it = last_run.find({n.id, def.probe_id});
      if (it == last_run.end()) {
        due.push_back({n.id, def, std::nullopt});
      } else if (now - it->second >= def.period) {
        due.push_back({n.id, def, it->second});
      }
    }
  }
  std::sort(due.begin(), due.end(), [](const DueProbe& a, const DueProbe& b) {
    if (a.last_run != b.last_run) {
      if (!a.last_run) return true;
      if (!b.last_run) return false;
      return *a.last_run < *b.last_run;
    }
    if (a.service != b.service) return a.service < b.service;
    return a.probe.probe_id < b.probe.probe_id;
  });
  return due;
}

// ---------------------------------------------------------------------------

ProbeStore::ProbeStore(ProbeCatalogue catalogue) : catalogue_(std::move(catalogue)) {}

RecordOutcome ProbeStore::record(const ProbeResult& result, const Registry& registry, Timestamp now) {
  const auto node = registry.find(result.service);
  if (!node || node->kind != NodeKind::Service) {
    fail(ErrorCode::UnknownService, "unknown service: " + result.service);
  }
  if (result.probe_id.empty()) fail(ErrorCode::InvalidArgument, "probe id must not be empty");
  if (result.timestamp > now + kClockSkewAllowance) {
    fail(ErrorCode::FutureTimestamp, "result timestamp " + format_iso8601(result.timestamp) +
                                         " is in the future");
  }
  if (result.detail.size() > kMaxDetailBytes) {
    fail(ErrorCode::PayloadTooLarge, "detail exceeds 4 KiB");
  }
  const Key key{result.service, result.probe_id, to_unix(result.timestamp)};
  std::unique_lock lock(mutex_);
  if (const auto it = index_.find(key); it != index_.end()) return {it->second, false};
  const ResultId id = log_.size() + 1;
  log_.push_back(result);
  index_.emplace(key, id);
  auto& series = by_service_[result.service];
  // Keep per-service order by (timestamp, probe id); appends are usually in order.
  const auto pos = std::upper_bound(series.begin(), series.end(), id, [&](ResultId lhs, ResultId rhs) {
    const auto& a = log_[lhs - 1];
    const auto& b = log_[rhs - 1];
    return std::tie(a.timestamp, a.probe_id) < std::tie(b.timestamp, b.probe_id);
  });
  series.insert(pos, id);
  return {id, true};
}

std::size_t ProbeStore::size() const {
  std::shared_lock lock(mutex_);
  return log_.size();
}

std::optional<ProbeResult> ProbeStore::get(ResultId id) const {
  std::shared_lock lock(mutex_);
  if (id == 0 || id > log_.size()) return std::nullopt;
  return log_[id - 1];
}

std::vector<ProbeResult> ProbeStore::results_for(const NodeId& service) const {
  std::shared_lock lock(mutex_);
  std::vector<ProbeResult> out;
  if (const auto it = by_service_.find(service); it != by_service_.end()) {
    out.reserve(it->second.size());
    for (const auto id : it->second) out.push_back(log_[id - 1]);
  }
  return out;
}

std::vector<ProbeResult> ProbeStore::status_results(const NodeId& service, Timestamp from,
                                                    Timestamp until) const {
  std::shared_lock lock(mutex_);
  std::vector<ProbeResult> out;
  if (const auto it = by_service_.find(service); it != by_service_.end()) {
    const auto first = std::lower_bound(it->second.begin(), it->second.end(), from,
                                        [&](ResultId id, Timestamp t) { return log_[id - 1].timestamp < t; });
    for (auto pos = first; pos != it->second.end(); ++pos) {
      const auto& r = log_[*pos - 1];
      if (r.timestamp >= until) break;
      if (catalogue_.is_critical(r.probe_id)) out.push_back(r);
    }
  }
  return out;
}

std::vector<ProbeResult> ProbeStore::all() const {
  std::shared_lock lock(mutex_);
  return log_;
}

LastRunMap ProbeStore::last_runs() const {
  std::shared_lock lock(mutex_);
  LastRunMap out;
  for (const auto& r : log_) {
    auto& slot = out[{r.service, r.probe_id}];
    slot = std::max(slot, r.timestamp);
  }
  return out;
}

std::optional<ResultId> ProbeStore::id_of(const ProbeResult& result) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find({result.service, result.probe_id, to_unix(result.timestamp)});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------

ServiceStatus latest_status(const NodeId& service, Timestamp now,
                            const std::vector<ProbeResult>& results,
                            const ProbeCatalogue& catalogue, Minutes period) {
  ServiceStatus status{service, ServiceState::Unknown, now, std::nullopt};
  const ProbeResult* latest = nullptr;
  for (const auto& r : results) {
    if (r.service != service || r.timestamp > now || !catalogue.is_critical(r.probe_id)) continue;
    if (!latest || r.timestamp > latest->timestamp ||
        (r.timestamp == latest->timestamp && r.probe_id > latest->probe_id)) {
      latest = &r;
    }
  }
  if (!latest) return status;
  status.source_result = *latest;
  if (now - latest->timestamp >= 2 * period) return status;
  status.state = state_for(latest->status);
  return status;
}

ServiceStatus latest_status(const ProbeStore& store, const Registry& registry,
                            const NodeId& service, Timestamp now) {
  const auto node = registry.find(service);
  if (!node || node->kind != NodeKind::Service) fail(ErrorCode::UnknownService, "unknown service: " + service);
  const Minutes period = store.catalogue().status_period(node->service_type());
  return latest_status(service, now, store.results_for(service), store.catalogue(), period);
}

ProbeResult record_mpi_check(const MpiCheckReport& report, const Registry& registry,
                             ProbeStore& store, Timestamp now) {
  const auto site = registry.find(report.site);
  if (!site || site->kind != NodeKind::Site) fail(ErrorCode::UnknownSite, "unknown site: " + report.site);
  if (!site->attribute_flag("mpi")) {
    fail(ErrorCode::MpiNotSupported, "site " + site->name + " does not advertise MPI support");
  }
  std::optional<RegistryNode> ce;
  for (const auto& child : registry.children(site->id)) {
    if (child.kind == NodeKind::Service && child.status == NodeStatus::Active &&
        child.service_type() == ServiceType::CE) {
      ce = child;
      break;
    }
  }
  if (!ce) fail(ErrorCode::UnknownService, "site " + site->name + " has no active CE");
  ProbeResult result;
  result.service = ce->id;
  result.probe_id = kMpiProbeId;
  result.timestamp = report.timestamp;
  result.status = report.effective_pass() ? ProbeStatus::Ok : ProbeStatus::Error;
  std::string nodes;
  for (const auto& wn : report.worker_nodes) nodes += (nodes.empty() ? "" : ",") + wn;
  result.detail = "worker_nodes=" + nodes + " concurrent=" + (report.concurrent ? "true" : "false") +
                  " passed=" + (report.passed ? "true" : "false");
  if (result.detail.size() > kMaxDetailBytes) result.detail.resize(kMaxDetailBytes);
  store.record(result, registry, now);
  return result;
}

// ---------------------------------------------------------------------------

void SimulatedExecutor::script(const NodeId& service, const std::string& probe_id,
                               std::vector<ProbeStatus> outcomes) {
  std::lock_guard lock(mutex_);
  auto& queue = scripted_[{service, probe_id}];
  queue.insert(queue.end(), outcomes.begin(), outcomes.end());
}

ProbeResult SimulatedExecutor::operator()(const DueProbe& due, Timestamp now) {
  ProbeStatus status = ProbeStatus::Ok;
  {
    std::lock_guard lock(mutex_);
    auto it = scripted_.find({due.service, due.probe.probe_id});
    if (it != scripted_.end() && !it->second.empty()) {
      status = it->second.front();
      it->second.pop_front();
    }
  }
  return ProbeResult{due.service, due.probe.probe_id, now, status, "simulated"};
}

ProbeScheduler::ProbeScheduler(const Registry& registry, ProbeStore& store, ProbeExecutor executor,
                               std::size_t parallelism)
    : registry_(registry), store_(store), executor_(std::move(executor)),
      parallelism_(std::max<std::size_t>(1, parallelism)) {}

std::vector<ProbeResult> ProbeScheduler::run_once(Timestamp now) {
  const auto due = due_probes(now, registry_.export_all(), store_.last_runs(), store_.catalogue());
  std::vector<std::optional<ProbeResult>> slots(due.size());
  std::counting_semaphore<> permits(static_cast<std::ptrdiff_t>(parallelism_));
  {
    std::vector<std::jthread> workers;
    workers.reserve(due.size());
    for (std::size_t i = 0; i < due.size(); ++i) {
      permits.acquire();
      workers.emplace_back([&, i] {
        try {
          slots[i] = executor_(due[i], now);
        } catch (...) {
          slots[i] = ProbeResult{due[i].service, due[i].probe.probe_id, now, ProbeStatus::Error,
                                 "executor failure"};
        }
        permits.release();
      });
    }
  }
  std::vector<ProbeResult> recorded;
  for (auto& slot : slots) {
    if (!slot) continue;
    store_.record(*slot, registry_, now);
    recorded.push_back(std::move(*slot));
  }
  last_tick_.store(to_unix(now));
  return recorded;
}

}  // namespace gridops
