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

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridops/registry.hpp"
#include "gridops/time.hpp"

namespace gridops {

enum class ProbeStatus { Ok, Warn, Error, Timeout };
enum class ServiceState { Up, Degraded, Down, Unknown };

std::string_view to_string(ProbeStatus status);
std::string_view to_string(ServiceState state);
ProbeStatus parse_probe_status(std::string_view text);
ServiceState parse_service_state(std::string_view text);

/// OK->UP, WARN->DEGRADED, ERROR/TIMEOUT->DOWN.
ServiceState state_for(ProbeStatus status);
inline bool counts_as_available(ServiceState s) {
  return s == ServiceState::Up || s == ServiceState::Degraded;
}

inline constexpr Minutes kDefaultProbePeriod{30};
inline constexpr Seconds kClockSkewAllowance{5 * 60};
inline constexpr std::size_t kMaxDetailBytes = 4096;
inline constexpr const char* kMpiProbeId = "mpi-setup";

struct ProbeDefinition {
  std::string probe_id;
  ServiceType service_type = ServiceType::CE;
  Minutes period = kDefaultProbePeriod;
  Minutes timeout{10};
  /// Critical probes decide service status and availability.
  bool critical = true;
  /// Only scheduled against services whose site carries mpi=true.
  bool requires_mpi = false;
};

/// Probe catalogue: which tests run against which service type.
class ProbeCatalogue {
 public:
  ProbeCatalogue() = default;
  explicit ProbeCatalogue(std::vector<ProbeDefinition> definitions);

  /// One "<type>-basic" probe per service type plus the weekly MPI check on CEs.
  static ProbeCatalogue defaults(Minutes basic_period = kDefaultProbePeriod);

  const std::vector<ProbeDefinition>& definitions() const { return definitions_; }
  std::vector<ProbeDefinition> for_type(ServiceType type) const;
  const ProbeDefinition* find(std::string_view probe_id) const;
  /// Status period for a service type: the shortest critical probe period.
  Minutes status_period(ServiceType type) const;
  bool is_critical(std::string_view probe_id) const;

 private:
  std::vector<ProbeDefinition> definitions_;
};

struct ProbeResult {
  NodeId service;
  std::string probe_id;
  Timestamp timestamp;
  ProbeStatus status = ProbeStatus::Ok;
  std::string detail;

  friend bool operator==(const ProbeResult&, const ProbeResult&) = default;
};

nlohmann::json to_json(const ProbeResult& result);
ProbeResult probe_result_from_json(const nlohmann::json& j);
/// One result per line: {"service","probe","ts","status","detail"}.
std::string to_json_line(const ProbeResult& result);

struct ServiceStatus {
  NodeId service;
  ServiceState state = ServiceState::Unknown;
  Timestamp as_of;
  std::optional<ProbeResult> source_result;
};

nlohmann::json to_json(const ServiceStatus& status);

struct MpiCheckReport {
  NodeId site;
  Timestamp timestamp;
  std::vector<std::string> worker_nodes;
  bool concurrent = false;
  bool passed = false;

  /// passed only counts when the jobs ran concurrently on two or more nodes.
  bool effective_pass() const { return passed && concurrent && worker_nodes.size() >= 2; }
};

using ProbeKey = std::pair<NodeId, std::string>;
using LastRunMap = std::map<ProbeKey, Timestamp>;

struct DueProbe {
  NodeId service;
  ProbeDefinition probe;
  std::optional<Timestamp> last_run;
};

/// Every ACTIVE service whose probe never ran or ran at least one period ago,
/// ordered by (last run ascending with never-run first, service id, probe id).
std::vector<DueProbe> due_probes(Timestamp now, const TopologySnapshot& topology,
                                 const LastRunMap& last_run, const ProbeCatalogue& catalogue);

using ResultId = std::uint64_t;

struct RecordOutcome {
  ResultId id = 0;
  bool inserted = false;
};

/// Append-only result log keyed by (service, probe, timestamp).
class ProbeStore {
 public:
  explicit ProbeStore(ProbeCatalogue catalogue = ProbeCatalogue::defaults());

  /// Validates and appends; replaying an existing (service, probe, ts) returns its id.
  RecordOutcome record(const ProbeResult& result, const Registry& registry, Timestamp now);

  std::size_t size() const;
  std::optional<ProbeResult> get(ResultId id) const;
  /// All results of one service ordered by timestamp (ties by probe id).
  std::vector<ProbeResult> results_for(const NodeId& service) const;
  /// Critical-probe results of one service with from <= ts < until, ordered.
  std::vector<ProbeResult> status_results(const NodeId& service, Timestamp from,
                                          Timestamp until) const;
  std::vector<ProbeResult> all() const;
  LastRunMap last_runs() const;
  std::optional<ResultId> id_of(const ProbeResult& result) const;

  const ProbeCatalogue& catalogue() const { return catalogue_; }

 private:
  struct Key {
    NodeId service;
    std::string probe_id;
    std::int64_t ts;
    auto operator<=>(const Key&) const = default;
  };

  ProbeCatalogue catalogue_;
  mutable std::shared_mutex mutex_;
  std::vector<ProbeResult> log_;
  std::map<Key, ResultId> index_;
  std::unordered_map<NodeId, std::vector<ResultId>> by_service_;
};

/// State implied by the most recent critical result; UNKNOWN when there is none
/// or it is at least 2 x period old.
ServiceStatus latest_status(const NodeId& service, Timestamp now,
                            const std::vector<ProbeResult>& results,
                            const ProbeCatalogue& catalogue, Minutes period);

ServiceStatus latest_status(const ProbeStore& store, const Registry& registry,
                            const NodeId& service, Timestamp now);

/// Synthesizes and records an "mpi-setup" result against the site's CE.
ProbeResult record_mpi_check(const MpiCheckReport& report, const Registry& registry,
                             ProbeStore& store, Timestamp now);

/// Executes one probe; real sensors plug in here.
using ProbeExecutor = std::function<ProbeResult(const DueProbe&, Timestamp now)>;

/// Replays scripted outcomes per (service, probe), defaulting to OK.
class SimulatedExecutor {
 public:
  void script(const NodeId& service, const std::string& probe_id, std::vector<ProbeStatus> outcomes);
  ProbeResult operator()(const DueProbe& due, Timestamp now);

 private:
  std::mutex mutex_;
  std::map<ProbeKey, std::deque<ProbeStatus>> scripted_;
};

/// Periodic scheduler: runs due probes with bounded parallelism and records
/// the results.
class ProbeScheduler {
 public:
  ProbeScheduler(const Registry& registry, ProbeStore& store, ProbeExecutor executor,
                 std::size_t parallelism = 16);

  /// One scheduling pass; returns the results recorded.
  std::vector<ProbeResult> run_once(Timestamp now);
  Timestamp last_tick() const { return Timestamp{Seconds{last_tick_.load()}}; }
  std::size_t parallelism() const { return parallelism_; }

 private:
  const Registry& registry_;
  ProbeStore& store_;
  ProbeExecutor executor_;
  std::size_t parallelism_;
  std::atomic<std::int64_t> last_tick_{0};
};

}  // namespace gridops
