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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridops/accounting.hpp"
#include "gridops/config.hpp"
#include "gridops/operations.hpp"
#include "gridops/probe.hpp"
#include "gridops/registry.hpp"
#include "gridops/sla.hpp"
#include "gridops/store.hpp"
#include "gridops/wms.hpp"

namespace gridops {

inline constexpr const char* kBuildVersion = "1.0.0";

enum class IdentitySource { MutualTls, TrustedHeader, Local };

std::string_view to_string(IdentitySource source);

struct ApiIdentity {
  std::string subject_dn;
  IdentitySource source = IdentitySource::MutualTls;
  std::optional<ContactId> contact;
  bool root_admin = false;

  /// A valid certificate with no mapping: VIEW access only.
  bool guest() const { return !contact && !root_admin; }
};

struct RequestMeta {
  /// Subject of a client certificate the TLS layer already verified.
  std::optional<std::string> verified_client_dn;
  /// Header names lower-cased.
  std::map<std::string, std::string> headers;
};

/// Resolves the caller. The trusted header is honoured only when the config
/// names one. Throws UNAUTHENTICATED when neither source is present.
ApiIdentity authenticate(const RequestMeta& request, const Config& config, const Registry& registry);

struct AuditEntry {
  Timestamp at;
  std::string actor;
  std::string operation;
  std::string target;
  /// "OK" or the error code name.
  std::string outcome;
};

nlohmann::json to_json(const AuditEntry& entry);
AuditEntry audit_entry_from_json(const nlohmann::json& j);

struct LineError {
  std::size_t line = 0;
  std::string code;
  std::string message;
};

struct ResultIngest {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::vector<LineError> errors;
};

nlohmann::json to_json(const ResultIngest& outcome);

struct AccountingIngest {
  std::size_t records = 0;
  std::size_t errors = 0;
  std::size_t stored = 0;
  /// Serial records dropped because an MPI record for the same job exists.
  std::size_t kept_mpi = 0;
  std::vector<LogParseError> error_lines;
};

nlohmann::json to_json(const AccountingIngest& outcome);

using Clock = std::function<Timestamp()>;

/// The service core: every primary module behind one facade, bound to the
/// persistent store. HTTP handlers and the CLI both call into this class, so
/// the two surfaces cannot diverge.
///
/// Mutations are serialized and each writes exactly one audit entry, whether
/// it succeeds or fails. Queries are safe to run concurrently with them.
class Core {
 public:
  explicit Core(Config config, Clock clock = now_utc);
  ~Core();

  Core(const Core&) = delete;
  Core& operator=(const Core&) = delete;

  const Config& config() const { return config_; }
  Timestamp now() const { return clock_(); }
  const Registry& registry() const { return registry_; }
  const ProbeStore& probes() const { return probes_; }
  const WmsCollector& collector() const { return collector_; }
  const TicketDesk& desk() const { return desk_; }
  const Store& store() const { return *store_; }
  std::vector<UsageRecord> usage_records() const;
  std::vector<AuditEntry> audit_log() const;
  const std::vector<AlarmRule>& alarm_rules() const { return rules_; }
  const std::optional<ShiftRota>& rota() const { return rota_; }

  ApiIdentity local_identity(std::optional<std::string> dn = std::nullopt) const;

  // Mutations.
  NodeId put_node(const ApiIdentity& actor, RegistryNode node);
  void remove_node(const ApiIdentity& actor, const NodeId& id);
  ContactId put_contact(const ApiIdentity& actor, Contact contact);
  void map_identity(const ApiIdentity& actor, const CertIdentity& identity);
  /// Trusted bulk load; requires a root administrator.
  void import_registry(const ApiIdentity& actor, const TopologySnapshot& topology,
                       const std::optional<Directory>& directory);
  ResultIngest ingest_results(const ApiIdentity& actor, std::string_view json_lines);
  ResultIngest ingest_results(const ApiIdentity& actor, std::span<const ProbeResult> results);
  AccountingIngest ingest_accounting(const ApiIdentity& actor, const NodeId& site, std::string_view log_text);
  std::vector<AlarmTransition> ingest_wms(const ApiIdentity& actor, const WmsSnapshot& snapshot);
  Ticket open_ticket(const ApiIdentity& actor, const NodeId& site, Severity severity, std::string summary,
                     std::vector<EvidenceRef> evidence);
  Ticket transition_ticket(const ApiIdentity& actor, const std::string& id, TicketState to, std::string note);
  /// One scheduler pass with the configured executor.
  std::vector<ProbeResult> run_probes();

  // Queries.
  nlohmann::json topology(const std::optional<NodeId>& scope) const;
  ResourceTotals summary(const NodeId& scope) const;
  std::vector<ServiceStatus> status(const std::optional<NodeId>& scope) const;
  AvailabilityReport availability(Window window) const;
  /// The availability document for a scope: the scope figure plus every
  /// figure underneath it.
  nlohmann::json availability_json(const std::optional<NodeId>& scope, Window window) const;
  AvailabilityReport quarter_report(int quarter) const;
  UsageTable usage_query(const UsageFilter& filter, Dimension rows, Dimension cols, Metric metric) const;
  MetricSeries wms_history(const NodeId& wms, const std::string& metric, Window window) const;
  std::vector<Alarm> alarms(bool active_only) const;
  std::vector<Ticket> tickets(std::optional<TicketState> state) const;
  std::string good_for(Date date) const;
  std::vector<DraftTicket> suggestions() const;
  ResolutionStats resolution(Window window) const;
  nlohmann::json healthcheck() const;
  nlohmann::json console_config() const;

  /// Folds keyed namespaces into snapshots.
  void compact();

  void set_executor(ProbeExecutor executor);
  /// The serve loop flags itself here so healthcheck can report liveness.
  void set_scheduler_running(bool running) { scheduler_running_ = running; }

 private:
  template <typename F>
  auto audited(const ApiIdentity& actor, std::string operation, std::string target, F&& body);
  void require_writer(const ApiIdentity& actor) const;
  void persist_registry();
  void replay();
  void maybe_compact();

  Config config_;
  Clock clock_;
  std::unique_ptr<Store> store_;
  Registry registry_;
  ProbeStore probes_;
  WmsCollector collector_;
  TicketDesk desk_;
  std::vector<AlarmRule> rules_;
  std::optional<ShiftRota> rota_;
  ProbeExecutor executor_;
  std::shared_ptr<SimulatedExecutor> simulator_;
  std::unique_ptr<ProbeScheduler> scheduler_;

  mutable std::shared_mutex usage_mutex_;
  std::map<std::pair<NodeId, std::string>, UsageRecord> usage_;

  std::atomic<bool> scheduler_running_{false};
  std::mutex write_mutex_;
  std::size_t writes_since_compact_ = 0;
};

}  // namespace gridops
