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

#include "gridops/core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

namespace {

// Replayed records were validated when first written; they must not be
// rejected later merely because the wall clock moved.
const Timestamp kReplayNow = std::chrono::sys_days{std::chrono::year{9999} / 1 / 1};

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, std::string("cannot read ") + what + " " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_json_file(const std::string& path, const char* what) {
  try {
    return json::parse(read_file(path, what));
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("cannot parse ") + what + " " + path + ": " + e.what());
  }
}

std::string usage_key(const NodeId& site, const std::string& job_id) { return site + "/" + job_id; }

}  // namespace

std::string_view to_string(IdentitySource source) {
  switch (source) {
    case IdentitySource::MutualTls: return "MUTUAL_TLS";
    case IdentitySource::TrustedHeader: return "TRUSTED_HEADER";
    case IdentitySource::Local: return "LOCAL";
  }
  return "?";
}

ApiIdentity authenticate(const RequestMeta& request, const Config& config, const Registry& registry) {
  ApiIdentity id;
  if (request.verified_client_dn && !request.verified_client_dn->empty()) {
    id.subject_dn = normalize_dn(*request.verified_client_dn);
    id.source = IdentitySource::MutualTls;
  } else if (!config.trusted_proxy_header.empty()) {
    std::string name = config.trusted_proxy_header;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto it = request.headers.find(name);
    if (it == request.headers.end() || it->second.empty()) {
      fail(ErrorCode::Unauthenticated, "no client certificate and no trusted proxy header");
    }
    id.subject_dn = normalize_dn(it->second);
    id.source = IdentitySource::TrustedHeader;
  } else {
    fail(ErrorCode::Unauthenticated, "a client certificate is required");
  }
  if (const auto contact = registry.contact_for_dn(id.subject_dn)) id.contact = contact->id;
  id.root_admin = registry.is_root_admin(id.subject_dn);
  return id;
}

json to_json(const AuditEntry& e) {
  return json{{"at", format_iso8601(e.at)}, {"actor", e.actor}, {"operation", e.operation},
              {"target", e.target}, {"outcome", e.outcome}};
}

AuditEntry audit_entry_from_json(const json& j) {
  return {parse_iso8601(j.at("at").get<std::string>()), j.at("actor").get<std::string>(),
          j.at("operation").get<std::string>(), j.value("target", ""), j.value("outcome", "")};
}

json to_json(const ResultIngest& r) {
  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back({{"line", e.line}, {"code", e.code}, {"message", e.message}});
  return json{{"accepted", r.accepted}, {"duplicates", r.duplicates}, {"errors", errors}};
}

json to_json(const AccountingIngest& r) {
  json errors = json::array();
  for (const auto& e : r.error_lines) errors.push_back({{"line", e.line}, {"message", e.message}});
  return json{{"records", r.records}, {"errors", r.errors}, {"stored", r.stored}, {"kept_mpi", r.kept_mpi},
              {"error_lines", errors}};
}

Core::Core(Config config, Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      store_(std::make_unique<Store>(config_.data_dir)),
      registry_(config_.root_admins),
      probes_(ProbeCatalogue::defaults(config_.default_period)) {
  if (!config_.alarm_rules_file.empty()) {
    rules_ = alarm_rules_from_json(parse_json_file(config_.alarm_rules_file, "alarm rules"));
    validate_rules(rules_);
  }
  if (!config_.rota_file.empty()) {
    rota_ = rota_from_json(parse_json_file(config_.rota_file, "rota file"));
  }
  simulator_ = std::make_shared<SimulatedExecutor>();
  executor_ = [sim = simulator_](const DueProbe& due, Timestamp now) { return (*sim)(due, now); };
  scheduler_ = std::make_unique<ProbeScheduler>(
      registry_, probes_, [this](const DueProbe& due, Timestamp now) { return executor_(due, now); },
      config_.probe_parallelism);
  replay();
}

Core::~Core() = default;

void Core::set_executor(ProbeExecutor executor) {
  std::lock_guard lock(write_mutex_);
  executor_ = std::move(executor);
}

void Core::replay() {
  if (const auto state = store_->get(Namespace::Registry, "state")) {
    registry_.import_topology(topology_from_json(state->at("topology")));
    registry_.import_directory(directory_from_json(state->at("directory")));
    registry_.restore_counters(state->at("version").get<std::uint64_t>(),
                               parse_iso8601(state->at("last_modified").get<std::string>()));
  }
  for (const auto& j : store_->records(Namespace::ProbeResults)) {
    probes_.record(probe_result_from_json(j), registry_, kReplayNow);
  }
  for (const auto& [key, j] : store_->entries(Namespace::Usage)) {
    auto r = usage_record_from_json(j);
    usage_[{r.site, r.job_id}] = std::move(r);
  }
  for (const auto& j : store_->records(Namespace::Wms)) {
    collector_.ingest(wms_snapshot_from_json(j), rules_, registry_);
  }
  for (const auto& [key, j] : store_->entries(Namespace::Tickets)) {
    if (key.rfind("ticket:", 0) == 0) {
      desk_.restore(ticket_from_json(j));
    } else if (key.rfind("outbox:", 0) == 0) {
      desk_.restore(notification_from_json(j));
    }
  }
}

template <typename F>
auto Core::audited(const ApiIdentity& actor, std::string operation, std::string target, F&& body) {
  std::lock_guard lock(write_mutex_);
  AuditEntry entry{clock_(), actor.subject_dn, std::move(operation), std::move(target), "OK"};
  try {
    if constexpr (std::is_void_v<decltype(body(entry))>) {
      body(entry);
      store_->append(Namespace::Audit, to_json(entry));
      maybe_compact();
    } else {
      auto result = body(entry);
      store_->append(Namespace::Audit, to_json(entry));
      maybe_compact();
      return result;
    }
  } catch (const Error& e) {
    entry.outcome = std::string(to_string(e.code()));
    store_->append(Namespace::Audit, to_json(entry));
    throw;
  }
}

void Core::maybe_compact() {
  if (config_.compact_every > 0 && ++writes_since_compact_ >= static_cast<std::size_t>(config_.compact_every)) {
    store_->compact();
    writes_since_compact_ = 0;
  }
}

void Core::require_writer(const ApiIdentity& actor) const {
  if (actor.guest()) fail(ErrorCode::AuthzDenied, "identity " + actor.subject_dn + " has view-only access");
}

void Core::persist_registry() {
  store_->upsert(Namespace::Registry, "state",
                 json{{"topology", to_json(registry_.export_all())},
                      {"directory", to_json(registry_.directory())},
                      {"version", registry_.version()},
                      {"last_modified", format_iso8601(registry_.last_modified())}});
}

ApiIdentity Core::local_identity(std::optional<std::string> dn) const {
  ApiIdentity id;
  id.source = IdentitySource::Local;
  if (dn && !dn->empty()) {
    id.subject_dn = normalize_dn(*dn);
  } else if (!config_.root_admins.empty()) {
    id.subject_dn = normalize_dn(config_.root_admins.front());
  } else {
    id.subject_dn = "CN=local operator";
  }
  if (const auto contact = registry_.contact_for_dn(id.subject_dn)) id.contact = contact->id;
  id.root_admin = registry_.is_root_admin(id.subject_dn);
  return id;
}

std::vector<UsageRecord> Core::usage_records() const {
  std::shared_lock lock(usage_mutex_);
  std::vector<UsageRecord> out;
  out.reserve(usage_.size());
  for (const auto& [key, r] : usage_) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const UsageRecord& a, const UsageRecord& b) {
    return std::tie(a.end, a.site, a.job_id) < std::tie(b.end, b.site, b.job_id);
  });
  return out;
}

std::vector<AuditEntry> Core::audit_log() const {
  std::vector<AuditEntry> out;
  for (const auto& j : store_->records(Namespace::Audit)) out.push_back(audit_entry_from_json(j));
  return out;
}

// --- mutations -------------------------------------------------------------------

NodeId Core::put_node(const ApiIdentity& actor, RegistryNode node) {
  const std::string target = node.id;
  return audited(actor, "put_node", target, [&](AuditEntry& entry) {
    require_writer(actor);
    const NodeId id = registry_.upsert_node(actor.subject_dn, std::move(node), clock_());
    entry.target = id;
    persist_registry();
    return id;
  });
}

void Core::remove_node(const ApiIdentity& actor, const NodeId& id) {
  audited(actor, "remove_node", id, [&](AuditEntry&) {
    require_writer(actor);
    registry_.remove_node(actor.subject_dn, id, clock_());
    persist_registry();
  });
}

ContactId Core::put_contact(const ApiIdentity& actor, Contact contact) {
  const std::string target = contact.node;
  return audited(actor, "put_contact", target, [&](AuditEntry&) {
    require_writer(actor);
    const ContactId id = registry_.upsert_contact(actor.subject_dn, std::move(contact), clock_());
    persist_registry();
    return id;
  });
}

void Core::map_identity(const ApiIdentity& actor, const CertIdentity& identity) {
  audited(actor, "map_identity", identity.mapped_contact, [&](AuditEntry&) {
    require_writer(actor);
    registry_.map_identity(actor.subject_dn, identity, clock_());
    persist_registry();
  });
}

void Core::import_registry(const ApiIdentity& actor, const TopologySnapshot& topology,
                           const std::optional<Directory>& directory) {
  audited(actor, "import_registry", std::to_string(topology.nodes.size()) + " nodes", [&](AuditEntry&) {
    if (!actor.root_admin && actor.source != IdentitySource::Local) {
      fail(ErrorCode::AuthzDenied, "bulk import requires a root administrator");
    }
    registry_.import_topology(topology);
    if (directory) registry_.import_directory(*directory);
    persist_registry();
  });
}

ResultIngest Core::ingest_results(const ApiIdentity& actor, std::string_view json_lines) {
  std::vector<ProbeResult> parsed;
  std::vector<std::size_t> line_of;
  ResultIngest outcome;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= json_lines.size()) {
    auto end = json_lines.find('\n', pos);
    if (end == std::string_view::npos) end = json_lines.size();
    auto line = json_lines.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    try {
      parsed.push_back(probe_result_from_json(json::parse(line)));
      line_of.push_back(line_no);
    } catch (const json::exception& e) {
      outcome.errors.push_back({line_no, "PARSE_ERROR", e.what()});
    } catch (const Error& e) {
      outcome.errors.push_back({line_no, std::string(to_string(e.code())), e.what()});
    }
  }
  auto rest = ingest_results(actor, parsed);
  for (auto& e : rest.errors) e.line = line_of.at(e.line - 1);
  outcome.accepted = rest.accepted;
  outcome.duplicates = rest.duplicates;
  outcome.errors.insert(outcome.errors.end(), rest.errors.begin(), rest.errors.end());
  std::sort(outcome.errors.begin(), outcome.errors.end(),
            [](const LineError& a, const LineError& b) { return a.line < b.line; });
  return outcome;
}

ResultIngest Core::ingest_results(const ApiIdentity& actor, std::span<const ProbeResult> results) {
  return audited(actor, "ingest_results", std::to_string(results.size()) + " results", [&](AuditEntry& entry) {
    require_writer(actor);
    ResultIngest outcome;
    const Timestamp now = clock_();
    std::vector<json> fresh;
    for (std::size_t i = 0; i < results.size(); ++i) {
      try {
        const auto& r = results[i];
        if (!actor.root_admin && registry_.contains(r.service) &&
            !registry_.check_authz(actor.subject_dn, Action::Edit, r.service)) {
          fail(ErrorCode::AuthzDenied, "no EDIT right over " + r.service);
        }
        const auto rec = probes_.record(r, registry_, now);
        if (rec.inserted) {
          ++outcome.accepted;
          fresh.push_back(to_json(r));
        } else {
          ++outcome.duplicates;
        }
      } catch (const Error& e) {
        outcome.errors.push_back({i + 1, std::string(to_string(e.code())), e.what()});
      }
    }
    store_->append_batch(Namespace::ProbeResults, fresh);
    if (!outcome.errors.empty()) entry.outcome = "PARTIAL";
    return outcome;
  });
}

AccountingIngest Core::ingest_accounting(const ApiIdentity& actor, const NodeId& site, std::string_view log_text) {
  return audited(actor, "ingest_accounting", site, [&](AuditEntry& entry) {
    const auto node = registry_.find(site);
    if (!node || node->kind != NodeKind::Site) fail(ErrorCode::UnknownSite, "unknown site: " + site);
    if (!actor.root_admin && actor.source != IdentitySource::Local &&
        !registry_.check_authz(actor.subject_dn, Action::Edit, site)) {
      fail(ErrorCode::AuthzDenied, "no EDIT right over " + site);
    }
    const auto parsed = parse_batch_log(site, log_text);
    AccountingIngest outcome;
    outcome.records = parsed.records.size();
    outcome.errors = parsed.errors.size();
    outcome.error_lines = parsed.errors;
    std::vector<UsageRecord> normalized;
    normalized.reserve(parsed.records.size());
    for (const auto& job : parsed.records) normalized.push_back(normalize(job, registry_));
    std::vector<std::pair<std::string, json>> writes;
    {
      std::unique_lock lock(usage_mutex_);
      for (auto& r : normalized) {
        const auto key = std::make_pair(r.site, r.job_id);
        const auto it = usage_.find(key);
        if (it != usage_.end() && it->second.job_type == JobType::Mpi && r.job_type != JobType::Mpi) {
          ++outcome.kept_mpi;
          continue;
        }
        if (it != usage_.end() && it->second == r) continue;
        writes.emplace_back(usage_key(r.site, r.job_id), to_json(r));
        usage_[key] = std::move(r);
        ++outcome.stored;
      }
    }
    store_->upsert_batch(Namespace::Usage, writes);
    if (outcome.errors > 0) entry.outcome = "PARTIAL";
    return outcome;
  });
}

std::vector<AlarmTransition> Core::ingest_wms(const ApiIdentity& actor, const WmsSnapshot& snapshot) {
  return audited(actor, "ingest_wms", snapshot.wms, [&](AuditEntry&) {
    require_writer(actor);
    if (!actor.root_admin && registry_.contains(snapshot.wms) &&
        !registry_.check_authz(actor.subject_dn, Action::Edit, snapshot.wms)) {
      fail(ErrorCode::AuthzDenied, "no EDIT right over " + snapshot.wms);
    }
    auto transitions = collector_.ingest(snapshot, rules_, registry_);
    store_->append(Namespace::Wms, to_json(snapshot));
    return transitions;
  });
}

Ticket Core::open_ticket(const ApiIdentity& actor, const NodeId& site, Severity severity, std::string summary,
                         std::vector<EvidenceRef> evidence) {
  return audited(actor, "open_ticket", site, [&](AuditEntry& entry) {
    const auto before = desk_.outbox().size();
    auto t = desk_.open(registry_, actor.subject_dn, site, severity, std::move(summary), std::move(evidence), clock_());
    entry.target = t.id;
    store_->upsert(Namespace::Tickets, "ticket:" + t.id, to_json(t));
    const auto outbox = desk_.outbox();
    for (std::size_t i = before; i < outbox.size(); ++i) {
      char key[32];
      std::snprintf(key, sizeof key, "outbox:%010zu", i);
      store_->upsert(Namespace::Tickets, key, to_json(outbox[i]));
    }
    return t;
  });
}

Ticket Core::transition_ticket(const ApiIdentity& actor, const std::string& id, TicketState to, std::string note) {
  return audited(actor, "transition_ticket", id, [&](AuditEntry&) {
    const auto before = desk_.outbox().size();
    auto t = desk_.transition(registry_, actor.subject_dn, id, to, std::move(note), clock_());
    store_->upsert(Namespace::Tickets, "ticket:" + t.id, to_json(t));
    const auto outbox = desk_.outbox();
    for (std::size_t i = before; i < outbox.size(); ++i) {
      char key[32];
      std::snprintf(key, sizeof key, "outbox:%010zu", i);
      store_->upsert(Namespace::Tickets, key, to_json(outbox[i]));
    }
    return t;
  });
}

std::vector<ProbeResult> Core::run_probes() {
  ApiIdentity scheduler;
  scheduler.subject_dn = "scheduler";
  scheduler.source = IdentitySource::Local;
  return audited(scheduler, "run_probes", "due probes", [&](AuditEntry& entry) {
    auto recorded = scheduler_->run_once(clock_());
    std::vector<json> lines;
    for (const auto& r : recorded) lines.push_back(to_json(r));
    store_->append_batch(Namespace::ProbeResults, lines);
    entry.target = std::to_string(recorded.size()) + " results";
    return recorded;
  });
}

// --- queries ---------------------------------------------------------------------

json Core::topology(const std::optional<NodeId>& scope) const {
  if (!scope) return to_json(registry_.export_all());
  return to_json(registry_.export_topology(*scope));
}

ResourceTotals Core::summary(const NodeId& scope) const { return registry_.resource_summary(scope); }

std::vector<ServiceStatus> Core::status(const std::optional<NodeId>& scope) const {
  std::vector<RegistryNode> services;
  if (scope) {
    const auto node = registry_.node(*scope);
    if (node.kind == NodeKind::Service) {
      services.push_back(node);
    } else {
      services = registry_.descendants(*scope, NodeKind::Service);
    }
  } else {
    for (const auto& root : registry_.roots()) {
      auto sub = registry_.descendants(root.id, NodeKind::Service);
      services.insert(services.end(), sub.begin(), sub.end());
    }
  }
  const Timestamp now = clock_();
  std::vector<ServiceStatus> out;
  for (const auto& s : services) out.push_back(latest_status(probes_, registry_, s.id, now));
  return out;
}

AvailabilityReport Core::availability(Window window) const {
  return availability_report(registry_, probes_, window, config_.sla);
}

json Core::availability_json(const std::optional<NodeId>& scope, Window window) const {
  const auto report = availability(window);
  json doc = to_json(report);
  if (!scope) {
    doc["scope"] = nullptr;
    doc["figure"] = doc["infrastructure"];
    return doc;
  }
  registry_.node(*scope);  // UNKNOWN_NODE for a bad scope
  std::set<NodeId> inside{*scope};
  for (auto kind : {NodeKind::Country, NodeKind::Site, NodeKind::Service}) {
    for (const auto& d : registry_.descendants(*scope, kind)) inside.insert(d.id);
  }
  json figure = nullptr;
  for (const char* list : {"per_roc", "per_country", "per_site", "per_service"}) {
    json kept = json::array();
    for (const auto& f : doc[list]) {
      if (!inside.contains(f["scope"].get<std::string>())) continue;
      if (f["scope"] == *scope) figure = f;
      kept.push_back(f);
    }
    doc[list] = kept;
  }
  json conformance = json::object();
  for (const auto& [site, ok] : doc["sla_conformance"].items()) {
    if (inside.contains(site)) conformance[site] = ok;
  }
  doc["sla_conformance"] = conformance;
  doc["scope"] = *scope;
  doc["figure"] = figure;
  return doc;
}

AvailabilityReport Core::quarter_report(int quarter) const {
  if (quarter < 1) fail(ErrorCode::OutOfRange, "quarters are numbered from 1");
  return quarterly_report(QuarterId{quarter}, registry_, probes_, config_.sla);
}

UsageTable Core::usage_query(const UsageFilter& filter, Dimension rows, Dimension cols, Metric metric) const {
  const auto records = usage_records();
  return query_usage(records, filter, rows, cols, metric);
}

MetricSeries Core::wms_history(const NodeId& wms, const std::string& metric, Window window) const {
  return collector_.history(wms, metric, window, registry_);
}

std::vector<Alarm> Core::alarms(bool active_only) const { return collector_.alarms(active_only); }

std::vector<Ticket> Core::tickets(std::optional<TicketState> state) const { return desk_.list(state); }

std::string Core::good_for(Date date) const {
  if (!rota_) fail(ErrorCode::ConfigError, "no shift rota configured");
  return current_good(date, *rota_);
}

std::vector<DraftTicket> Core::suggestions() const {
  std::map<NodeId, std::vector<ProbeResult>> recent;
  const Timestamp until = clock_() + kClockSkewAllowance + Seconds{1};
  for (const auto& root : registry_.roots()) {
    for (const auto& s : registry_.descendants(root.id, NodeKind::Service)) {
      if (!s.critical()) continue;
      auto results = probes_.status_results(s.id, Timestamp{}, until);
      if (results.size() > 2) results.erase(results.begin(), results.end() - 2);
      if (!results.empty()) recent.emplace(s.id, std::move(results));
    }
  }
  const auto active = collector_.alarms(true);
  const auto open = desk_.list();
  return suggest_tickets(registry_, recent, active, open);
}

ResolutionStats Core::resolution(Window window) const {
  const auto all = desk_.list();
  return resolution_metrics(window, all);
}

json Core::healthcheck() const {
  json subsystems = json::object();
  std::vector<std::string> reasons;
  if (const auto problem = store_->health()) {
    subsystems["store"] = {{"status", "DEGRADED"}, {"reason", *problem}};
    reasons.push_back(*problem);
  } else {
    subsystems["store"] = {{"status", "OK"}, {"reason", nullptr}};
  }
  json scheduler = {{"status", "OK"}, {"running", scheduler_running_.load()}, {"last_tick", nullptr}, {"reason", nullptr}};
  const auto last = scheduler_->last_tick();
  if (to_unix(last) != 0) scheduler["last_tick"] = format_iso8601(last);
  if (scheduler_running_.load() && to_unix(last) != 0 && clock_() - last > 3 * config_.scheduler_interval) {
    scheduler["status"] = "DEGRADED";
    scheduler["reason"] = "scheduler has not ticked since " + format_iso8601(last);
    reasons.push_back(scheduler["reason"]);
  }
  subsystems["scheduler"] = scheduler;
  return json{{"status", reasons.empty() ? "OK" : "DEGRADED"},
              {"version", kBuildVersion},
              {"subsystems", subsystems},
              {"reasons", reasons}};
}

json Core::console_config() const {
  return json{{"api_base", "/api/v1"}, {"refresh_interval_s", config_.console_refresh_s}, {"version", kBuildVersion}};
}

void Core::compact() {
  std::lock_guard lock(write_mutex_);
  store_->compact();
  writes_since_compact_ = 0;
}

}  // namespace gridops
