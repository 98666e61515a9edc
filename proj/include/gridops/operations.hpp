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
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridops/probe.hpp"
#include "gridops/registry.hpp"
#include "gridops/time.hpp"
#include "gridops/wms.hpp"

namespace gridops {

// --- Grid-Operator-On-Duty rotation ------------------------------------------

struct ShiftRota {
  std::vector<std::string> countries;
  Date epoch_week_start;  // a Monday

  void validate() const;
};

nlohmann::json to_json(const ShiftRota& rota);
ShiftRota rota_from_json(const nlohmann::json& j);

/// Week index since the epoch.
std::int64_t shift_week(Date date, const ShiftRota& rota);
/// countries[week mod |countries|]; throws DATE_BEFORE_EPOCH.
std::string current_good(Date date, const ShiftRota& rota);

// --- Tickets -------------------------------------------------------------------

enum class Severity { Simple, Complex };
enum class TicketState { New, Assigned, InProgress, Solved, Verified, Reopened };

std::string_view to_string(Severity severity);
std::string_view to_string(TicketState state);
Severity parse_severity(std::string_view text);
TicketState parse_ticket_state(std::string_view text);

/// NEW->ASSIGNED->IN_PROGRESS->SOLVED->VERIFIED plus SOLVED->REOPENED->IN_PROGRESS.
bool legal_transition(TicketState from, TicketState to);
/// Open means not yet SOLVED or VERIFIED.
bool is_open(TicketState state);

struct EvidenceRef {
  std::string kind;  // "probe_result" or "alarm"
  std::string ref;
  /// Deduplication key, e.g. "service:<id>:down" or "alarm:<wms>:<metric>".
  std::string evidence_class;

  friend bool operator==(const EvidenceRef&, const EvidenceRef&) = default;
};

struct TicketEvent {
  Timestamp at;
  std::optional<TicketState> from;
  TicketState to = TicketState::New;
  std::string actor;
  std::string note;

  friend bool operator==(const TicketEvent&, const TicketEvent&) = default;
};

struct Ticket {
  std::string id;
  NodeId site;
  std::string opened_by;
  std::string assignee;
  Severity severity = Severity::Simple;
  TicketState state = TicketState::New;
  std::string summary;
  Timestamp opened_at;
  std::optional<Timestamp> solved_at;
  std::optional<Timestamp> closed_at;
  std::vector<EvidenceRef> linked_evidence;
  std::vector<TicketEvent> history;

  friend bool operator==(const Ticket&, const Ticket&) = default;
};

nlohmann::json to_json(const Ticket& ticket);
Ticket ticket_from_json(const nlohmann::json& j);

/// Re-derives the state by replaying the history; throws ILLEGAL_TRANSITION
/// on a broken log.
TicketState replay_state(std::span<const TicketEvent> history);

struct NotificationEvent {
  Timestamp at;
  std::string ticket_id;
  std::string kind;
  std::string recipient;
  std::string message;
};

nlohmann::json to_json(const NotificationEvent& event);
NotificationEvent notification_from_json(const nlohmann::json& j);

/// Helpdesk ticket store. Mutations are serialized; notifications land in an
/// outbox for at-least-once delivery.
class TicketDesk {
 public:
  /// Default assignee is the first ADMIN contact of the site (by contact id).
  Ticket open(const Registry& registry, std::string_view actor_dn, const NodeId& site, Severity severity,
              std::string summary, std::vector<EvidenceRef> evidence, Timestamp now);

  /// The actor must be the assignee, the opener, or an administrator over the site.
  Ticket transition(const Registry& registry, std::string_view actor_dn, const std::string& ticket_id,
                    TicketState to, std::string note, Timestamp now);

  std::optional<Ticket> get(const std::string& id) const;
  std::vector<Ticket> list(std::optional<TicketState> state = std::nullopt) const;
  std::vector<NotificationEvent> outbox() const;

  /// Store replay.
  void restore(const Ticket& ticket);
  void restore(const NotificationEvent& event);

 private:
  std::string actor_key(const Registry& registry, std::string_view actor_dn) const;

  mutable std::mutex mutex_;
  std::map<std::string, Ticket> tickets_;
  std::vector<NotificationEvent> outbox_;
  std::uint64_t next_id_ = 1;
};

// --- Suggestions -----------------------------------------------------------------

struct DraftTicket {
  NodeId site;
  Severity severity = Severity::Simple;
  std::string summary;
  std::vector<EvidenceRef> evidence;
  std::string evidence_class;
};

nlohmann::json to_json(const DraftTicket& draft);

/// One draft per critical service whose two most recent critical results are
/// both failures, and per RAISED alarm, unless an open ticket already carries
/// the same evidence class. Drafts are never persisted.
std::vector<DraftTicket> suggest_tickets(const Registry& registry,
                                         const std::map<NodeId, std::vector<ProbeResult>>& recent_results,
                                         std::span<const Alarm> active_alarms,
                                         std::span<const Ticket> tickets);

// --- Resolution metrics ------------------------------------------------------------

/// Weekdays d with opened < d <= solved (dates, Mon-Fri, no holidays).
std::int64_t business_days_between(Date opened, Date solved);

/// Linear-interpolated percentile, q in [0, 1]; 0 for an empty input.
double percentile(std::vector<double> values, double q);

struct SeverityStats {
  std::size_t opened = 0;
  std::size_t solved = 0;
  double median_days = 0.0;
  double p90_days = 0.0;
  double target_met_fraction = 0.0;
  std::int64_t target_days = 0;
};

struct ResolutionStats {
  Window window;
  SeverityStats simple;
  SeverityStats complex;
  double target_met_fraction = 0.0;
};

/// Over tickets opened inside the window; targets are 1 business day for
/// SIMPLE and 3 for COMPLEX.
ResolutionStats resolution_metrics(Window window, std::span<const Ticket> tickets);

nlohmann::json to_json(const ResolutionStats& stats);

}  // namespace gridops
