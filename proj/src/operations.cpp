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

#include "gridops/operations.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

// --- rota ----------------------------------------------------------------------

void ShiftRota::validate() const {
  if (countries.empty()) fail(ErrorCode::InvalidArgument, "rota needs at least one country");
  std::set<std::string> seen(countries.begin(), countries.end());
  if (seen.size() != countries.size()) fail(ErrorCode::InvalidArgument, "rota lists a country twice");
  if (std::chrono::weekday{epoch_week_start} != std::chrono::Monday) {
    fail(ErrorCode::InvalidArgument, "rota epoch must be a Monday");
  }
}

json to_json(const ShiftRota& rota) {
  return json{{"countries", rota.countries}, {"epoch_week_start", format_date(rota.epoch_week_start)}};
}

ShiftRota rota_from_json(const json& j) {
  try {
    ShiftRota rota;
    rota.countries = j.at("countries").get<std::vector<std::string>>();
    rota.epoch_week_start = parse_date(j.at("epoch_week_start").get<std::string>());
    rota.validate();
    return rota;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad rota file: ") + e.what());
  }
}

std::int64_t shift_week(Date date, const ShiftRota& rota) {
  if (date < rota.epoch_week_start) {
    fail(ErrorCode::DateBeforeEpoch, format_date(date) + " precedes the rota epoch");
  }
  return (date - rota.epoch_week_start).count() / 7;
}

std::string current_good(Date date, const ShiftRota& rota) {
  rota.validate();
  const auto week = shift_week(date, rota);
  return rota.countries[static_cast<std::size_t>(week % static_cast<std::int64_t>(rota.countries.size()))];
}

// --- tickets -------------------------------------------------------------------

std::string_view to_string(Severity s) { return s == Severity::Simple ? "SIMPLE" : "COMPLEX"; }

std::string_view to_string(TicketState s) {
  switch (s) {
    case TicketState::New: return "NEW";
    case TicketState::Assigned: return "ASSIGNED";
    case TicketState::InProgress: return "IN_PROGRESS";
    case TicketState::Solved: return "SOLVED";
    case TicketState::Verified: return "VERIFIED";
    case TicketState::Reopened: return "REOPENED";
  }
  return "?";
}

Severity parse_severity(std::string_view text) {
  if (text == "SIMPLE") return Severity::Simple;
  if (text == "COMPLEX") return Severity::Complex;
  fail(ErrorCode::InvalidArgument, "unknown severity: " + std::string(text));
}

TicketState parse_ticket_state(std::string_view text) {
  for (auto s : {TicketState::New, TicketState::Assigned, TicketState::InProgress, TicketState::Solved,
                 TicketState::Verified, TicketState::Reopened}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::InvalidArgument, "unknown ticket state: " + std::string(text));
}

bool legal_transition(TicketState from, TicketState to) {
  using S = TicketState;
  switch (from) {
    case S::New: return to == S::Assigned;
    case S::Assigned: return to == S::InProgress;
    case S::InProgress: return to == S::Solved;
    case S::Solved: return to == S::Verified || to == S::Reopened;
    case S::Reopened: return to == S::InProgress;
    case S::Verified: return false;
  }
  return false;
}

bool is_open(TicketState s) { return s != TicketState::Solved && s != TicketState::Verified; }

namespace {

json evidence_json(const EvidenceRef& e) {
  return json{{"kind", e.kind}, {"ref", e.ref}, {"evidence_class", e.evidence_class}};
}

EvidenceRef evidence_from_json(const json& j) {
  return {j.at("kind").get<std::string>(), j.at("ref").get<std::string>(), j.value("evidence_class", "")};
}

json optional_time(const std::optional<Timestamp>& t) {
  return t ? json(format_iso8601(*t)) : json(nullptr);
}

std::optional<Timestamp> optional_time_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse_iso8601(j.at(key).get<std::string>());
}

}  // namespace

json to_json(const Ticket& t) {
  json evidence = json::array();
  for (const auto& e : t.linked_evidence) evidence.push_back(evidence_json(e));
  json history = json::array();
  for (const auto& h : t.history) {
    history.push_back({{"at", format_iso8601(h.at)},
                       {"from", h.from ? json(to_string(*h.from)) : json(nullptr)},
                       {"to", to_string(h.to)},
                       {"actor", h.actor},
                       {"note", h.note}});
  }
  return json{{"id", t.id},
              {"site", t.site},
              {"opened_by", t.opened_by},
              {"assignee", t.assignee},
              {"severity", to_string(t.severity)},
              {"state", to_string(t.state)},
              {"summary", t.summary},
              {"opened_at", format_iso8601(t.opened_at)},
              {"solved_at", optional_time(t.solved_at)},
              {"closed_at", optional_time(t.closed_at)},
              {"linked_evidence", evidence},
              {"history", history}};
}

Ticket ticket_from_json(const json& j) {
  try {
    Ticket t;
    t.id = j.at("id").get<std::string>();
    t.site = j.at("site").get<std::string>();
    t.opened_by = j.at("opened_by").get<std::string>();
    t.assignee = j.value("assignee", "");
    t.severity = parse_severity(j.at("severity").get<std::string>());
    t.state = parse_ticket_state(j.at("state").get<std::string>());
    t.summary = j.value("summary", "");
    t.opened_at = parse_iso8601(j.at("opened_at").get<std::string>());
    t.solved_at = optional_time_from(j, "solved_at");
    t.closed_at = optional_time_from(j, "closed_at");
    for (const auto& e : j.value("linked_evidence", json::array())) t.linked_evidence.push_back(evidence_from_json(e));
    for (const auto& h : j.value("history", json::array())) {
      TicketEvent ev;
      ev.at = parse_iso8601(h.at("at").get<std::string>());
      if (h.contains("from") && !h.at("from").is_null()) ev.from = parse_ticket_state(h.at("from").get<std::string>());
      ev.to = parse_ticket_state(h.at("to").get<std::string>());
      ev.actor = h.value("actor", "");
      ev.note = h.value("note", "");
      t.history.push_back(std::move(ev));
    }
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad ticket document: ") + e.what());
  }
}

TicketState replay_state(std::span<const TicketEvent> history) {
  if (history.empty() || history.front().from || history.front().to != TicketState::New) {
    fail(ErrorCode::IllegalTransition, "ticket history must start with creation");
  }
  TicketState state = TicketState::New;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const auto& ev = history[i];
    if (!ev.from || *ev.from != state || !legal_transition(state, ev.to) || ev.at < history[i - 1].at) {
      fail(ErrorCode::IllegalTransition, "ticket history is inconsistent");
    }
    state = ev.to;
  }
  return state;
}

json to_json(const NotificationEvent& e) {
  return json{{"at", format_iso8601(e.at)}, {"ticket", e.ticket_id}, {"kind", e.kind},
              {"recipient", e.recipient}, {"message", e.message}};
}

NotificationEvent notification_from_json(const json& j) {
  try {
    return {parse_iso8601(j.at("at").get<std::string>()), j.at("ticket").get<std::string>(),
            j.at("kind").get<std::string>(), j.value("recipient", ""), j.value("message", "")};
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad notification: ") + e.what());
  }
}

std::string TicketDesk::actor_key(const Registry& registry, std::string_view actor_dn) const {
  if (const auto contact = registry.contact_for_dn(actor_dn)) return contact->id;
  if (registry.is_root_admin(actor_dn)) return normalize_dn(actor_dn);
  fail(ErrorCode::AuthzDenied, "identity has view-only access");
}

Ticket TicketDesk::open(const Registry& registry, std::string_view actor_dn, const NodeId& site,
                        Severity severity, std::string summary, std::vector<EvidenceRef> evidence,
                        Timestamp now) {
  const auto node = registry.find(site);
  if (!node || node->kind != NodeKind::Site) fail(ErrorCode::UnknownSite, "unknown site: " + site);
  const std::string actor = actor_key(registry, actor_dn);
  std::optional<Contact> admin;
  for (const auto& c : registry.contacts_at(site)) {
    if (c.privilege == Privilege::Admin) {
      admin = c;
      break;
    }
  }
  if (!admin) fail(ErrorCode::NoSiteContact, "site " + node->name + " has no ADMIN contact");

  std::lock_guard lock(mutex_);
  Ticket t;
  do {
    t.id = "T-" + std::to_string(next_id_++);
  } while (tickets_.contains(t.id));
  t.site = site;
  t.opened_by = actor;
  t.assignee = admin->id;
  t.severity = severity;
  t.state = TicketState::New;
  t.summary = std::move(summary);
  t.opened_at = now;
  t.linked_evidence = std::move(evidence);
  t.history.push_back({now, std::nullopt, TicketState::New, actor, "opened"});
  tickets_[t.id] = t;
  outbox_.push_back({now, t.id, "ticket_opened", admin->email, t.summary});
  return t;
}

Ticket TicketDesk::transition(const Registry& registry, std::string_view actor_dn,
                              const std::string& ticket_id, TicketState to, std::string note,
                              Timestamp now) {
  const auto contact = registry.contact_for_dn(actor_dn);
  const std::string actor = contact ? contact->id : normalize_dn(actor_dn);
  std::lock_guard lock(mutex_);
  const auto it = tickets_.find(ticket_id);
  if (it == tickets_.end()) fail(ErrorCode::UnknownTicket, "unknown ticket " + ticket_id);
  Ticket& t = it->second;
  if (!legal_transition(t.state, to)) {
    fail(ErrorCode::IllegalTransition,
         std::string(to_string(t.state)) + " -> " + std::string(to_string(to)) + " is not allowed");
  }
  bool allowed = registry.is_root_admin(actor_dn) || (contact && (actor == t.assignee || actor == t.opened_by));
  if (!allowed && contact) allowed = registry.check_authz(actor_dn, Action::Admin, t.site);
  if (!allowed) fail(ErrorCode::AuthzDenied, "actor may not change ticket " + ticket_id);
  if (!t.history.empty() && now < t.history.back().at) {
    fail(ErrorCode::InvalidArgument, "ticket transitions must move forward in time");
  }
  t.history.push_back({now, t.state, to, actor, std::move(note)});
  t.state = to;
  if (to == TicketState::Solved) t.solved_at = now;
  if (to == TicketState::Verified) t.closed_at = now;
  std::string recipient = t.opened_by;
  if (const auto opener = registry.contact(t.opened_by)) recipient = opener->email;
  outbox_.push_back({now, t.id, "ticket_" + std::string(to_string(to)), recipient, t.summary});
  return t;
}

std::optional<Ticket> TicketDesk::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = tickets_.find(id);
  if (it == tickets_.end()) return std::nullopt;
  return it->second;
}

std::vector<Ticket> TicketDesk::list(std::optional<TicketState> state) const {
  std::lock_guard lock(mutex_);
  std::vector<Ticket> out;
  for (const auto& [id, t] : tickets_) {
    if (!state || t.state == *state) out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const Ticket& a, const Ticket& b) {
    return std::tie(a.opened_at, a.id) < std::tie(b.opened_at, b.id);
  });
  return out;
}

std::vector<NotificationEvent> TicketDesk::outbox() const {
  std::lock_guard lock(mutex_);
  return outbox_;
}

void TicketDesk::restore(const Ticket& ticket) {
  std::lock_guard lock(mutex_);
  tickets_[ticket.id] = ticket;
  if (ticket.id.rfind("T-", 0) == 0) {
    try {
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(ticket.id.substr(2)) + 1);
    } catch (const std::exception&) {
    }
  }
}

void TicketDesk::restore(const NotificationEvent& event) {
  std::lock_guard lock(mutex_);
  outbox_.push_back(event);
}

// --- suggestions -----------------------------------------------------------------

json to_json(const DraftTicket& d) {
  json evidence = json::array();
  for (const auto& e : d.evidence) evidence.push_back(evidence_json(e));
  return json{{"site", d.site},       {"severity", to_string(d.severity)}, {"summary", d.summary},
              {"evidence", evidence}, {"evidence_class", d.evidence_class}};
}

std::vector<DraftTicket> suggest_tickets(const Registry& registry,
                                         const std::map<NodeId, std::vector<ProbeResult>>& recent_results,
                                         std::span<const Alarm> active_alarms,
                                         std::span<const Ticket> tickets) {
  std::set<std::string> covered;
  for (const auto& t : tickets) {
    if (!is_open(t.state)) continue;
    for (const auto& e : t.linked_evidence) covered.insert(e.evidence_class);
  }
  std::map<std::string, DraftTicket> drafts;
  const auto failing = [](const ProbeResult& r) { return state_for(r.status) == ServiceState::Down; };

  for (const auto& [service, results] : recent_results) {
    const auto node = registry.find(service);
    if (!node || node->kind != NodeKind::Service || !node->critical() || !node->parent) continue;
    if (!registry.effectively_active(service) || results.size() < 2) continue;
    const auto& last = results[results.size() - 1];
    const auto& prev = results[results.size() - 2];
    if (!failing(last) || !failing(prev)) continue;
    const std::string cls = "service:" + service + ":down";
    if (covered.contains(cls)) continue;
    DraftTicket d;
    d.site = *node->parent;
    d.summary = std::string(to_string(node->service_type())) + " " + node->name + " failing since " +
                format_iso8601(prev.timestamp);
    d.evidence_class = cls;
    for (const auto* r : {&prev, &last}) {
      d.evidence.push_back({"probe_result", r->service + "|" + r->probe_id + "|" + format_iso8601(r->timestamp), cls});
    }
    drafts.emplace(d.site + "\n" + cls, std::move(d));
  }

  for (const auto& alarm : active_alarms) {
    if (alarm.state != AlarmState::Raised) continue;
    const auto site = registry.ancestor_of_kind(alarm.wms, NodeKind::Site);
    if (!site) continue;
    const std::string cls = "alarm:" + alarm.wms + ":" + alarm.metric;
    if (covered.contains(cls)) continue;
    DraftTicket d;
    d.site = site->id;
    d.summary = "WMS " + alarm.wms + " " + alarm.metric + " above limit (peak " +
                std::to_string(alarm.peak_value) + ")" + (alarm.guide_url.empty() ? "" : ", see " + alarm.guide_url);
    d.evidence_class = cls;
    d.evidence.push_back({"alarm", alarm.wms + "|" + alarm.metric + "|" + format_iso8601(alarm.raised_at), cls});
    drafts.emplace(d.site + "\n" + cls, std::move(d));
  }

  std::vector<DraftTicket> out;
  for (auto& [key, d] : drafts) out.push_back(std::move(d));
  return out;
}

// --- resolution metrics ------------------------------------------------------------

std::int64_t business_days_between(Date opened, Date solved) {
  if (solved <= opened) return 0;
  const std::int64_t span = (solved - opened).count();
  // Whole weeks contribute five weekdays each; walk the remainder.
  std::int64_t count = (span / 7) * 5;
  Date d = opened + std::chrono::days{(span / 7) * 7};
  while (d < solved) {
    d += std::chrono::days{1};
    if (is_weekday(d)) ++count;
  }
  return count;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  q = std::clamp(q, 0.0, 1.0);
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double lower = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return lower;
  const double upper = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return lower + frac * (upper - lower);
}

ResolutionStats resolution_metrics(Window window, std::span<const Ticket> tickets) {
  if (window.empty()) fail(ErrorCode::EmptyWindow, "metrics window is empty");
  ResolutionStats stats;
  stats.window = window;
  stats.simple.target_days = 1;
  stats.complex.target_days = 3;
  std::vector<double> simple_days;
  std::vector<double> complex_days;
  std::size_t met_simple = 0;
  std::size_t met_complex = 0;
  for (const auto& t : tickets) {
    if (!window.contains(t.opened_at)) continue;
    const bool simple = t.severity == Severity::Simple;
    SeverityStats& s = simple ? stats.simple : stats.complex;
    ++s.opened;
    if (!t.solved_at) continue;
    ++s.solved;
    const auto days = business_days_between(date_of(t.opened_at), date_of(*t.solved_at));
    (simple ? simple_days : complex_days).push_back(static_cast<double>(days));
    if (days <= s.target_days) ++(simple ? met_simple : met_complex);
  }
  const auto finish = [](SeverityStats& s, const std::vector<double>& days, std::size_t met) {
    s.median_days = percentile(days, 0.5);
    s.p90_days = percentile(days, 0.9);
    s.target_met_fraction = s.solved == 0 ? 0.0 : static_cast<double>(met) / static_cast<double>(s.solved);
  };
  finish(stats.simple, simple_days, met_simple);
  finish(stats.complex, complex_days, met_complex);
  const std::size_t solved = stats.simple.solved + stats.complex.solved;
  stats.target_met_fraction =
      solved == 0 ? 0.0 : static_cast<double>(met_simple + met_complex) / static_cast<double>(solved);
  return stats;
}

json to_json(const ResolutionStats& s) {
  const auto sev = [](const SeverityStats& x) {
    return json{{"opened", x.opened},           {"solved", x.solved},     {"median_business_days", x.median_days},
                {"p90_business_days", x.p90_days}, {"target_days", x.target_days},
                {"target_met_fraction", x.target_met_fraction}};
  };
  return json{{"from", format_iso8601(s.window.start)},
              {"to", format_iso8601(s.window.end)},
              {"SIMPLE", sev(s.simple)},
              {"COMPLEX", sev(s.complex)},
              {"target_met_fraction", s.target_met_fraction}};
}

}  // namespace gridops
