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

#include "gridops/http_api.hpp"

#include <openssl/ssl.h>
#include <openssl/x509.h>

#include <condition_variable>
#include <thread>

#include <httplib.h>

namespace gridops {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unauthenticated: return 401;
    case ErrorCode::AuthzDenied:
    case ErrorCode::UnknownIdentity:
    case ErrorCode::UnknownDn: return 403;
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownService:
    case ErrorCode::UnknownSite:
    case ErrorCode::UnknownWms:
    case ErrorCode::UnknownMetric:
    case ErrorCode::UnknownTicket: return 404;
    case ErrorCode::HierarchyViolation:
    case ErrorCode::DuplicateSiblingName:
    case ErrorCode::IllegalTransition:
    case ErrorCode::AppendOnlyViolation:
    case ErrorCode::DuplicateTimestamp:
    case ErrorCode::NoSiteContact:
    case ErrorCode::MpiNotSupported:
    case ErrorCode::NoCriticalServices: return 409;
    case ErrorCode::PayloadTooLarge: return 413;
    case ErrorCode::FutureTimestamp: return 422;
    case ErrorCode::StoreIo: return 503;
    case ErrorCode::ConfigError: return 500;
    default: return 400;
  }
}

std::string render(const json& document) { return document.dump(2) + "\n"; }

namespace {

std::optional<std::string> peer_dn(const httplib::Request& req) {
  if (!req.ssl) return std::nullopt;
  X509* cert = SSL_get_peer_certificate(const_cast<SSL*>(req.ssl));
  if (!cert) return std::nullopt;
  std::optional<std::string> dn;
  if (SSL_get_verify_result(req.ssl) == X509_V_OK) {
    BIO* bio = BIO_new(BIO_s_mem());
    X509_NAME_print_ex(bio, X509_get_subject_name(cert), 0, XN_FLAG_RFC2253);
    char* data = nullptr;
    const long len = BIO_get_mem_data(bio, &data);
    dn = std::string(data, static_cast<std::size_t>(len));
    BIO_free(bio);
  }
  X509_free(cert);
  return dn;
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = req.get_param_value(name);
  if (v.empty()) return std::nullopt;
  return v;
}

std::string required(const httplib::Request& req, const char* name) {
  auto v = param(req, name);
  if (!v) fail(ErrorCode::InvalidArgument, std::string("missing query parameter ") + name);
  return *v;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
  }
}

void send_json(httplib::Response& res, const json& doc, int status = 200) {
  res.status = status;
  res.set_content(render(doc), "application/json");
}

}  // namespace

struct HttpApi::Impl {
  Core& core;
  std::unique_ptr<httplib::Server> server;
  bool tls = false;
  int port = 0;
  std::thread thread;
  std::jthread scheduler;
  std::mutex mutex;
  std::condition_variable_any wake;

  explicit Impl(Core& c) : core(c) {
    const auto& cfg = core.config();
    if (!cfg.tls_cert.empty() && !cfg.tls_key.empty()) {
      auto ssl = std::make_unique<httplib::SSLServer>(
          cfg.tls_cert.c_str(), cfg.tls_key.c_str(), cfg.tls_client_ca.empty() ? nullptr : cfg.tls_client_ca.c_str());
      if (!ssl->is_valid()) fail(ErrorCode::ConfigError, "cannot load TLS certificate or key");
      server = std::move(ssl);
      tls = true;
    } else {
      server = std::make_unique<httplib::Server>();
    }
    routes();
  }

  ApiIdentity identify(const httplib::Request& req) const {
    RequestMeta meta;
    meta.verified_client_dn = peer_dn(req);
    for (const auto& [k, v] : req.headers) {
      std::string name = k;
      for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      meta.headers.emplace(name, v);
    }
    return authenticate(meta, core.config(), core.registry());
  }

  using Body = std::function<void(const httplib::Request&, httplib::Response&, const ApiIdentity&)>;

  httplib::Server::Handler guarded(Body body) {
    return [this, body = std::move(body)](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto who = identify(req);
        body(req, res, who);
      } catch (const Error& e) {
        send_json(res, {{"error", to_string(e.code())}, {"message", e.what()}}, http_status(e.code()));
      } catch (const json::exception& e) {
        send_json(res, {{"error", "PARSE_ERROR"}, {"message", e.what()}}, 400);
      } catch (const std::exception& e) {
        send_json(res, {{"error", "INTERNAL"}, {"message", e.what()}}, 500);
      }
    };
  }

  static Window window_from(const httplib::Request& req) {
    return {parse_iso8601(required(req, "from")), parse_iso8601(required(req, "to"))};
  }

  void routes() {
    auto& s = *server;
    s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      const auto doc = core.healthcheck();
      send_json(res, doc, doc["status"] == "OK" ? 200 : 503);
    });

    s.Get("/api/v1/topology", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      send_json(res, core.topology(param(req, "scope")));
    }));
    s.Put(R"(/api/v1/nodes/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      auto node = node_from_json(parse_body(req));
      node.id = req.matches[1];
      const auto id = core.put_node(who, std::move(node));
      send_json(res, to_json(core.registry().node(id)));
    }));
    s.Get("/api/v1/summary", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      const NodeId scope = param(req, "scope").value_or(default_scope());
      auto doc = to_json(core.summary(scope));
      doc["scope"] = scope;
      send_json(res, doc);
    }));
    s.Post("/api/v1/results", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      std::string_view body = req.body;
      const auto first = body.find_first_not_of(" \t\r\n");
      if (first != std::string_view::npos && body[first] == '[') {
        std::vector<ProbeResult> results;
        for (const auto& j : parse_body(req)) results.push_back(probe_result_from_json(j));
        send_json(res, to_json(core.ingest_results(who, results)));
      } else {
        send_json(res, to_json(core.ingest_results(who, body)));
      }
    }));
    s.Get("/api/v1/status", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      json arr = json::array();
      for (const auto& st : core.status(param(req, "scope"))) arr.push_back(to_json(st));
      send_json(res, arr);
    }));
    s.Get("/api/v1/availability", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      const auto w = window_from(req);
      if (param(req, "format") == std::optional<std::string>("csv")) {
        res.set_content(to_csv(core.availability(w)), "text/csv");
        return;
      }
      send_json(res, core.availability_json(param(req, "scope"), w));
    }));
    s.Get(R"(/api/v1/reports/quarter/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      const int n = std::stoi(req.matches[1]);
      const auto report = core.quarter_report(n);
      if (param(req, "format") == std::optional<std::string>("csv")) {
        res.set_content(to_csv(report), "text/csv");
      } else {
        send_json(res, to_json(report));
      }
    }));
    s.Post("/api/v1/accounting/logs", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      send_json(res, to_json(core.ingest_accounting(who, required(req, "site"), req.body)));
    }));
    s.Get("/api/v1/accounting/query", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      UsageFilter filter;
      filter.vo = param(req, "vo");
      filter.country = param(req, "country");
      filter.site = param(req, "site");
      if (const auto jt = param(req, "job_type")) filter.job_type = parse_job_type(*jt);
      if (param(req, "from") || param(req, "to")) filter.window = window_from(req);
      const auto table = core.usage_query(filter, parse_dimension(param(req, "rows").value_or("VO")),
                                          parse_dimension(param(req, "cols").value_or("COUNTRY")),
                                          parse_metric(param(req, "metric").value_or("CPU_HOURS")));
      const auto accept = req.get_header_value("Accept");
      if (accept.find("application/xml") != std::string::npos || param(req, "format") == std::optional<std::string>("xml")) {
        res.set_content(export_xml(table), "application/xml");
      } else {
        send_json(res, to_json(table));
      }
    }));
    s.Post("/api/v1/wms/snapshots", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      const auto body = parse_body(req);
      json out = json::array();
      const auto ingest_one = [&](const json& j) {
        for (const auto& t : core.ingest_wms(who, wms_snapshot_from_json(j))) out.push_back(to_json(t));
      };
      if (body.is_array()) {
        for (const auto& j : body) ingest_one(j);
      } else {
        ingest_one(body);
      }
      send_json(res, {{"transitions", out}});
    }));
    s.Get(R"(/api/v1/wms/([^/]+)/history)", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      Window w{Timestamp{}, std::chrono::sys_days{std::chrono::year{9999} / 1 / 1}};
      if (param(req, "from") || param(req, "to")) w = window_from(req);
      const std::string metric = required(req, "metric");
      json points = json::array();
      for (const auto& [t, v] : core.wms_history(req.matches[1], metric, w)) {
        points.push_back({{"ts", format_iso8601(t)}, {"value", v}});
      }
      send_json(res, {{"wms", std::string(req.matches[1])}, {"metric", metric}, {"points", points}});
    }));
    s.Get("/api/v1/alarms", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      const bool active_only = param(req, "active").value_or("false") == "true";
      json arr = json::array();
      for (const auto& a : core.alarms(active_only)) arr.push_back(to_json(a));
      send_json(res, arr);
    }));
    s.Post("/api/v1/tickets", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      const auto body = parse_body(req);
      std::vector<EvidenceRef> evidence;
      for (const auto& e : body.value("evidence", json::array())) {
        evidence.push_back({e.at("kind").get<std::string>(), e.at("ref").get<std::string>(),
                            e.value("evidence_class", "")});
      }
      const auto t = core.open_ticket(who, body.at("site").get<std::string>(),
                                      parse_severity(body.value("severity", "SIMPLE")),
                                      body.value("summary", ""), std::move(evidence));
      send_json(res, to_json(t), 201);
    }));
    s.Patch(R"(/api/v1/tickets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity& who) {
      const auto body = parse_body(req);
      const auto t = core.transition_ticket(who, req.matches[1], parse_ticket_state(body.at("state").get<std::string>()),
                                            body.value("note", ""));
      send_json(res, to_json(t));
    }));
    s.Get("/api/v1/tickets", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      std::optional<TicketState> state;
      if (const auto st = param(req, "state")) state = parse_ticket_state(*st);
      json arr = json::array();
      for (const auto& t : core.tickets(state)) arr.push_back(to_json(t));
      send_json(res, arr);
    }));
    s.Get("/api/v1/tickets/metrics", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      send_json(res, to_json(core.resolution(window_from(req))));
    }));
    s.Get("/api/v1/good/current", guarded([this](const httplib::Request& req, httplib::Response& res, const ApiIdentity&) {
      const Date date = param(req, "date") ? parse_date(*param(req, "date")) : date_of(core.now());
      send_json(res, {{"date", format_date(date)}, {"country", core.good_for(date)}});
    }));
    s.Get("/api/v1/suggestions", guarded([this](const httplib::Request&, httplib::Response& res, const ApiIdentity&) {
      json arr = json::array();
      for (const auto& d : core.suggestions()) arr.push_back(to_json(d));
      send_json(res, arr);
    }));
    s.Get("/api/v1/console-config", guarded([this](const httplib::Request&, httplib::Response& res, const ApiIdentity&) {
      send_json(res, core.console_config());
    }));
    s.Get("/api/v1/audit", guarded([this](const httplib::Request&, httplib::Response& res, const ApiIdentity& who) {
      if (!who.root_admin) fail(ErrorCode::AuthzDenied, "the audit log is restricted to root administrators");
      json arr = json::array();
      for (const auto& e : core.audit_log()) arr.push_back(to_json(e));
      send_json(res, arr);
    }));
  }

  NodeId default_scope() const {
    const auto roots = core.registry().roots();
    if (roots.empty()) fail(ErrorCode::UnknownNode, "the registry is empty");
    return roots.front().id;
  }

  void run_scheduler(std::stop_token stop) {
    core.set_scheduler_running(true);
    while (!stop.stop_requested()) {
      try {
        core.run_probes();
      } catch (const std::exception&) {
        // The failure is already in the audit log; keep ticking.
      }
      std::unique_lock lock(mutex);
      wake.wait_for(lock, stop, core.config().scheduler_interval, [] { return false; });
    }
    core.set_scheduler_running(false);
  }
};

HttpApi::HttpApi(Core& core) : impl_(std::make_unique<Impl>(core)) {}

HttpApi::~HttpApi() { stop(); }

bool HttpApi::tls() const { return impl_->tls; }

int HttpApi::bind() { return bind(impl_->core.config().listen_host(), impl_->core.config().listen_port()); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server->bind_to_any_port(host);
  } else if (impl_->server->bind_to_port(host, port)) {
    impl_->port = port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port < 0) fail(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  return impl_->port;
}

void HttpApi::serve(bool run_scheduler) {
  if (run_scheduler) {
    impl_->scheduler = std::jthread([this](std::stop_token st) { impl_->run_scheduler(st); });
  }
  impl_->server->listen_after_bind();
  if (impl_->scheduler.joinable()) {
    impl_->scheduler.request_stop();
    impl_->scheduler.join();
  }
}

void HttpApi::start(bool run_scheduler) {
  impl_->thread = std::thread([this, run_scheduler] { serve(run_scheduler); });
  impl_->server->wait_until_ready();
}

void HttpApi::stop() {
  if (!impl_) return;
  impl_->server->stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace gridops
