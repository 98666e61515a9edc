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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>

#include "gridops/accounting.hpp"
#include "gridops/core.hpp"
#include "gridops/http_api.hpp"
#include "support.hpp"

using namespace gridops;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kLine =
    "06/01/2009 10:00:00;E;77.ce.example.org;user=u1 group=see queue=q start=1243846800 end=1243850400 "
    "exec_host=wn01/0 resources_used.walltime=01:00:00 resources_used.cput=00:30:00";

struct Server {
  fs::path dir;
  std::unique_ptr<Core> core;
  std::unique_ptr<HttpApi> api;
  int port = 0;

  Server() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("gridops-http-" + std::to_string(rd()));
    fs::create_directories(dir);
    std::ofstream(dir / "rota.json") << R"({"countries":["BG","GR","RS"],"epoch_week_start":"2009-06-01"})";
    std::ofstream(dir / "rules.json")
        << R"([{"metric":"input_queue_length","raise_above":5000,"clear_below":4000,"guide_url":"https://wiki.example.org/q"}])";
    Config c;
    c.data_dir = (dir / "data").string();
    c.root_admins = {support::kRoot};
    c.trusted_proxy_header = "X-Client-DN";
    c.rota_file = (dir / "rota.json").string();
    c.alarm_rules_file = (dir / "rules.json").string();
    core = std::make_unique<Core>(c, [] { return support::kT0 + Hours{2}; });
    const auto reg = support::tiny_registry();
    core->import_registry(core->local_identity(), reg.export_all(), reg.directory());
    core->put_node(core->local_identity(),
                   {"wms1", NodeKind::Service, "WMS", "s1", {{"service_type", "WMS"}, {"critical", "false"}},
                    NodeStatus::Active});
    api = std::make_unique<HttpApi>(*core);
    port = api->bind("127.0.0.1", 0);
    api->start(false);
  }
  ~Server() {
    api->stop();
    api.reset();
    core.reset();
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  httplib::Client client(const std::string& dn = support::kRoot) const {
    httplib::Client cli("127.0.0.1", port);
    if (!dn.empty()) cli.set_default_headers({{"X-Client-DN", dn}});
    return cli;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

}  // namespace

TEST_SUITE("http") {
  TEST_CASE("identity is required except on the health probe") {
    Server s;
    auto anon = s.client("");
    auto r = anon.Get("/api/v1/topology");
    REQUIRE(r);
    CHECK(r->status == 401);
    CHECK(body_of(r)["error"] == "UNAUTHENTICATED");
    r = anon.Get("/healthz");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["status"] == "OK");
  }

  TEST_CASE("read endpoints") {
    Server s;
    auto cli = s.client("CN=Nobody");
    const auto topo = body_of(cli.Get("/api/v1/topology?scope=rs"));
    CHECK(topo.dump().find("\"s1\"") != std::string::npos);
    const auto summary = body_of(cli.Get("/api/v1/summary?scope=rs"));
    CHECK(summary["scope"] == "rs");
    CHECK(summary["cpu_total"] == 100);
    CHECK(body_of(cli.Get("/api/v1/status?scope=s1")).size() == 3);
    const auto avail = body_of(cli.Get("/api/v1/availability?scope=s1&from=2009-06-01T00:00:00Z&to=2009-06-01T01:00:00Z"));
    CHECK(avail.is_object());
    auto csv = cli.Get("/api/v1/availability?from=2009-06-01T00:00:00Z&to=2009-06-01T01:00:00Z&format=csv");
    REQUIRE(csv);
    CHECK(csv->get_header_value("Content-Type").find("text/csv") != std::string::npos);
    const auto good = body_of(cli.Get("/api/v1/good/current?date=2009-07-06"));
    CHECK(good["country"] == "RS");
    CHECK(body_of(cli.Get("/api/v1/console-config"))["api_base"] == "/api/v1");
    CHECK(body_of(cli.Get("/api/v1/alarms?active=true")).empty());
    CHECK(body_of(cli.Get("/api/v1/suggestions")).empty());
    CHECK(body_of(cli.Get("/api/v1/tickets")).empty());
    CHECK(body_of(cli.Get("/api/v1/tickets/metrics?from=2009-06-01&to=2009-07-01")).contains("SIMPLE"));
    auto r = cli.Get("/api/v1/audit");
    REQUIRE(r);
    CHECK(r->status == 403);
    r = cli.Get("/api/v1/summary?scope=nope");
    REQUIRE(r);
    CHECK(r->status == 404);
    r = cli.Get("/api/v1/availability?from=nonsense&to=2009-06-01");
    REQUIRE(r);
    CHECK(r->status == 400);
  }

  TEST_CASE("writes go through the core") {
    Server s;
    auto admin = s.client("CN=Site Admin");
    auto guest = s.client("CN=Nobody");

    const std::string results =
        R"({"service":"ce1","probe":"ce-basic","ts":"2009-06-01T01:00:00Z","status":"ERROR","detail":"x"})"
        "\n"
        R"({"service":"ce1","probe":"ce-basic","ts":"2009-06-01T01:30:00Z","status":"ERROR","detail":"x"})"
        "\n";
    auto r = admin.Post("/api/v1/results", results, "application/x-ndjson");
    CHECK(body_of(r)["accepted"] == 2);
    r = admin.Post("/api/v1/results",
                   R"([{"service":"se1","probe":"se-basic","ts":"2009-06-01T01:00:00Z","status":"OK","detail":""}])",
                   "application/json");
    CHECK(body_of(r)["accepted"] == 1);
    r = guest.Post("/api/v1/results", results, "application/x-ndjson");
    REQUIRE(r);
    CHECK(r->status == 403);

    const auto drafts = body_of(admin.Get("/api/v1/suggestions"));
    REQUIRE(drafts.size() == 1);
    r = admin.Post("/api/v1/tickets",
                   json{{"site", "s1"}, {"severity", "SIMPLE"}, {"summary", "CE failing"},
                        {"evidence", drafts[0]["evidence"]}}
                       .dump(),
                   "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    const std::string id = json::parse(r->body)["id"];
    r = admin.Patch("/api/v1/tickets/" + id, R"({"state":"ASSIGNED"})", "application/json");
    CHECK(body_of(r)["state"] == "ASSIGNED");
    r = admin.Patch("/api/v1/tickets/" + id, R"({"state":"VERIFIED"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(body_of(admin.Get("/api/v1/suggestions")).empty());

    r = admin.Post("/api/v1/accounting/logs?site=s1", kLine + "\nbad\n", "text/plain");
    const auto acc = body_of(r);
    CHECK(acc["records"] == 1);
    CHECK(acc["errors"] == 1);
    const auto table = body_of(admin.Get("/api/v1/accounting/query?rows=VO&cols=SITE&metric=CPU_HOURS"));
    CHECK(table.dump().find("\"see\"") != std::string::npos);
    httplib::Headers xml_accept = {{"Accept", "application/xml"}};
    r = admin.Get("/api/v1/accounting/query?rows=VO&cols=SITE", xml_accept);
    REQUIRE(r);
    CHECK(r->body == export_xml(s.core->usage_query({}, Dimension::Vo, Dimension::Site, Metric::CpuHours)));
    r = admin.Get("/api/v1/accounting/query?rows=VO&cols=VO");
    REQUIRE(r);
    CHECK(r->status == 400);

    for (int i = 0; i < 3; ++i) {
      const double queue = i == 1 ? 6000 : 10;
      const auto snap = agent_snapshot({{"input_queue_length", queue},
                                        {"jobs_waiting", 0},
                                        {"load_1min", 0.1},
                                        {"disk_used_pct", 10},
                                        {"daemons_down_count", 0}},
                                       "wms1", support::kT0 + Minutes{i});
      r = admin.Post("/api/v1/wms/snapshots", to_json(snap).dump(), "application/json");
      CHECK(body_of(r)["transitions"].size() == (i == 0 ? 0u : 1u));
    }
    const auto history = body_of(admin.Get("/api/v1/wms/wms1/history?metric=input_queue_length"));
    CHECK(history["points"].size() == 3);
    CHECK(body_of(admin.Get("/api/v1/alarms")).size() == 1);

    r = admin.Put("/api/v1/nodes/s1b",
                  R"({"kind":"SITE","name":"S1b","parent":"rs","attributes":{"cpu_count":"4","storage_tb":"1"}})",
                  "application/json");
    REQUIRE(r);
    CHECK(r->status == 403);
    auto country = s.client("CN=Serbia Admin");
    r = country.Put("/api/v1/nodes/s1b",
                    R"({"kind":"SITE","name":"S1b","parent":"rs","attributes":{"cpu_count":"4","storage_tb":"1"}})",
                    "application/json");
    CHECK(body_of(r)["id"] == "s1b");
    CHECK(body_of(country.Get("/api/v1/summary?scope=rs"))["cpu_total"] == 104);

    const auto audit = body_of(s.client().Get("/api/v1/audit"));
    CHECK(audit.size() == s.core->audit_log().size());
  }

  TEST_CASE("report JSON matches the renderer") {
    Server s;
    auto cli = s.client();
    auto r = cli.Get("/api/v1/reports/quarter/5");
    REQUIRE(r);
    CHECK(r->body == render(to_json(s.core->quarter_report(5))));
    r = cli.Get("/api/v1/reports/quarter/5?format=csv");
    REQUIRE(r);
    CHECK(r->body == to_csv(s.core->quarter_report(5)));
  }
}
