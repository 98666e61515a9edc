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

#include "gridops/core.hpp"
#include "support.hpp"

using namespace gridops;
using support::code_of;
using support::kT0;

namespace {

const std::string kLine =
    "06/01/2009 10:00:00;E;77.ce.example.org;user=u1 group=see queue=q start=1243846800 end=1243850400 "
    "exec_host=wn01/0 resources_used.walltime=01:00:00 resources_used.cput=00:30:00";

Config memory_config() {
  Config c;
  c.data_dir = "";
  c.root_admins = {support::kRoot};
  c.trusted_proxy_header = "X-Client-DN";
  return c;
}

struct Fixture {
  Timestamp now = kT0 + Hours{2};
  Core core{memory_config(), [this] { return now; }};
  Fixture() {
    const auto reg = support::tiny_registry();
    core.import_registry(core.local_identity(), reg.export_all(), reg.directory());
  }
  ApiIdentity as(const std::string& dn) {
    RequestMeta m;
    m.headers["x-client-dn"] = dn;
    return authenticate(m, core.config(), core.registry());
  }
};

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("authentication sources") {
    Fixture f;
    RequestMeta tls;
    tls.verified_client_dn = "/C=RS/CN=Serbia Admin";
    tls.headers["x-client-dn"] = "CN=Root Admin";
    auto id = authenticate(tls, f.core.config(), f.core.registry());
    CHECK(id.source == IdentitySource::MutualTls);
    CHECK(id.subject_dn == "CN=Serbia Admin,C=RS");
    CHECK(id.guest());

    id = f.as("CN=Serbia Admin");
    CHECK(id.source == IdentitySource::TrustedHeader);
    CHECK(id.contact == "ct-rs");
    CHECK_FALSE(id.guest());
    CHECK(f.as(support::kRoot).root_admin);
    CHECK(f.as("CN=Nobody").guest());

    CHECK(code_of([&] { authenticate({}, f.core.config(), f.core.registry()); }) == ErrorCode::Unauthenticated);
    Config no_header = memory_config();
    no_header.trusted_proxy_header.clear();
    RequestMeta header_only;
    header_only.headers["x-client-dn"] = support::kRoot;
    CHECK(code_of([&] { authenticate(header_only, no_header, f.core.registry()); }) == ErrorCode::Unauthenticated);
  }

  TEST_CASE("every mutation writes exactly one audit entry") {
    Fixture f;
    const auto admin = f.as("CN=Serbia Admin");
    const auto guest = f.as("CN=Nobody");
    std::size_t expected = f.core.audit_log().size();
    const auto step = [&](const std::function<void()>& call, const std::string& outcome) {
      try {
        call();
      } catch (const Error&) {
      }
      ++expected;
      const auto log = f.core.audit_log();
      REQUIRE(log.size() == expected);
      CHECK(log.back().outcome == outcome);
      f.now += Seconds{1};
    };
    const RegistryNode site{"s9", NodeKind::Site, "S9", "rs", {{"cpu_count", "8"}, {"storage_tb", "1"}},
                            NodeStatus::Active};
    step([&] { f.core.put_node(admin, site); }, "OK");
    step([&] { f.core.put_node(guest, site); }, "AUTHZ_DENIED");
    step([&] { f.core.put_contact(admin, {"ct-s9", "S9", "s9@example.org", "", "s9", Privilege::Viewer}); }, "OK");
    step([&] { f.core.map_identity(admin, {"CN=S9 Viewer", "ct-s9"}); }, "OK");
    step([&] { f.core.remove_node(admin, "s1"); }, "HIERARCHY_VIOLATION");
    step([&] { f.core.remove_node(admin, "s9"); }, "OK");
    step([&] { f.core.ingest_results(admin, std::string_view(R"({"service":"ce1","probe":"ce-basic","ts":"2009-06-01T01:00:00Z","status":"OK","detail":""})")); }, "OK");
    step([&] { f.core.ingest_results(guest, std::string_view("")); }, "AUTHZ_DENIED");
    step([&] { f.core.ingest_accounting(admin, "s1", kLine); }, "OK");
    step([&] { f.core.ingest_accounting(admin, "nowhere", kLine); }, "UNKNOWN_SITE");
    step([&] { f.core.ingest_wms(admin, {"ce1", f.now, {}, "1.0"}); }, "UNKNOWN_WMS");
    Ticket t;
    step([&] { t = f.core.open_ticket(admin, "s1", Severity::Simple, "CE down", {}); }, "OK");
    step([&] { f.core.transition_ticket(admin, t.id, TicketState::Verified, ""); }, "ILLEGAL_TRANSITION");
    step([&] { f.core.transition_ticket(f.as("CN=Site Admin"), t.id, TicketState::Assigned, ""); }, "OK");
    step([&] { f.core.open_ticket(guest, "s1", Severity::Simple, "x", {}); }, "AUTHZ_DENIED");
    step([&] { f.core.import_registry(admin, f.core.registry().export_all(), std::nullopt); }, "AUTHZ_DENIED");

    const auto log = f.core.audit_log();
    CHECK(log.back().actor == "CN=Serbia Admin");
    CHECK(log.back().operation == "import_registry");
  }

  TEST_CASE("ingest outcomes") {
    Fixture f;
    const auto root = f.core.local_identity();
    const std::string lines =
        R"({"service":"ce1","probe":"ce-basic","ts":"2009-06-01T01:00:00Z","status":"OK","detail":""})"
        "\n"
        R"({"service":"ce1","probe":"ce-basic","ts":"2009-06-01T01:00:00Z","status":"OK","detail":""})"
        "\n"
        R"({"service":"zz","probe":"ce-basic","ts":"2009-06-01T01:00:00Z","status":"OK","detail":""})"
        "\n"
        "not json\n";
    const auto r = f.core.ingest_results(root, std::string_view(lines));
    CHECK(r.accepted == 1);
    CHECK(r.duplicates == 1);
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].line == 3);
    CHECK(r.errors[0].code == "UNKNOWN_SERVICE");

    const auto acc = f.core.ingest_accounting(root, "s1", kLine + "\nbroken;E;1;user=x\n");
    CHECK(acc.records == 1);
    CHECK(acc.errors == 1);
    CHECK(f.core.usage_records().size() == 1);
    CHECK(f.core.ingest_accounting(root, "s1", kLine).stored == 0);
    CHECK(f.core.usage_records().size() == 1);
    const auto table = f.core.usage_query({}, Dimension::Vo, Dimension::Site, Metric::CpuHours);
    CHECK(table.cell("see", "s1") == 1.0);
  }

  TEST_CASE("status, scheduler and health") {
    Fixture f;
    CHECK(f.core.run_probes().size() == 3);
    const auto status = f.core.status(NodeId("s1"));
    REQUIRE(status.size() == 2);
    for (const auto& s : status) CHECK(s.state == ServiceState::Up);
    const auto health = f.core.healthcheck();
    CHECK(health["status"] == "OK");
    CHECK(health["subsystems"]["store"]["status"] == "OK");
    CHECK(f.core.console_config()["api_base"] == "/api/v1");
    CHECK(f.core.summary("rs").cpu_total == 100);
    CHECK(code_of([&] { f.core.good_for(parse_date("2009-06-01")); }).has_value());
  }
}
