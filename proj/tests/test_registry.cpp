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

#include "gridops/fixtures.hpp"
#include "gridops/registry.hpp"
#include "support.hpp"

using namespace gridops;
using support::code_of;
using support::kRoot;
using support::kT0;

TEST_SUITE("registry") {
  TEST_CASE("site insert by country admin, hierarchy and sibling rules") {
    auto r = support::tiny_registry();
    RegistryNode site{"aegis", NodeKind::Site, "AEGIS01", "rs", {{"cpu_count", "10"}, {"storage_tb", "1"}}, NodeStatus::Active};
    CHECK(r.upsert_node("CN=Serbia Admin", site, kT0) == "aegis");
    CHECK(r.node("aegis").name == "AEGIS01");

    RegistryNode svc{"bad", NodeKind::Service, "CE", "rs", {{"service_type", "CE"}}, NodeStatus::Active};
    CHECK(code_of([&] { r.upsert_node("CN=Serbia Admin", svc, kT0); }) == ErrorCode::HierarchyViolation);

    RegistryNode twin{"aegis2", NodeKind::Site, "AEGIS01", "rs", {{"cpu_count", "1"}, {"storage_tb", "1"}}, NodeStatus::Active};
    CHECK(code_of([&] { r.upsert_node("CN=Serbia Admin", twin, kT0); }) == ErrorCode::DuplicateSiblingName);

    RegistryNode elsewhere{"x", NodeKind::Site, "X", "bg", {{"cpu_count", "1"}, {"storage_tb", "1"}}, NodeStatus::Active};
    CHECK(code_of([&] { r.upsert_node("CN=Serbia Admin", elsewhere, kT0); }) == ErrorCode::AuthzDenied);
    CHECK(code_of([&] { r.upsert_node("CN=Viewer", elsewhere, kT0); }) == ErrorCode::AuthzDenied);

    RegistryNode orphan{"o", NodeKind::Site, "O", "nowhere", {{"cpu_count", "1"}, {"storage_tb", "1"}}, NodeStatus::Active};
    CHECK(code_of([&] { r.upsert_node(kRoot, orphan, kT0); }) == ErrorCode::UnknownNode);
  }

  TEST_CASE("new ROC needs a root admin") {
    auto r = support::tiny_registry();
    RegistryNode roc{"roc2", NodeKind::Roc, "Other", std::nullopt, {}, NodeStatus::Active};
    CHECK(code_of([&] { r.upsert_node("CN=Serbia Admin", roc, kT0); }) == ErrorCode::AuthzDenied);
    CHECK(r.upsert_node(kRoot, roc, kT0) == "roc2");
  }

  TEST_CASE("authorization examples") {
    const auto r = support::tiny_registry();
    CHECK(r.check_authz("CN=Serbia Admin", Action::Edit, "s1"));
    CHECK_FALSE(r.check_authz("CN=Serbia Admin", Action::Edit, "bg"));
    for (const char* dn : {"CN=Serbia Admin", "CN=Bulgaria Admin", "CN=Viewer", "CN=Site Admin"}) {
      for (const char* node : {"roc", "rs", "bg", "s1", "ce1"}) CHECK(r.check_authz(dn, Action::View, node));
    }
    CHECK_FALSE(r.check_authz("CN=Viewer", Action::Edit, "s1"));
    CHECK(r.check_authz("CN=Site Admin", Action::Admin, "ce1"));
    CHECK_FALSE(r.check_authz("CN=Site Admin", Action::Edit, "rs"));
    CHECK(r.check_authz(kRoot, Action::Admin, "roc"));
    CHECK(code_of([&] { r.check_authz("CN=Nobody", Action::View, "rs"); }) == ErrorCode::UnknownIdentity);
    CHECK(code_of([&] { r.check_authz(kRoot, Action::View, "missing"); }) == ErrorCode::UnknownNode);
  }

  TEST_CASE("DN normalization is whitespace and case tolerant on attribute names") {
    const auto r = support::tiny_registry();
    CHECK(r.check_authz("  CN=Serbia Admin ", Action::Edit, "s1"));
    CHECK(normalize_dn("cn=A, o=B") == normalize_dn("CN=A,O=B"));
    CHECK(normalize_dn("/C=GR/O=SEE-GRID/CN=Host/ce.example.org") == "CN=Host/ce.example.org,O=SEE-GRID,C=GR");
  }

  TEST_CASE("resource summaries") {
    const auto fx = fixtures::load_regional_registry();
    const auto roc = fx.resource_summary(fixtures::kRocId);
    CHECK(roc.cpu_total == 6634);
    CHECK(roc.storage_tb_total == StorageTb::parse("754.2"));
    const auto rs = fx.resource_summary("cty-rs");
    CHECK(rs.cpu_total == 974);
    CHECK(rs.storage_tb_total.to_string() == "97.0");

    const auto r = support::tiny_registry();
    const auto empty = r.resource_summary("bg");
    CHECK(empty.cpu_total == 0);
    CHECK(empty.storage_tb_total.milli() == 0);
    CHECK(empty.site_count == 0);
    CHECK(code_of([&] { r.resource_summary("missing"); }) == ErrorCode::UnknownNode);
  }

  TEST_CASE("suspended sites drop out of totals") {
    auto r = support::tiny_registry();
    auto s = r.node("s1");
    CHECK(r.resource_summary("roc").cpu_total == 100);
    s.status = NodeStatus::Suspended;
    r.upsert_node(kRoot, s, kT0);
    CHECK(r.resource_summary("roc").cpu_total == 0);
    CHECK(r.resource_summary("s1").site_count == 0);
  }

  TEST_CASE("export versions and determinism") {
    auto r = support::tiny_registry();
    const auto before = r.export_all();
    CHECK(to_json(r.export_all()) == to_json(before));
    for (int i = 0; i < 3; ++i) {
      RegistryNode site{"n" + std::to_string(i), NodeKind::Site, "N" + std::to_string(i), "bg", {{"cpu_count", "1"}, {"storage_tb", "1"}}, NodeStatus::Active};
      r.upsert_node(kRoot, site, kT0 + Minutes{i});
    }
    CHECK(r.export_all().version == before.version + 3);

    const auto fx = fixtures::load_regional_registry();
    const auto snap = fx.export_topology(fixtures::kRocId);
    int countries = 0;
    int rocs = 0;
    for (const auto& n : snap.nodes) {
      countries += n.kind == NodeKind::Country;
      rocs += n.kind == NodeKind::Roc;
    }
    CHECK(countries == 14);
    CHECK(rocs == 1);
  }

  TEST_CASE("topology JSON round trip") {
    const auto fx = fixtures::load_regional_registry();
    const auto snap = fx.export_all();
    const auto back = topology_from_json(to_json(snap));
    CHECK(back.nodes == snap.nodes);
    CHECK(back.version == snap.version);
    Registry again({fixtures::kRootAdminDn});
    again.import_topology(back);
    again.import_directory(directory_from_json(to_json(fx.directory())));
    CHECK(again.resource_summary(fixtures::kRocId) == fx.resource_summary(fixtures::kRocId));
  }

  TEST_CASE("storage parsing is exact to the millitera") {
    CHECK(StorageTb::parse("0.1").milli() == 100);
    CHECK(StorageTb::parse("528").milli() == 528000);
    CHECK(StorageTb::parse("1.234").to_string() == "1.234");
    CHECK(code_of([] { StorageTb::parse("-1"); }).has_value());
    CHECK(code_of([] { StorageTb::parse("abc"); }).has_value());
  }

  TEST_CASE("remove and contacts") {
    auto r = support::tiny_registry();
    CHECK(code_of([&] { r.remove_node(kRoot, "s1", kT0); }) == ErrorCode::HierarchyViolation);
    r.remove_node("CN=Site Admin", "se1", kT0);
    CHECK_FALSE(r.contains("se1"));
    Contact bad{"c", "C", "not-an-email", "", "rs", Privilege::Viewer};
    CHECK(code_of([&] { r.upsert_contact(kRoot, bad, kT0); }) == ErrorCode::InvalidArgument);
    Contact grant{"c2", "C", "c2@example.org", "", "rs", Privilege::Admin};
    CHECK(code_of([&] { r.upsert_contact("CN=Serbia Admin", grant, kT0); }) == ErrorCode::AuthzDenied);
    grant.node = "s1";
    CHECK(r.upsert_contact("CN=Serbia Admin", grant, kT0) == "c2");
    CHECK(r.contacts_at("s1").size() == 2);
  }
}
