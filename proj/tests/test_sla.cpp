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

#include <algorithm>
#include <map>

#include "gridops/fixtures.hpp"
#include "gridops/sla.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gridops;
using support::code_of;
using support::kT0;

namespace {

ProbeResult at(Timestamp t, ProbeStatus s, const std::string& svc = "ce1") { return {svc, "ce-basic", t, s, ""}; }

std::int64_t minutes(const StatusTimeline& t, ServiceState s) { return t.minutes_in(s); }

}  // namespace

TEST_SUITE("sla") {
  TEST_CASE("timeline examples") {
    const Window two_hours{kT0, kT0 + Minutes{120}};
    std::vector<ProbeResult> one = {at(kT0, ProbeStatus::Ok)};
    const auto t = build_timeline("ce1", two_hours, one, Minutes{30});
    REQUIRE(t.segments.size() == 2);
    CHECK(t.segments[0].state == ServiceState::Up);
    CHECK(t.segments[0].minutes() == 60);
    CHECK(t.segments[1].state == ServiceState::Unknown);
    CHECK(t.segments[1].minutes() == 60);

    const auto none = build_timeline("ce1", two_hours, {}, Minutes{30});
    REQUIRE(none.segments.size() == 1);
    CHECK(none.segments[0].state == ServiceState::Unknown);
    CHECK(none.segments[0].minutes() == 120);

    std::vector<ProbeResult> flip = {at(kT0, ProbeStatus::Ok), at(kT0 + Minutes{30}, ProbeStatus::Error)};
    const auto f = build_timeline("ce1", {kT0, kT0 + Minutes{60}}, flip, Minutes{30});
    CHECK(minutes(f, ServiceState::Up) == 30);
    CHECK(minutes(f, ServiceState::Down) == 30);
    CHECK(f.segments.size() == 2);
  }

  TEST_CASE("timeline errors") {
    std::vector<ProbeResult> backwards = {at(kT0 + Minutes{5}, ProbeStatus::Ok), at(kT0, ProbeStatus::Ok)};
    CHECK(code_of([&] { build_timeline("ce1", {kT0, kT0 + Hours{1}}, backwards, Minutes{30}); }) ==
          ErrorCode::UnsortedResults);
    CHECK(code_of([&] { build_timeline("ce1", {kT0, kT0}, {}, Minutes{30}); }) == ErrorCode::EmptyWindow);
  }

  TEST_CASE("service availability ratios") {
    std::vector<ProbeResult> rs;
    for (int m = 0; m < 540; m += 30) rs.push_back(at(kT0 + Minutes{m}, ProbeStatus::Ok));
    for (int m = 540; m < 600; m += 30) rs.push_back(at(kT0 + Minutes{m}, ProbeStatus::Error));
    const auto t = build_timeline("ce1", {kT0, kT0 + Hours{10}}, rs, Minutes{30});
    CHECK(service_availability(t) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(coverage(t) == 1.0);
    const auto unknown = build_timeline("ce1", {kT0, kT0 + Hours{10}}, {}, Minutes{30});
    CHECK(service_availability(unknown) == 0.0);
    CHECK(coverage(unknown) == 0.0);
  }

  TEST_CASE("site availability is a per-minute AND") {
    const auto reg = support::tiny_registry();
    const Window w{kT0, kT0 + Hours{4}};
    std::vector<ProbeResult> ce;
    std::vector<ProbeResult> se;
    for (int m = 0; m < 240; m += 30) {
      ce.push_back(at(kT0 + Minutes{m}, ProbeStatus::Ok, "ce1"));
      se.push_back(at(kT0 + Minutes{m}, m < 120 ? ProbeStatus::Ok : ProbeStatus::Error, "se1"));
    }
    std::map<NodeId, StatusTimeline> tl;
    tl.emplace("ce1", build_timeline("ce1", w, ce, Minutes{30}));
    tl.emplace("se1", build_timeline("se1", w, se, Minutes{30}));
    CHECK(site_availability(reg, "s1", w, tl) == doctest::Approx(0.5));

    // Degenerate AND: with SE non-critical the site equals its CE.
    auto reg2 = reg;
    auto se_node = reg2.node("se1");
    se_node.attributes["critical"] = "false";
    reg2.upsert_node(support::kRoot, se_node, kT0);
    CHECK(site_availability(reg2, "s1", w, tl) == service_availability(tl.at("ce1")));

    auto reg3 = reg2;
    auto ce_node = reg3.node("ce1");
    ce_node.attributes["critical"] = "false";
    reg3.upsert_node(support::kRoot, ce_node, kT0);
    CHECK(code_of([&] { site_availability(reg3, "s1", w, tl); }) == ErrorCode::NoCriticalServices);
  }

  TEST_CASE("staggered outages on three services match the minute oracle") {
    const Window w{kT0, kT0 + Hours{6}};
    std::vector<std::vector<ProbeResult>> per(3);
    std::vector<std::vector<oracle::MinuteState>> states;
    std::map<NodeId, StatusTimeline> tl;
    std::vector<const StatusTimeline*> ptrs;
    for (int s = 0; s < 3; ++s) {
      const std::string id = "v" + std::to_string(s);
      for (int m = 0; m < 360; m += 15) {
        const bool out = m >= 60 * (s + 1) && m < 60 * (s + 1) + 45;
        per[s].push_back(at(kT0 + Minutes{m + 3 * s}, out ? ProbeStatus::Error : ProbeStatus::Ok, id));
      }
      tl.emplace(id, build_timeline(id, w, per[s], Minutes{15}));
      states.push_back(oracle::minute_states_naive(w, per[s], 15));
    }
    for (auto& [id, t] : tl) ptrs.push_back(&t);
    const auto got = and_timelines(ptrs);
    const auto want = oracle::and_counts(states);
    CHECK(got.available_minutes == want.available);
    CHECK(got.known_minutes == want.known);
    CHECK(got.total_minutes == want.total);
  }

  TEST_CASE("weighted aggregation") {
    Registry reg({support::kRoot});
    TopologySnapshot t;
    t.nodes.push_back({"roc", NodeKind::Roc, "R", std::nullopt, {}, NodeStatus::Active});
    t.nodes.push_back({"c", NodeKind::Country, "C", "roc", {}, NodeStatus::Active});
    t.nodes.push_back({"a", NodeKind::Site, "A", "c", {{"cpu_count", "100"}, {"storage_tb", "1"}}, NodeStatus::Active});
    t.nodes.push_back({"b", NodeKind::Site, "B", "c", {{"cpu_count", "300"}, {"storage_tb", "1"}}, NodeStatus::Active});
    t.nodes.push_back({"z", NodeKind::Site, "Z", "c", {{"cpu_count", "0"}, {"storage_tb", "1"}}, NodeStatus::Active});
    reg.import_topology(t);
    const Window w{kT0, kT0 + Hours{1}};
    std::map<NodeId, double> fig{{"a", 0.9}, {"b", 0.8}, {"z", 0.1}};
    const auto f = weighted_availability(reg, "roc", w, fig);
    CHECK(f.availability == doctest::Approx(0.825).epsilon(1e-12));
    CHECK(f.weight == 400.0);
    CHECK(weighted_availability(reg, "a", w, fig).availability == 0.9);
    CHECK(weighted_availability(reg, "z", w, fig).availability == 0.0);
    CHECK(weighted_availability(reg, "z", w, fig).weight == 0.0);
    CHECK(code_of([&] { weighted_availability(reg, "nope", w, fig); }) == ErrorCode::UnknownNode);

    std::vector<WeightedValue> equal = {{5, 0.2}, {5, 0.4}, {5, 0.9}};
    CHECK(weighted_mean(equal) == doctest::Approx((0.2 + 0.4 + 0.9) / 3).epsilon(1e-12));
  }

  TEST_CASE("quarter windows") {
    const Date epoch = std::chrono::sys_days{std::chrono::year{2008} / 5 / 1};
    CHECK(format_iso8601(QuarterId{1}.window(epoch).start) == "2008-05-01T00:00:00Z");
    CHECK(format_iso8601(QuarterId{5}.window(epoch).start) == "2009-05-01T00:00:00Z");
    CHECK(format_iso8601(QuarterId{8}.window(epoch).end) == "2010-05-01T00:00:00Z");
    CHECK(code_of([&] { QuarterId{0}.window(epoch); }).has_value());
  }

  TEST_CASE("empty quarter is strict zero") {
    const auto reg = fixtures::load_regional_registry();
    ProbeStore store;
    const auto r = quarterly_report(QuarterId{5}, reg, store, SlaConfig{});
    CHECK(r.infrastructure.availability == 0.0);
    CHECK(r.infrastructure.coverage == 0.0);
    CHECK(r.infrastructure.weight == 6634.0);
    for (const auto& [site, ok] : r.sla_conformance) CHECK_FALSE(ok);
  }

  TEST_CASE("report JSON is deterministic and CSV has one row per figure") {
    const auto reg = support::tiny_registry();
    ProbeStore store;
    store.record(at(kT0, ProbeStatus::Ok), reg, kT0);
    store.record(at(kT0, ProbeStatus::Ok, "se1"), reg, kT0);
    const Window w{kT0, kT0 + Hours{2}};
    const auto a = availability_report(reg, store, w, SlaConfig{});
    const auto b = availability_report(reg, store, w, SlaConfig{});
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(a.infrastructure.availability == doctest::Approx(0.5));
    CHECK(a.sla_conformance.at("s1") == false);
    const auto csv = to_csv(a);
    const auto rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == static_cast<long>(1 + a.per_service.size() + a.per_site.size() + a.per_country.size() +
                                    a.per_roc.size() + 1));
  }
}
