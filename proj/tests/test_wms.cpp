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
#include <cmath>
#include <limits>

#include "gridops/fixtures.hpp"
#include "gridops/wms.hpp"
#include "support.hpp"

using namespace gridops;
using support::code_of;
using support::kT0;

namespace {

Registry wms_registry() {
  auto r = support::tiny_registry();
  r.upsert_node(support::kRoot,
                {"wms1", NodeKind::Service, "WMS", "s1", {{"service_type", "WMS"}, {"critical", "false"}},
                 NodeStatus::Active},
                kT0);
  return r;
}

std::map<std::string, double> readings(double queue = 10) {
  return {{"input_queue_length", queue},
          {"jobs_waiting", 3},
          {"load_1min", 0.5},
          {"disk_used_pct", 40},
          {"daemons_down_count", 0}};
}

WmsSnapshot snap(Timestamp at, double queue) { return agent_snapshot(readings(queue), "wms1", at); }

}  // namespace

TEST_SUITE("wms") {
  TEST_CASE("agent snapshot validation") {
    const auto s = agent_snapshot(readings(), "wms1", kT0);
    CHECK(s.metrics == readings());
    CHECK(s.timestamp == kT0);
    CHECK(s.wms == "wms1");

    auto extra = readings();
    extra["fan_speed"] = 1200;
    CHECK(agent_snapshot(extra, "wms1", kT0).metrics == readings());

    auto disk = readings();
    disk["disk_used_pct"] = 101;
    CHECK(code_of([&] { agent_snapshot(disk, "wms1", kT0); }) == ErrorCode::OutOfRange);
    auto negative = readings();
    negative["jobs_waiting"] = -1;
    CHECK(code_of([&] { agent_snapshot(negative, "wms1", kT0); }) == ErrorCode::OutOfRange);
    auto nan = readings();
    nan["load_1min"] = std::numeric_limits<double>::quiet_NaN();
    CHECK(code_of([&] { agent_snapshot(nan, "wms1", kT0); }) == ErrorCode::OutOfRange);
    auto missing = readings();
    missing.erase("load_1min");
    CHECK(code_of([&] { agent_snapshot(missing, "wms1", kT0); }) == ErrorCode::MissingMetric);
  }

  TEST_CASE("hysteresis raises once and clears below the lower bound") {
    const auto reg = wms_registry();
    const std::vector<AlarmRule> rules = {{"input_queue_length", 5000, 4000, "https://wiki.example.org/wms-queue"}};
    WmsCollector c;
    const auto up = c.ingest(snap(kT0, 6000), rules, reg);
    REQUIRE(up.size() == 1);
    CHECK(up[0].to == AlarmState::Raised);
    CHECK(up[0].guide_url == "https://wiki.example.org/wms-queue");
    CHECK(c.ingest(snap(kT0 + Minutes{5}, 4500), rules, reg).empty());
    CHECK(c.alarms(true).size() == 1);
    const auto down = c.ingest(snap(kT0 + Minutes{10}, 3500), rules, reg);
    REQUIRE(down.size() == 1);
    CHECK(down[0].to == AlarmState::Cleared);
    CHECK(c.alarms(true).empty());
    const auto all = c.alarms(false);
    REQUIRE(all.size() == 1);
    CHECK(all[0].peak_value == 6000);
    CHECK(all[0].cleared_at == kT0 + Minutes{10});
    CHECK(c.transitions().size() == 2);
  }

  TEST_CASE("value at the raise threshold does not raise") {
    const auto reg = wms_registry();
    const std::vector<AlarmRule> rules = {{"input_queue_length", 5000, 4000, ""}};
    WmsCollector c;
    CHECK(c.ingest(snap(kT0, 5000), rules, reg).empty());
    CHECK(c.ingest(snap(kT0 + Minutes{1}, 5001), rules, reg).size() == 1);
    CHECK(c.ingest(snap(kT0 + Minutes{2}, 4000), rules, reg).empty());
  }

  TEST_CASE("history is ascending regardless of arrival order") {
    const auto reg = wms_registry();
    WmsCollector c;
    for (int m : {20, 0, 10, 30}) c.ingest(snap(kT0 + Minutes{m}, m), {}, reg);
    const auto h = c.history("wms1", "input_queue_length", {kT0, kT0 + Minutes{30}}, reg);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == std::make_pair(kT0, 0.0));
    CHECK(h[1].second == 10.0);
    CHECK(h[2].second == 20.0);
    CHECK(c.history("wms1", "jobs_waiting", {kT0 - Hours{5}, kT0 - Hours{4}}, reg).empty());
    CHECK(c.latest("wms1")->timestamp == kT0 + Minutes{30});
    CHECK(c.snapshots().front().timestamp == kT0 + Minutes{20});
  }

  TEST_CASE("collector errors") {
    const auto reg = wms_registry();
    WmsCollector c;
    auto other = snap(kT0, 1);
    other.wms = "ce1";
    CHECK(code_of([&] { c.ingest(other, {}, reg); }) == ErrorCode::UnknownWms);
    other.wms = "nope";
    CHECK(code_of([&] { c.ingest(other, {}, reg); }) == ErrorCode::UnknownWms);
    c.ingest(snap(kT0, 1), {}, reg);
    CHECK(code_of([&] { c.ingest(snap(kT0, 2), {}, reg); }) == ErrorCode::DuplicateTimestamp);
    CHECK(code_of([&] { c.history("wms1", "cpu_temp", {kT0, kT0 + Hours{1}}, reg); }) == ErrorCode::UnknownMetric);
    CHECK(code_of([&] { c.history("nope", "load_1min", {kT0, kT0 + Hours{1}}, reg); }) == ErrorCode::UnknownWms);

    const std::vector<AlarmRule> bad = {{"cpu_temp", 90, 80, ""}};
    CHECK(code_of([&] { validate_rules(bad); }) == ErrorCode::UnknownMetric);
    const std::vector<AlarmRule> inverted = {{"load_1min", 5, 6, ""}};
    CHECK(code_of([&] { validate_rules(inverted); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("rule and snapshot JSON round trip") {
    const auto rules = fixtures::default_alarm_rules();
    validate_rules(rules);
    const auto back = alarm_rules_from_json(to_json(std::span<const AlarmRule>(rules)));
    REQUIRE(back.size() == rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
      CHECK(back[i].metric == rules[i].metric);
      CHECK(back[i].raise_above == rules[i].raise_above);
      CHECK(back[i].clear_below == rules[i].clear_below);
    }
    const auto s = snap(kT0, 42);
    CHECK(wms_snapshot_from_json(to_json(s)) == s);
  }

  TEST_CASE("fixture series crosses the alarm bands") {
    const auto reg = fixtures::load_regional_registry();
    const auto rules = fixtures::default_alarm_rules();
    WmsCollector c;
    std::size_t raised = 0;
    for (const auto& s : fixtures::wms_series(reg, kT0, 96, Minutes{15})) {
      for (const auto& t : c.ingest(s, rules, reg)) raised += t.to == AlarmState::Raised;
    }
    CHECK(raised > 0);
  }
}
