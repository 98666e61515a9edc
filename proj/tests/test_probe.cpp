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

#include "gridops/probe.hpp"
#include "support.hpp"

using namespace gridops;
using support::code_of;
using support::kRoot;
using support::kT0;

namespace {

ProbeResult result(const std::string& svc, Timestamp ts, ProbeStatus st, const std::string& probe = "ce-basic") {
  return {svc, probe, ts, st, ""};
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("due probes follow the period and order by staleness") {
    const auto reg = support::tiny_registry();
    const auto topo = reg.export_all();
    const auto cat = ProbeCatalogue::defaults();
    const Timestamp now = kT0 + Hours{10};
    LastRunMap last;
    last[{"ce1", "ce-basic"}] = now - Minutes{31};
    last[{"se1", "se-basic"}] = now - Minutes{10};
    last[{"ce1", "mpi-setup"}] = now - Hours{24};
    auto due = due_probes(now, topo, last, cat);
    REQUIRE(due.size() == 1);
    CHECK(due[0].service == "ce1");
    CHECK(due[0].probe.probe_id == "ce-basic");

    last[{"se1", "se-basic"}] = now - Minutes{45};
    due = due_probes(now, topo, last, cat);
    REQUIRE(due.size() == 2);
    CHECK(due[0].service == "se1");  // 45 min stale beats 31 min stale
    CHECK(due[1].service == "ce1");

    // A week-old MPI check resurfaces.
    last[{"ce1", "mpi-setup"}] = now - Hours{24 * 7 + 1};
    due = due_probes(now, topo, last, cat);
    CHECK(due.front().probe.probe_id == "mpi-setup");

    // Never-run probes come first; an empty map makes everything due.
    CHECK(due_probes(now, topo, {}, cat).size() == 3);
  }

  TEST_CASE("record is idempotent and validates input") {
    const auto reg = support::tiny_registry();
    ProbeStore store;
    const Timestamp now = kT0 + Hours{1};
    const auto r = result("ce1", kT0, ProbeStatus::Ok);
    const auto first = store.record(r, reg, now);
    CHECK(first.inserted);
    const auto again = store.record(r, reg, now);
    CHECK(again.id == first.id);
    CHECK_FALSE(again.inserted);
    CHECK(store.size() == 1);

    CHECK(code_of([&] { store.record(result("gone", kT0, ProbeStatus::Ok), reg, now); }) == ErrorCode::UnknownService);
    CHECK(code_of([&] { store.record(result("s1", kT0, ProbeStatus::Ok), reg, now); }) == ErrorCode::UnknownService);
    CHECK(code_of([&] { store.record(result("ce1", now + Minutes{6}, ProbeStatus::Ok), reg, now); }) ==
          ErrorCode::FutureTimestamp);
    CHECK_FALSE(code_of([&] { store.record(result("ce1", now + Minutes{5}, ProbeStatus::Ok), reg, now); }));
    auto big = result("ce1", kT0 + Minutes{1}, ProbeStatus::Ok);
    big.detail.assign(4097, 'x');
    CHECK(code_of([&] { store.record(big, reg, now); }) == ErrorCode::PayloadTooLarge);
  }

  TEST_CASE("removed service rejects new results") {
    auto reg = support::tiny_registry();
    ProbeStore store;
    reg.remove_node(kRoot, "se1", kT0);
    CHECK(code_of([&] { store.record(result("se1", kT0, ProbeStatus::Ok, "se-basic"), reg, kT0); }) ==
          ErrorCode::UnknownService);
  }

  TEST_CASE("latest status and staleness") {
    const auto reg = support::tiny_registry();
    const Timestamp now = kT0 + Hours{5};
    {
      ProbeStore store;
      store.record(result("ce1", now - Minutes{5}, ProbeStatus::Ok), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Up);
    }
    {
      ProbeStore store;
      store.record(result("ce1", now - Minutes{61}, ProbeStatus::Ok), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Unknown);
    }
    {
      ProbeStore store;
      store.record(result("ce1", now - Minutes{5}, ProbeStatus::Error), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Down);
      store.record(result("ce1", now - Minutes{2}, ProbeStatus::Warn), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Degraded);
      store.record(result("ce1", now - Minutes{1}, ProbeStatus::Timeout), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Down);
      // A passing non-critical MPI check does not mask the failing basic probe.
      store.record(result("ce1", now, ProbeStatus::Ok, "mpi-setup"), reg, now);
      CHECK(latest_status(store, reg, "ce1", now).state == ServiceState::Down);
    }
    ProbeStore empty;
    CHECK(latest_status(empty, reg, "ce1", now).state == ServiceState::Unknown);
    CHECK(code_of([&] { latest_status(empty, reg, "nope", now); }) == ErrorCode::UnknownService);
  }

  TEST_CASE("MPI checks") {
    auto reg = support::tiny_registry();
    ProbeStore store;
    const Timestamp now = kT0 + Hours{1};
    MpiCheckReport ok{"s1", kT0, {"wn01", "wn02"}, true, true};
    const auto r = record_mpi_check(ok, reg, store, now);
    CHECK(r.service == "ce1");
    CHECK(r.probe_id == "mpi-setup");
    CHECK(r.status == ProbeStatus::Ok);

    MpiCheckReport single{"s1", kT0 + Minutes{1}, {"wn01"}, true, true};
    CHECK(record_mpi_check(single, reg, store, now).status == ProbeStatus::Error);
    CHECK(store.size() == 2);

    auto site = reg.node("s1");
    site.attributes["mpi"] = "false";
    reg.upsert_node(kRoot, site, kT0);
    CHECK(code_of([&] { record_mpi_check(ok, reg, store, now); }) == ErrorCode::MpiNotSupported);
    MpiCheckReport nowhere{"zz", kT0, {"a", "b"}, true, true};
    CHECK(code_of([&] { record_mpi_check(nowhere, reg, store, now); }) == ErrorCode::UnknownSite);
  }

  TEST_CASE("scheduler runs due probes through the executor") {
    const auto reg = support::tiny_registry();
    ProbeStore store;
    auto sim = std::make_shared<SimulatedExecutor>();
    sim->script("ce1", "ce-basic", {ProbeStatus::Error});
    ProbeScheduler scheduler(reg, store, [sim](const DueProbe& d, Timestamp t) { return (*sim)(d, t); }, 4);
    const auto first = scheduler.run_once(kT0);
    CHECK(first.size() == 3);
    CHECK(store.size() == 3);
    CHECK(latest_status(store, reg, "ce1", kT0).state == ServiceState::Down);
    CHECK(scheduler.run_once(kT0 + Minutes{10}).empty());
    CHECK(scheduler.run_once(kT0 + Minutes{30}).size() == 2);
    CHECK(latest_status(store, reg, "ce1", kT0 + Minutes{30}).state == ServiceState::Up);
  }

  TEST_CASE("result JSON round trip") {
    const auto r = result("ce1", kT0, ProbeStatus::Warn);
    CHECK(probe_result_from_json(nlohmann::json::parse(to_json_line(r))) == r);
    CHECK(code_of([] { probe_result_from_json(nlohmann::json{{"service", "x"}}); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_probe_status("MAYBE"); }).has_value());
  }
}
