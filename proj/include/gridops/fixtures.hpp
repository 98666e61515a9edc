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
#include <string>
#include <vector>

#include "gridops/accounting.hpp"
#include "gridops/operations.hpp"
#include "gridops/probe.hpp"
#include "gridops/registry.hpp"
#include "gridops/sla.hpp"
#include "gridops/wms.hpp"

namespace gridops::fixtures {

struct CountryRow {
  std::string name;
  std::string code;
  std::int64_t cpus = 0;
  StorageTb storage;
};

/// Per-country resources of the regional infrastructure, in table order.
const std::vector<CountryRow>& country_table();

inline constexpr const char* kRocId = "roc-see";
inline constexpr const char* kRootAdminDn = "CN=ROC Manager,OU=ROC,O=SEE-GRID,C=GR";

struct RegistryFixture {
  TopologySnapshot topology;
  Directory directory;
};

/// ROC "SEE" with one country per table row, 1-3 sites per country that
/// split the country totals exactly, and CE/SE/sBDII critical services on
/// every site plus a WMS on the larger ones. One extra suspended site in
/// Greece must never be counted.
RegistryFixture regional_registry();

/// A registry loaded with regional_registry(), root admin kRootAdminDn.
Registry load_regional_registry();

struct ProbeCorpus {
  QuarterId quarter;
  Window window;
  std::vector<ProbeResult> results;
  /// CPU-weighted availability implied by the planted outages.
  double planned_availability = 0.0;
  std::map<NodeId, double> planned_site_availability;
};

/// 30-minute critical probe results for every active critical service from
/// the quarter start, with non-overlapping ERROR episodes and result gaps
/// planted per site so the weighted availability lands on target.
ProbeCorpus availability_corpus(const Registry& registry, int quarter, double target, std::uint64_t seed,
                                const SlaConfig& sla = {});
ProbeCorpus early_quarter_corpus(const Registry& registry);  // quarter 5, about 0.78
ProbeCorpus late_quarter_corpus(const Registry& registry);   // quarter 8, about 0.89

struct UsageCorpus {
  /// Batch-server log text per site.
  std::map<NodeId, std::string> logs;
  std::vector<std::string> project_vos;
  std::vector<std::string> other_vos;
  Window window;
  std::int64_t total_cpu_seconds = 0;
  std::int64_t project_cpu_seconds = 0;
  std::size_t jobs = 0;
};

/// Two years of jobs totalling exactly 22.5 M CPU hours, 16.4 M of them in
/// the project VOs.
UsageCorpus usage_corpus(const Registry& registry, std::size_t jobs = 30000, std::uint64_t seed = 2010);

ShiftRota regional_rota();
std::vector<AlarmRule> default_alarm_rules();

/// Snapshots for every WMS in the registry, `count` per WMS spaced `step`
/// apart from `start`, with load spikes that cross the alarm bands.
std::vector<WmsSnapshot> wms_series(const Registry& registry, Timestamp start, std::size_t count, Minutes step,
                                    std::uint64_t seed = 7);

/// "MM/DD/YYYY HH:MM:SS;E;..." line for a job.
std::string format_batch_line(const JobRecord& job);

}  // namespace gridops::fixtures
