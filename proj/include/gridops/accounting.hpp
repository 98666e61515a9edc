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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridops/registry.hpp"
#include "gridops/time.hpp"

namespace gridops {

enum class JobType { Serial, Mpi };
enum class Dimension { Vo, Country, Site, Month, JobType };
enum class Metric { CpuHours, CpuYears, JobCount };

std::string_view to_string(JobType type);
std::string_view to_string(Dimension dim);
std::string_view to_string(Metric metric);
JobType parse_job_type(std::string_view text);
Dimension parse_dimension(std::string_view text);
Metric parse_metric(std::string_view text);

/// Hours in a CPU-year (365.25 days).
inline constexpr double kHoursPerCpuYear = 8766.0;

struct ExecSlot {
  std::string host;
  int slot = 0;
  friend bool operator==(const ExecSlot&, const ExecSlot&) = default;
};

struct JobRecord {
  std::string job_id;
  NodeId site;
  std::string vo;
  std::string user;
  std::string queue;
  Timestamp submit;
  Timestamp start;
  Timestamp end;
  std::int64_t walltime_s = 0;
  std::int64_t cput_s = 0;
  std::vector<ExecSlot> exec_slots;
  JobType job_type = JobType::Serial;
};

struct LogParseError {
  std::size_t line = 0;
  std::string message;
};

struct BatchLogParse {
  std::vector<JobRecord> records;
  std::vector<LogParseError> errors;
};

/// PBS-style server accounting log. One record per well-formed 'E' line:
///   MM/DD/YYYY HH:MM:SS;E;<job_id>;key=value key=value ...
/// Required keys: user group queue start end exec_host
/// resources_used.walltime resources_used.cput. Other record types are skipped;
/// anything malformed becomes an error entry carrying its 1-based line number.
BatchLogParse parse_batch_log(const NodeId& site, std::istream& in);
BatchLogParse parse_batch_log(const NodeId& site, std::string_view text);

/// Parses "[H]H:MM:SS" into seconds; hours may exceed 24.
std::optional<std::int64_t> parse_hms(std::string_view text);

struct UsageRecord {
  std::string job_id;
  NodeId site;
  std::string vo;
  std::string country;
  Timestamp end;
  int cores = 1;
  /// Exact CPU time in seconds; cpu_hours() divides by 3600.
  std::int64_t cpu_seconds = 0;
  JobType job_type = JobType::Serial;

  double cpu_hours() const { return static_cast<double>(cpu_seconds) / 3600.0; }
  friend bool operator==(const UsageRecord&, const UsageRecord&) = default;
};

nlohmann::json to_json(const UsageRecord& record);
UsageRecord usage_record_from_json(const nlohmann::json& j);

/// MPI: walltime x cores. SERIAL: max(cput, walltime). Country comes from the
/// registry ancestry of the job's site.
UsageRecord normalize(const JobRecord& job, const Registry& registry);

/// Union keyed by (site, job_id). Records from the MPI stream win collisions;
/// output ordered by (end, site, job_id).
std::vector<UsageRecord> merge_streams(std::span<const UsageRecord> serial,
                                       std::span<const UsageRecord> mpi);

struct UsageFilter {
  std::optional<std::string> vo;
  std::optional<std::string> country;
  std::optional<NodeId> site;
  std::optional<Window> window;  // on job end time
  std::optional<JobType> job_type;

  bool matches(const UsageRecord& r) const;
};

/// Pivot of usage by two dimensions.
struct UsageTable {
  Dimension rows = Dimension::Vo;
  Dimension cols = Dimension::Country;
  Metric metric = Metric::CpuHours;
  std::map<std::pair<std::string, std::string>, double> cells;
  std::map<std::string, double> row_totals;
  std::map<std::string, double> col_totals;
  double grand_total = 0.0;

  double cell(const std::string& row, const std::string& col) const;
  double row_total(const std::string& row) const;
  /// Share of the grand total attributed to the given row keys.
  double row_share(std::span<const std::string> row_keys) const;
  /// Values rounded to the 3 fraction digits used on the wire.
  UsageTable rounded() const;

  friend bool operator==(const UsageTable&, const UsageTable&) = default;
};

/// Dimension value of a record, e.g. "2009-05" for MONTH.
std::string dimension_key(const UsageRecord& record, Dimension dim);

/// Throws INVALID_DIMS when rows == cols.
UsageTable query_usage(std::span<const UsageRecord> records, const UsageFilter& filter,
                       Dimension rows, Dimension cols, Metric metric);

struct Utilization {
  double fraction = 0.0;
  /// Usage exceeded capacity and the fraction was clamped to 1.
  bool overflow = false;
};

/// usage / (avg_cpus x window hours), clamped to [0, 1].
Utilization utilization(double usage_hours, std::int64_t avg_cpus, Window window);
Utilization utilization(double usage_hours, std::int64_t avg_cpus, Hours window_length);

/// <usage-table rows=".." cols=".." metric=".."> with cell, row-total,
/// col-total and grand-total children; values carry exactly 3 fraction digits.
std::string export_xml(const UsageTable& table);
UsageTable import_xml(std::string_view document);

nlohmann::json to_json(const UsageTable& table);

}  // namespace gridops
