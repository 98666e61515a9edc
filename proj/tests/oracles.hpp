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

// Brute-force reference implementations. They share no code with the
// library beyond plain data types, and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridops/accounting.hpp"
#include "gridops/probe.hpp"
#include "gridops/time.hpp"

namespace oracle {

using gridops::ProbeResult;
using gridops::ProbeStatus;
using gridops::Timestamp;
using gridops::Window;

enum class MinuteState { Up, Degraded, Down, Unknown };

inline MinuteState state_of(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::Ok: return MinuteState::Up;
    case ProbeStatus::Warn: return MinuteState::Degraded;
    default: return MinuteState::Down;
  }
}

inline bool available(MinuteState s) { return s == MinuteState::Up || s == MinuteState::Degraded; }

/// State of every minute of the window, found by scanning all results for
/// each minute. Quadratic; only for small cases.
inline std::vector<MinuteState> minute_states_naive(const Window& w, const std::vector<ProbeResult>& results,
                                                   std::int64_t period_min) {
  std::vector<MinuteState> out;
  for (Timestamp m = w.start; m < w.end; m += std::chrono::minutes{1}) {
    const ProbeResult* latest = nullptr;
    for (const auto& r : results) {
      if (r.timestamp <= m && (!latest || r.timestamp >= latest->timestamp)) latest = &r;
    }
    if (!latest || m >= latest->timestamp + std::chrono::minutes{2 * period_min}) {
      out.push_back(MinuteState::Unknown);
    } else {
      out.push_back(state_of(latest->status));
    }
  }
  return out;
}

/// Same rule with a moving cursor, for quarter-sized windows. Results must be
/// in timestamp order.
inline std::vector<MinuteState> minute_states(const Window& w, const std::vector<ProbeResult>& results,
                                             std::int64_t period_min) {
  std::vector<MinuteState> out;
  std::size_t next = 0;
  const ProbeResult* latest = nullptr;
  for (Timestamp m = w.start; m < w.end; m += std::chrono::minutes{1}) {
    while (next < results.size() && results[next].timestamp <= m) latest = &results[next++];
    if (!latest || m >= latest->timestamp + std::chrono::minutes{2 * period_min}) {
      out.push_back(MinuteState::Unknown);
    } else {
      out.push_back(state_of(latest->status));
    }
  }
  return out;
}

struct Counts {
  std::int64_t total = 0;
  std::int64_t available = 0;
  std::int64_t known = 0;
};

inline Counts count(const std::vector<MinuteState>& states) {
  Counts c;
  for (auto s : states) {
    ++c.total;
    if (available(s)) ++c.available;
    if (s != MinuteState::Unknown) ++c.known;
  }
  return c;
}

/// Per-minute AND: available iff every service is available that minute.
inline Counts and_counts(const std::vector<std::vector<MinuteState>>& services) {
  Counts c;
  if (services.empty()) return c;
  for (std::size_t m = 0; m < services.front().size(); ++m) {
    ++c.total;
    bool up = true;
    bool known = true;
    for (const auto& s : services) {
      up = up && available(s[m]);
      known = known && s[m] != MinuteState::Unknown;
    }
    if (up) ++c.available;
    if (known) ++c.known;
  }
  return c;
}

inline double weighted_mean(const std::vector<std::pair<double, double>>& weight_value) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [w, v] : weight_value) {
    num += w * v;
    den += w;
  }
  return den == 0.0 ? 0.0 : num / den;
}

/// Group-by with nested loops over the distinct keys; sums exact integers.
struct Pivot {
  std::map<std::pair<std::string, std::string>, std::int64_t> cells;
  std::int64_t grand = 0;
};

inline std::string key_of(const gridops::UsageRecord& r, gridops::Dimension d) {
  using gridops::Dimension;
  switch (d) {
    case Dimension::Vo: return r.vo;
    case Dimension::Country: return r.country;
    case Dimension::Site: return r.site;
    case Dimension::JobType: return r.job_type == gridops::JobType::Mpi ? "MPI" : "SERIAL";
    case Dimension::Month: {
      const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(r.end)};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
      return buf;
    }
  }
  return {};
}

/// Metric in integer units: CPU seconds, or job count.
inline Pivot group_by(const std::vector<gridops::UsageRecord>& records, gridops::Dimension rows,
                      gridops::Dimension cols, bool job_count) {
  std::set<std::string> row_keys;
  std::set<std::string> col_keys;
  for (const auto& r : records) {
    row_keys.insert(key_of(r, rows));
    col_keys.insert(key_of(r, cols));
  }
  Pivot p;
  for (const auto& rk : row_keys) {
    for (const auto& ck : col_keys) {
      std::int64_t sum = 0;
      bool any = false;
      for (const auto& r : records) {
        if (key_of(r, rows) == rk && key_of(r, cols) == ck) {
          sum += job_count ? 1 : r.cpu_seconds;
          any = true;
        }
      }
      if (any) p.cells[{rk, ck}] = sum;
      p.grand += sum;
    }
  }
  return p;
}

/// Sort, then interpolate linearly between closest ranks.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Counts Mon-Fri dates d with opened < d <= solved, one day at a time.
inline std::int64_t business_days(gridops::Date opened, gridops::Date solved) {
  std::int64_t n = 0;
  for (auto d = opened + std::chrono::days{1}; d <= solved; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) ++n;
  }
  return n;
}

inline bool close(double a, double b, double rel = 1e-9) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace oracle
