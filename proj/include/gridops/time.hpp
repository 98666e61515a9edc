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

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace gridops {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;
using Seconds = std::chrono::seconds;
using Minutes = std::chrono::minutes;
using Hours = std::chrono::hours;

/// Half-open UTC interval [start, end).
struct Window {
  Timestamp start;
  Timestamp end;

  bool empty() const { return end <= start; }
  Seconds length() const { return end - start; }
  bool contains(Timestamp t) const { return t >= start && t < end; }
  friend bool operator==(const Window&, const Window&) = default;
};

Timestamp from_unix(std::int64_t seconds);
std::int64_t to_unix(Timestamp t);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(Timestamp t);

/// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional fraction and an optional
/// "Z" / "+00:00" suffix, or a bare "YYYY-MM-DD" (midnight UTC).
Timestamp parse_iso8601(std::string_view text);

Date parse_date(std::string_view text);
std::string format_date(Date d);

Date date_of(Timestamp t);

/// Calendar-month arithmetic on the date part; the time of day is kept.
Timestamp add_months(Timestamp t, int months);

bool is_weekday(Date d);

Timestamp now_utc();

}  // namespace gridops
