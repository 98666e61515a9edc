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

#include "gridops/time.hpp"

#include <charconv>
#include <cstdio>

#include "gridops/error.hpp"

namespace gridops {

namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    fail(ErrorCode::ParseError, "truncated timestamp: " + std::string(text));
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      fail(ErrorCode::ParseError, "bad digit in timestamp: " + std::string(text));
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    fail(ErrorCode::ParseError, "malformed timestamp: " + std::string(text));
  }
}

Date make_date(int y, int m, int d, std::string_view text) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    fail(ErrorCode::ParseError, "invalid calendar date: " + std::string(text));
  }
  return sys_days{ymd};
}

}  // namespace

Timestamp from_unix(std::int64_t seconds) { return Timestamp{Seconds{seconds}}; }

std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()),
                static_cast<long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()));
  return buf;
}

Date parse_date(std::string_view text) {
  if (text.size() != 10) {
    fail(ErrorCode::ParseError, "expected YYYY-MM-DD: " + std::string(text));
  }
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = read_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_digits(text, 8, 2);
  return make_date(y, m, d, text);
}

std::string format_date(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp parse_iso8601(std::string_view text) {
  if (text.size() == 10) return Timestamp{parse_date(text)};
  if (text.size() < 19) {
    fail(ErrorCode::ParseError, "expected ISO-8601 timestamp: " + std::string(text));
  }
  const Date d = parse_date(text.substr(0, 10));
  if (text[10] != 'T' && text[10] != ' ') {
    fail(ErrorCode::ParseError, "malformed timestamp: " + std::string(text));
  }
  const int hh = read_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = read_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = read_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    fail(ErrorCode::ParseError, "time of day out of range: " + std::string(text));
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  const std::string_view zone = text.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000")) {
    fail(ErrorCode::ParseError, "only UTC timestamps are accepted: " + std::string(text));
  }
  return Timestamp{d} + Hours{hh} + Minutes{mm} + Seconds{ss};
}

Date date_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

Timestamp add_months(Timestamp t, int months) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const auto tod = t - day_point;
  year_month_day ymd{day_point};
  ymd += std::chrono::months{months};
  if (!ymd.ok()) ymd = ymd.year() / ymd.month() / last;
  return Timestamp{sys_days{ymd}} + tod;
}

bool is_weekday(Date d) {
  const std::chrono::weekday wd{d};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

Timestamp now_utc() {
  return std::chrono::floor<Seconds>(std::chrono::system_clock::now());
}

}  // namespace gridops
