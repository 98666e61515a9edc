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

#include "gridops/accounting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

std::string_view to_string(JobType type) { return type == JobType::Mpi ? "MPI" : "SERIAL"; }

std::string_view to_string(Dimension dim) {
  switch (dim) {
    case Dimension::Vo: return "VO";
    case Dimension::Country: return "COUNTRY";
    case Dimension::Site: return "SITE";
    case Dimension::Month: return "MONTH";
    case Dimension::JobType: return "JOB_TYPE";
  }
  return "?";
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::CpuHours: return "CPU_HOURS";
    case Metric::CpuYears: return "CPU_YEARS";
    case Metric::JobCount: return "JOB_COUNT";
  }
  return "?";
}

JobType parse_job_type(std::string_view text) {
  if (text == "SERIAL") return JobType::Serial;
  if (text == "MPI") return JobType::Mpi;
  fail(ErrorCode::InvalidArgument, "unknown job type: " + std::string(text));
}

Dimension parse_dimension(std::string_view text) {
  for (auto d : {Dimension::Vo, Dimension::Country, Dimension::Site, Dimension::Month, Dimension::JobType}) {
    if (to_string(d) == text) return d;
  }
  fail(ErrorCode::InvalidArgument, "unknown dimension: " + std::string(text));
}

Metric parse_metric(std::string_view text) {
  for (auto m : {Metric::CpuHours, Metric::CpuYears, Metric::JobCount}) {
    if (to_string(m) == text) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown metric: " + std::string(text));
}

// ---------------------------------------------------------------------------
// Log parsing

namespace {

constexpr std::int64_t kMaxEpoch = 253402300799;  // 9999-12-31T23:59:59Z

template <typename T>
std::optional<T> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<Timestamp> parse_log_time(std::string_view text) {
  // MM/DD/YYYY HH:MM:SS
  if (text.size() != 19 || text[2] != '/' || text[5] != '/' || text[10] != ' ' || text[13] != ':' ||
      text[16] != ':') {
    return std::nullopt;
  }
  const auto mo = parse_int<unsigned>(text.substr(0, 2));
  const auto d = parse_int<unsigned>(text.substr(3, 2));
  const auto y = parse_int<int>(text.substr(6, 4));
  const auto hh = parse_int<int>(text.substr(11, 2));
  const auto mm = parse_int<int>(text.substr(14, 2));
  const auto ss = parse_int<int>(text.substr(17, 2));
  if (!mo || !d || !y || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*mo}, std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return Timestamp{Date{ymd}} + Hours{*hh} + Minutes{*mm} + Seconds{*ss};
}

std::vector<std::string_view> split(std::string_view text, char sep, std::size_t max_parts) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (parts.size() + 1 < max_parts) {
    const auto next = text.find(sep, pos);
    if (next == std::string_view::npos) break;
    parts.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  parts.push_back(text.substr(pos));
  return parts;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

/// Parses one 'E' line body; returns an error message on failure.
std::optional<std::string> parse_end_record(const NodeId& site, std::string_view job_id,
                                            std::string_view message, JobRecord& out) {
  if (job_id.empty()) return "empty job id";
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t pos = 0;
  while (pos < message.size()) {
    while (pos < message.size() && is_space(message[pos])) ++pos;
    if (pos >= message.size()) break;
    std::size_t end = pos;
    while (end < message.size() && !is_space(message[end])) ++end;
    const std::string_view token = message.substr(pos, end - pos);
    pos = end;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) return "malformed key=value token '" + std::string(token) + "'";
    kv[std::string(token.substr(0, eq))] = std::string(token.substr(eq + 1));
  }
  for (const char* key : {"user", "group", "queue", "start", "end", "exec_host",
                          "resources_used.walltime", "resources_used.cput"}) {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::string("missing required key ") + key;
    if (it->second.empty()) return std::string("empty value for ") + key;
  }
  const auto start = parse_int<std::int64_t>(kv["start"]);
  const auto end = parse_int<std::int64_t>(kv["end"]);
  if (!start || *start < 0 || *start > kMaxEpoch) return "bad start epoch";
  if (!end || *end < 0 || *end > kMaxEpoch) return "bad end epoch";
  if (*end < *start) return "end precedes start";
  const auto walltime = parse_hms(kv["resources_used.walltime"]);
  if (!walltime) return "bad resources_used.walltime";
  const auto cput = parse_hms(kv["resources_used.cput"]);
  if (!cput) return "bad resources_used.cput";

  std::vector<ExecSlot> slots;
  for (const auto entry : split(kv["exec_host"], '+', std::string_view::npos)) {
    const auto slash = entry.rfind('/');
    if (slash == std::string_view::npos || slash == 0) return "bad exec_host entry '" + std::string(entry) + "'";
    const auto slot = parse_int<int>(entry.substr(slash + 1));
    if (!slot || *slot < 0) return "bad exec_host slot in '" + std::string(entry) + "'";
    slots.push_back({std::string(entry.substr(0, slash)), *slot});
  }

  out = JobRecord{};
  out.job_id = std::string(job_id);
  out.site = site;
  out.vo = kv["group"];
  out.user = kv["user"];
  out.queue = kv["queue"];
  out.start = from_unix(*start);
  out.end = from_unix(*end);
  out.submit = out.start;
  for (const char* key : {"qtime", "ctime"}) {
    if (const auto it = kv.find(key); it != kv.end()) {
      if (const auto q = parse_int<std::int64_t>(it->second); q && *q >= 0 && *q <= *start) {
        out.submit = from_unix(*q);
        break;
      }
    }
  }
  out.walltime_s = *walltime;
  out.cput_s = *cput;
  out.exec_slots = std::move(slots);
  out.job_type = out.exec_slots.size() >= 2 ? JobType::Mpi : JobType::Serial;
  return std::nullopt;
}

void parse_line(const NodeId& site, std::string_view line, std::size_t number, BatchLogParse& out) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  if (std::all_of(line.begin(), line.end(), is_space)) return;
  const auto fields = split(line, ';', 4);
  if (fields.size() < 2) {
    out.errors.push_back({number, "not an accounting record"});
    return;
  }
  if (fields[1] != "E") return;
  if (fields.size() < 4) {
    out.errors.push_back({number, "truncated end-of-job record"});
    return;
  }
  if (!parse_log_time(fields[0])) {
    out.errors.push_back({number, "bad record timestamp"});
    return;
  }
  JobRecord record;
  if (auto err = parse_end_record(site, fields[2], fields[3], record)) {
    out.errors.push_back({number, std::move(*err)});
    return;
  }
  out.records.push_back(std::move(record));
}

}  // namespace

std::optional<std::int64_t> parse_hms(std::string_view text) {
  const auto parts = split(text, ':', 4);
  if (parts.size() != 3 || parts[0].empty() || parts[0].size() > 9 || parts[1].size() != 2 ||
      parts[2].size() != 2) {
    return std::nullopt;
  }
  const auto h = parse_int<std::int64_t>(parts[0]);
  const auto m = parse_int<std::int64_t>(parts[1]);
  const auto s = parse_int<std::int64_t>(parts[2]);
  if (!h || !m || !s || *h < 0 || *m < 0 || *m > 59 || *s < 0 || *s > 59) return std::nullopt;
  return *h * 3600 + *m * 60 + *s;
}

BatchLogParse parse_batch_log(const NodeId& site, std::istream& in) {
  BatchLogParse out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) parse_line(site, line, ++number, out);
  return out;
}

BatchLogParse parse_batch_log(const NodeId& site, std::string_view text) {
  BatchLogParse out;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto next = text.find('\n', pos);
    if (next == std::string_view::npos) next = text.size();
    parse_line(site, text.substr(pos, next - pos), ++number, out);
    pos = next + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

json to_json(const UsageRecord& r) {
  return json{{"job_id", r.job_id},   {"site", r.site},
              {"vo", r.vo},           {"country", r.country},
              {"end", to_unix(r.end)}, {"cores", r.cores},
              {"cpu_seconds", r.cpu_seconds}, {"job_type", to_string(r.job_type)}};
}

UsageRecord usage_record_from_json(const json& j) {
  try {
    UsageRecord r;
    r.job_id = j.at("job_id").get<std::string>();
    r.site = j.at("site").get<std::string>();
    r.vo = j.at("vo").get<std::string>();
    r.country = j.value("country", "");
    r.end = from_unix(j.at("end").get<std::int64_t>());
    r.cores = j.value("cores", 1);
    r.cpu_seconds = j.at("cpu_seconds").get<std::int64_t>();
    r.job_type = parse_job_type(j.value("job_type", "SERIAL"));
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad usage record: ") + e.what());
  }
}

UsageRecord normalize(const JobRecord& job, const Registry& registry) {
  const auto site = registry.find(job.site);
  if (!site || site->kind != NodeKind::Site) fail(ErrorCode::UnknownSite, "unknown site: " + job.site);
  UsageRecord r;
  r.job_id = job.job_id;
  r.site = job.site;
  r.vo = job.vo;
  if (const auto country = registry.ancestor_of_kind(job.site, NodeKind::Country)) r.country = country->name;
  r.end = job.end;
  r.job_type = job.job_type;
  if (job.job_type == JobType::Mpi) {
    r.cores = static_cast<int>(job.exec_slots.size());
    r.cpu_seconds = job.walltime_s * r.cores;
  } else {
    r.cores = 1;
    r.cpu_seconds = std::max(job.cput_s, job.walltime_s);
  }
  return r;
}

std::vector<UsageRecord> merge_streams(std::span<const UsageRecord> serial,
                                       std::span<const UsageRecord> mpi) {
  std::map<std::pair<NodeId, std::string>, UsageRecord> merged;
  for (const auto& r : serial) merged[{r.site, r.job_id}] = r;
  for (const auto& r : mpi) merged[{r.site, r.job_id}] = r;
  std::vector<UsageRecord> out;
  out.reserve(merged.size());
  for (auto& [key, r] : merged) out.push_back(std::move(r));
  std::sort(out.begin(), out.end(), [](const UsageRecord& a, const UsageRecord& b) {
    return std::tie(a.end, a.site, a.job_id) < std::tie(b.end, b.site, b.job_id);
  });
  return out;
}

// ---------------------------------------------------------------------------

bool UsageFilter::matches(const UsageRecord& r) const {
  if (vo && r.vo != *vo) return false;
  if (country && r.country != *country) return false;
  if (site && r.site != *site) return false;
  if (window && !window->contains(r.end)) return false;
  if (job_type && r.job_type != *job_type) return false;
  return true;
}

double UsageTable::cell(const std::string& row, const std::string& col) const {
  const auto it = cells.find({row, col});
  return it == cells.end() ? 0.0 : it->second;
}

double UsageTable::row_total(const std::string& row) const {
  const auto it = row_totals.find(row);
  return it == row_totals.end() ? 0.0 : it->second;
}

double UsageTable::row_share(std::span<const std::string> row_keys) const {
  if (grand_total == 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& k : row_keys) sum += row_total(k);
  return sum / grand_total;
}

namespace {

std::string format3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

double round3(double v) { return std::strtod(format3(v).c_str(), nullptr); }

}  // namespace

UsageTable UsageTable::rounded() const {
  UsageTable t = *this;
  for (auto& [k, v] : t.cells) v = round3(v);
  for (auto& [k, v] : t.row_totals) v = round3(v);
  for (auto& [k, v] : t.col_totals) v = round3(v);
  t.grand_total = round3(t.grand_total);
  return t;
}

std::string dimension_key(const UsageRecord& r, Dimension dim) {
  switch (dim) {
    case Dimension::Vo: return r.vo;
    case Dimension::Country: return r.country;
    case Dimension::Site: return r.site;
    case Dimension::Month: return format_date(date_of(r.end)).substr(0, 7);
    case Dimension::JobType: return std::string(to_string(r.job_type));
  }
  return {};
}

UsageTable query_usage(std::span<const UsageRecord> records, const UsageFilter& filter,
                       Dimension rows, Dimension cols, Metric metric) {
  if (rows == cols) fail(ErrorCode::InvalidDims, "rows and cols must differ");
  if (filter.window && filter.window->empty()) fail(ErrorCode::InvalidArgument, "empty query window");
  // Exact integer accumulation; conversion to the metric happens once per value.
  std::map<std::pair<std::string, std::string>, std::int64_t> cells;
  std::map<std::string, std::int64_t> row_totals;
  std::map<std::string, std::int64_t> col_totals;
  std::int64_t grand = 0;
  for (const auto& r : records) {
    if (!filter.matches(r)) continue;
    const std::int64_t amount = metric == Metric::JobCount ? 1 : r.cpu_seconds;
    const std::string rk = dimension_key(r, rows);
    const std::string ck = dimension_key(r, cols);
    cells[{rk, ck}] += amount;
    row_totals[rk] += amount;
    col_totals[ck] += amount;
    grand += amount;
  }
  const auto convert = [metric](std::int64_t raw) {
    switch (metric) {
      case Metric::CpuHours: return static_cast<double>(raw) / 3600.0;
      case Metric::CpuYears: return static_cast<double>(raw) / (3600.0 * kHoursPerCpuYear);
      case Metric::JobCount: return static_cast<double>(raw);
    }
    return 0.0;
  };
  UsageTable table;
  table.rows = rows;
  table.cols = cols;
  table.metric = metric;
  for (const auto& [k, v] : cells) table.cells[k] = convert(v);
  for (const auto& [k, v] : row_totals) table.row_totals[k] = convert(v);
  for (const auto& [k, v] : col_totals) table.col_totals[k] = convert(v);
  table.grand_total = convert(grand);
  return table;
}

Utilization utilization(double usage_hours, std::int64_t avg_cpus, Hours window_length) {
  if (avg_cpus <= 0) fail(ErrorCode::ZeroCapacity, "average CPU count must be positive");
  if (window_length <= Hours{0}) fail(ErrorCode::EmptyWindow, "utilization window is empty");
  if (usage_hours < 0) fail(ErrorCode::InvalidArgument, "usage must be non-negative");
  const double capacity = static_cast<double>(avg_cpus) * static_cast<double>(window_length.count());
  const double raw = usage_hours / capacity;
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

Utilization utilization(double usage_hours, std::int64_t avg_cpus, Window window) {
  if (window.empty()) fail(ErrorCode::EmptyWindow, "utilization window is empty");
  if (avg_cpus <= 0) fail(ErrorCode::ZeroCapacity, "average CPU count must be positive");
  const double hours = static_cast<double>(window.length().count()) / 3600.0;
  const double raw = usage_hours / (static_cast<double>(avg_cpus) * hours);
  if (usage_hours < 0) fail(ErrorCode::InvalidArgument, "usage must be non-negative");
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

// ---------------------------------------------------------------------------
// XML

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string xml_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos) fail(ErrorCode::ParseError, "unterminated XML entity");
    const auto entity = s.substr(i + 1, semi - i - 1);
    if (entity == "amp") out += '&';
    else if (entity == "lt") out += '<';
    else if (entity == "gt") out += '>';
    else if (entity == "quot") out += '"';
    else if (entity == "apos") out += '\'';
    else fail(ErrorCode::ParseError, "unsupported XML entity &" + std::string(entity) + ";");
    i = semi;
  }
  return out;
}

struct XmlTag {
  std::string name;
  std::map<std::string, std::string> attributes;
  bool closing = false;
  bool self_closing = false;
};

XmlTag parse_tag(std::string_view body) {
  XmlTag tag;
  std::size_t pos = 0;
  if (!body.empty() && body.front() == '/') {
    tag.closing = true;
    pos = 1;
  }
  if (!body.empty() && body.back() == '/') {
    tag.self_closing = true;
    body.remove_suffix(1);
  }
  std::size_t end = pos;
  while (end < body.size() && !is_space(body[end])) ++end;
  tag.name = std::string(body.substr(pos, end - pos));
  pos = end;
  while (pos < body.size()) {
    while (pos < body.size() && is_space(body[pos])) ++pos;
    if (pos >= body.size()) break;
    const auto eq = body.find('=', pos);
    if (eq == std::string_view::npos) fail(ErrorCode::ParseError, "malformed XML attribute");
    std::string key(body.substr(pos, eq - pos));
    while (!key.empty() && is_space(key.back())) key.pop_back();
    std::size_t q = eq + 1;
    while (q < body.size() && is_space(body[q])) ++q;
    if (q >= body.size() || (body[q] != '"' && body[q] != '\'')) {
      fail(ErrorCode::ParseError, "unquoted XML attribute");
    }
    const char quote = body[q];
    const auto close = body.find(quote, q + 1);
    if (close == std::string_view::npos) fail(ErrorCode::ParseError, "unterminated XML attribute");
    tag.attributes[key] = xml_unescape(body.substr(q + 1, close - q - 1));
    pos = close + 1;
  }
  return tag;
}

double parse_value(const XmlTag& tag) {
  const auto it = tag.attributes.find("value");
  if (it == tag.attributes.end()) fail(ErrorCode::ParseError, "missing value attribute on " + tag.name);
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad numeric value '" + it->second + "'");
  }
}

const std::string& required(const XmlTag& tag, const std::string& key) {
  const auto it = tag.attributes.find(key);
  if (it == tag.attributes.end()) fail(ErrorCode::ParseError, "missing attribute " + key + " on " + tag.name);
  return it->second;
}

}  // namespace

std::string export_xml(const UsageTable& t) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<usage-table rows=\"" << to_string(t.rows) << "\" cols=\"" << to_string(t.cols)
      << "\" metric=\"" << to_string(t.metric) << "\">\n";
  for (const auto& [key, v] : t.cells) {
    out << "  <cell row=\"" << xml_escape(key.first) << "\" col=\"" << xml_escape(key.second)
        << "\" value=\"" << format3(v) << "\"/>\n";
  }
  for (const auto& [k, v] : t.row_totals) {
    out << "  <row-total row=\"" << xml_escape(k) << "\" value=\"" << format3(v) << "\"/>\n";
  }
  for (const auto& [k, v] : t.col_totals) {
    out << "  <col-total col=\"" << xml_escape(k) << "\" value=\"" << format3(v) << "\"/>\n";
  }
  out << "  <grand-total value=\"" << format3(t.grand_total) << "\"/>\n";
  out << "</usage-table>\n";
  return out.str();
}

UsageTable import_xml(std::string_view doc) {
  UsageTable t;
  bool in_table = false;
  bool closed = false;
  bool have_grand = false;
  std::size_t pos = 0;
  while (true) {
    const auto open = doc.find('<', pos);
    const auto text = doc.substr(pos, open == std::string_view::npos ? std::string_view::npos : open - pos);
    if (!std::all_of(text.begin(), text.end(), is_space)) fail(ErrorCode::ParseError, "unexpected XML text");
    if (open == std::string_view::npos) break;
    const auto close = doc.find('>', open);
    if (close == std::string_view::npos) fail(ErrorCode::ParseError, "unterminated XML tag");
    const auto body = doc.substr(open + 1, close - open - 1);
    pos = close + 1;
    if (!body.empty() && (body.front() == '?' || body.front() == '!')) continue;
    const XmlTag tag = parse_tag(body);
    if (closed) fail(ErrorCode::ParseError, "content after </usage-table>");
    if (tag.name == "usage-table") {
      if (tag.closing) {
        if (!in_table) fail(ErrorCode::ParseError, "unbalanced </usage-table>");
        closed = true;
        continue;
      }
      if (in_table) fail(ErrorCode::ParseError, "nested usage-table");
      in_table = true;
      t.rows = parse_dimension(required(tag, "rows"));
      t.cols = parse_dimension(required(tag, "cols"));
      t.metric = parse_metric(required(tag, "metric"));
      if (tag.self_closing) closed = true;
      continue;
    }
    if (!in_table) fail(ErrorCode::ParseError, "element outside usage-table: " + tag.name);
    if (tag.name == "cell") {
      t.cells[{required(tag, "row"), required(tag, "col")}] = parse_value(tag);
    } else if (tag.name == "row-total") {
      t.row_totals[required(tag, "row")] = parse_value(tag);
    } else if (tag.name == "col-total") {
      t.col_totals[required(tag, "col")] = parse_value(tag);
    } else if (tag.name == "grand-total") {
      t.grand_total = parse_value(tag);
      have_grand = true;
    } else {
      fail(ErrorCode::ParseError, "unexpected element " + tag.name);
    }
  }
  if (!in_table || !closed) fail(ErrorCode::ParseError, "missing usage-table element");
  if (!have_grand) fail(ErrorCode::ParseError, "missing grand-total");
  return t;
}

json to_json(const UsageTable& t) {
  json cells = json::array();
  for (const auto& [key, v] : t.cells) cells.push_back({{"row", key.first}, {"col", key.second}, {"value", v}});
  json rows = json::object();
  for (const auto& [k, v] : t.row_totals) rows[k] = v;
  json cols = json::object();
  for (const auto& [k, v] : t.col_totals) cols[k] = v;
  return json{{"rows", to_string(t.rows)}, {"cols", to_string(t.cols)}, {"metric", to_string(t.metric)},
              {"cells", cells},          {"row_totals", rows},        {"col_totals", cols},
              {"grand_total", t.grand_total}};
}

}  // namespace gridops
