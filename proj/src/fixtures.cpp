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

#include "gridops/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gridops/error.hpp"

namespace gridops::fixtures {

namespace {

using namespace std::chrono;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t site_count_for(std::int64_t cpus) {
  if (cpus >= 1000) return 3;
  if (cpus >= 100) return 2;
  return 1;
}

/// Splits total into parts proportional to k, k-1, ..., 1; the rounding
/// remainder goes to the first part so the parts always sum to total.
std::vector<std::int64_t> split_exact(std::int64_t total, std::size_t k) {
  const std::int64_t denom = static_cast<std::int64_t>(k * (k + 1) / 2);
  std::vector<std::int64_t> parts(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    parts[i] = total * static_cast<std::int64_t>(k - i) / denom;
    assigned += parts[i];
  }
  parts[0] += total - assigned;
  return parts;
}

RegistryNode make_node(NodeId id, NodeKind kind, std::string name, std::optional<NodeId> parent) {
  RegistryNode n;
  n.id = std::move(id);
  n.kind = kind;
  n.name = std::move(name);
  n.parent = std::move(parent);
  return n;
}

void add_service(std::vector<RegistryNode>& nodes, const NodeId& site, const std::string& site_code,
                 ServiceType type, bool critical, int port) {
  const std::string t = lower(std::string(to_string(type)));
  auto svc = make_node("svc-" + site_code + "-" + t, NodeKind::Service, std::string(to_string(type)), site);
  svc.attributes["service_type"] = std::string(to_string(type));
  svc.attributes["critical"] = critical ? "true" : "false";
  svc.attributes["endpoint"] = t + "." + site_code + ".example.org:" + std::to_string(port);
  nodes.push_back(std::move(svc));
}

std::string two_digits(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::string hms(std::int64_t seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(seconds / 3600),
                static_cast<long long>(seconds / 60 % 60), static_cast<long long>(seconds % 60));
  return buf;
}

}  // namespace

const std::vector<CountryRow>& country_table() {
  static const std::vector<CountryRow> rows = {
      {"Greece", "GR", 1200, StorageTb::parse("66.8")},
      {"Bulgaria", "BG", 1210, StorageTb::parse("42.3")},
      {"Romania", "RO", 120, StorageTb::parse("4.0")},
      {"Turkey", "TR", 2380, StorageTb::parse("528.0")},
      {"Hungary", "HU", 8, StorageTb::parse("2.0")},
      {"Albania", "AL", 34, StorageTb::parse("1.3")},
      {"Bosnia-Herzegovina", "BA", 80, StorageTb::parse("1.1")},
      {"FYR of Macedonia", "MK", 80, StorageTb::parse("4.1")},
      {"Serbia", "RS", 974, StorageTb::parse("97.0")},
      {"Montenegro", "ME", 40, StorageTb::parse("0.6")},
      {"Moldova", "MD", 24, StorageTb::parse("6.5")},
      {"Croatia", "HR", 44, StorageTb::parse("0.2")},
      {"Armenia", "AM", 424, StorageTb::parse("0.2")},
      {"Georgia", "GE", 16, StorageTb::parse("0.1")},
  };
  return rows;
}

RegistryFixture regional_registry() {
  RegistryFixture f;
  auto& nodes = f.topology.nodes;
  nodes.push_back(make_node(kRocId, NodeKind::Roc, "SEE", std::nullopt));
  f.directory.contacts.push_back(
      {"ct-roc-manager", "ROC Manager", "roc-manager@see-grid.example.org", "+30 210 000 0000", kRocId, Privilege::Admin});
  f.directory.identities.push_back({kRootAdminDn, "ct-roc-manager"});

  for (const auto& row : country_table()) {
    const std::string cc = lower(row.code);
    const NodeId country = "cty-" + cc;
    nodes.push_back(make_node(country, NodeKind::Country, row.name, std::string(kRocId)));
    f.directory.contacts.push_back({"ct-gim-" + cc, "GIM " + row.name, "gim@" + cc + ".see-grid.example.org", "",
                                    country, Privilege::Admin});
    f.directory.identities.push_back({"CN=GIM " + row.name + ",O=SEE-GRID,C=" + row.code, "ct-gim-" + cc});
    f.directory.contacts.push_back({"ct-viewer-" + cc, "Observer " + row.name,
                                    "observer@" + cc + ".see-grid.example.org", "", country, Privilege::Viewer});
    f.directory.identities.push_back({"CN=Observer " + row.name + ",O=SEE-GRID,C=" + row.code, "ct-viewer-" + cc});

    const std::size_t k = site_count_for(row.cpus);
    const auto cpus = split_exact(row.cpus, k);
    const auto storage = split_exact(row.storage.milli(), k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::string code = cc + "-" + two_digits(i + 1);
      const NodeId site = "site-" + code;
      auto node = make_node(site, NodeKind::Site, row.code + "-" + two_digits(i + 1), country);
      node.attributes["cpu_count"] = std::to_string(cpus[i]);
      node.attributes["storage_tb"] = StorageTb::from_milli(storage[i]).to_string();
      node.attributes["mpi"] = (k > 1 && i == 0) ? "true" : "false";
      nodes.push_back(std::move(node));
      add_service(nodes, site, code, ServiceType::CE, true, 2119);
      add_service(nodes, site, code, ServiceType::SE, true, 8443);
      add_service(nodes, site, code, ServiceType::sBDII, true, 2170);
      if (k > 1 && i == 0) add_service(nodes, site, code, ServiceType::WMS, false, 7443);
      const std::string admin = "ct-admin-" + code;
      f.directory.contacts.push_back({admin, "Site admin " + row.code + "-" + two_digits(i + 1), "admin@" + code + ".example.org",
                                      "", site, Privilege::Admin});
      f.directory.identities.push_back(
          {"CN=Site Admin " + row.code + "-" + two_digits(i + 1) + ",O=SEE-GRID,C=" + row.code, admin});
    }
  }
  // Decommissioned site: present in the inventory but suspended.
  auto retired = make_node("site-gr-99", NodeKind::Site, "GR-99", std::string("cty-gr"));
  retired.attributes["cpu_count"] = "64";
  retired.attributes["storage_tb"] = "1.5";
  retired.status = NodeStatus::Suspended;
  nodes.push_back(std::move(retired));
  add_service(nodes, "site-gr-99", "gr-99", ServiceType::CE, true, 2119);
  f.directory.contacts.push_back(
      {"ct-admin-gr-99", "Site admin GR-99", "admin@gr-99.example.org", "", "site-gr-99", Privilege::Admin});

  f.topology.generated_at = sys_days{year{2009} / May / 1};
  f.topology.version = 1;
  return f;
}

Registry load_regional_registry() {
  const auto f = regional_registry();
  Registry registry({kRootAdminDn});
  registry.import_topology(f.topology);
  registry.import_directory(f.directory);
  return registry;
}

ProbeCorpus availability_corpus(const Registry& registry, int quarter, double target, std::uint64_t seed,
                                const SlaConfig& sla) {
  if (target <= 0.0 || target > 1.0) fail(ErrorCode::InvalidArgument, "target availability must lie in (0, 1]");
  ProbeCorpus corpus;
  corpus.quarter = QuarterId{quarter};
  corpus.window = corpus.quarter.window(sla.quarter_epoch);
  const Minutes slot{30};
  const auto n_slots = static_cast<std::int64_t>(duration_cast<Minutes>(corpus.window.length()) / slot);
  std::mt19937_64 rng(seed);

  struct SitePlan {
    RegistryNode site;
    std::vector<RegistryNode> critical;
    std::vector<RegistryNode> other;
    double weight = 0.0;
    std::int64_t budget = 0;
  };
  std::vector<SitePlan> plans;
  for (const auto& site : registry.descendants(kRocId, NodeKind::Site)) {
    if (!registry.effectively_active(site.id)) continue;
    SitePlan p;
    p.site = site;
    p.weight = static_cast<double>(site.cpu_count());
    for (const auto& svc : registry.children(site.id)) {
      if (svc.status != NodeStatus::Active) continue;
      (svc.critical() ? p.critical : p.other).push_back(svc);
    }
    if (!p.critical.empty()) plans.push_back(std::move(p));
  }
  std::sort(plans.begin(), plans.end(), [](const SitePlan& a, const SitePlan& b) { return a.site.id < b.site.id; });

  // Per-site unavailability scattered around the target, then rescaled so the
  // CPU-weighted mean is exact before rounding to whole slots.
  std::uniform_real_distribution<double> spread(0.4, 1.6);
  std::vector<double> raw(plans.size());
  double weight_sum = 0.0;
  double weighted_raw = 0.0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    raw[i] = spread(rng);
    weight_sum += plans[i].weight;
    weighted_raw += plans[i].weight * raw[i];
  }
  const double scale = (1.0 - target) * weight_sum / weighted_raw;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const double u = std::min(0.6, raw[i] * scale);
    plans[i].budget = std::llround(u * static_cast<double>(n_slots));
  }

  const auto slot_time = [&](std::int64_t i) { return corpus.window.start + slot * i; };
  double weighted_availability = 0.0;
  for (auto& plan : plans) {
    // Episodes: ERROR runs cost their length, result gaps of g slots cost g - 1.
    struct Episode {
      std::size_t service;
      bool gap;
      std::int64_t span;
    };
    std::vector<Episode> episodes;
    std::int64_t remaining = plan.budget;
    std::uniform_int_distribution<std::int64_t> length(1, 36);
    std::bernoulli_distribution pick_gap(0.25);
    std::uniform_int_distribution<std::size_t> pick_service(0, plan.critical.size() - 1);
    while (remaining > 0) {
      const std::int64_t cost = std::min(remaining, length(rng));
      const bool gap = cost >= 1 && pick_gap(rng);
      episodes.push_back({pick_service(rng), gap, gap ? cost + 1 : cost});
      remaining -= cost;
    }
    std::int64_t span_total = 0;
    for (const auto& e : episodes) span_total += e.span;
    const auto n_gaps = static_cast<std::int64_t>(episodes.size()) + 1;
    const std::int64_t free_slots = n_slots - span_total - 2 * n_gaps;
    if (free_slots < 0) fail(ErrorCode::InvalidArgument, "outage budget does not fit the quarter");
    std::uniform_int_distribution<std::int64_t> cut(0, free_slots);
    std::vector<std::int64_t> cuts(static_cast<std::size_t>(n_gaps - 1));
    for (auto& c : cuts) c = cut(rng);
    std::sort(cuts.begin(), cuts.end());

    // status[service][slot]: 0 OK, 1 WARN, 2 ERROR, 3 missing
    std::vector<std::vector<std::uint8_t>> status(plan.critical.size(), std::vector<std::uint8_t>(n_slots, 0));
    std::int64_t cursor = 0;
    std::int64_t previous_cut = 0;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      cursor += 2 + (cuts[e] - previous_cut);
      previous_cut = cuts[e];
      const auto& ep = episodes[e];
      for (std::int64_t s = cursor; s < cursor + ep.span; ++s) status[ep.service][s] = ep.gap ? 3 : 2;
      cursor += ep.span;
    }
    std::bernoulli_distribution warn(0.02);
    std::uniform_int_distribution<int> second(0, 59);
    for (std::size_t si = 0; si < plan.critical.size(); ++si) {
      const auto& svc = plan.critical[si];
      const std::string probe = lower(std::string(to_string(svc.service_type()))) + "-basic";
      for (std::int64_t s = 0; s < n_slots; ++s) {
        auto code = status[si][s];
        if (code == 3) continue;
        if (code == 0 && warn(rng)) code = 1;
        ProbeResult r;
        r.service = svc.id;
        r.probe_id = probe;
        r.timestamp = slot_time(s);
        r.status = code == 2 ? ProbeStatus::Error : (code == 1 ? ProbeStatus::Warn : ProbeStatus::Ok);
        if (code == 2) r.detail = "planted outage";
        corpus.results.push_back(std::move(r));
      }
      // Weekly MPI check on MPI sites: not critical, so even failures must not count.
      if (svc.service_type() == ServiceType::CE && plan.site.attribute_flag("mpi")) {
        for (std::int64_t s = 7; s < n_slots; s += 7 * 48) {
          corpus.results.push_back({svc.id, kMpiProbeId, slot_time(s) + Seconds{second(rng)},
                                    s % 2 ? ProbeStatus::Error : ProbeStatus::Ok, "worker_nodes=wn01,wn02"});
        }
      }
    }
    // Non-critical services fail at will without touching the site figure.
    std::bernoulli_distribution flaky(0.1);
    for (const auto& svc : plan.other) {
      const std::string probe = lower(std::string(to_string(svc.service_type()))) + "-basic";
      for (std::int64_t s = 0; s < n_slots; ++s) {
        corpus.results.push_back({svc.id, probe, slot_time(s), flaky(rng) ? ProbeStatus::Error : ProbeStatus::Ok, ""});
      }
    }
    const double site_availability =
        1.0 - static_cast<double>(plan.budget) / static_cast<double>(n_slots);
    corpus.planned_site_availability[plan.site.id] = site_availability;
    weighted_availability += plan.weight * site_availability;
  }
  corpus.planned_availability = weighted_availability / weight_sum;
  std::sort(corpus.results.begin(), corpus.results.end(), [](const ProbeResult& a, const ProbeResult& b) {
    return std::tie(a.timestamp, a.service, a.probe_id) < std::tie(b.timestamp, b.service, b.probe_id);
  });
  return corpus;
}

ProbeCorpus early_quarter_corpus(const Registry& registry) { return availability_corpus(registry, 5, 0.78, 505); }

ProbeCorpus late_quarter_corpus(const Registry& registry) { return availability_corpus(registry, 8, 0.89, 808); }

std::string format_batch_line(const JobRecord& job) {
  const auto day = floor<days>(job.end);
  const year_month_day ymd{day};
  const hh_mm_ss tod{job.end - day};
  char stamp[96];
  std::snprintf(stamp, sizeof stamp, "%02u/%02u/%04d %02lld:%02lld:%02lld", static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(ymd.year()),
                static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()));
  std::string hosts;
  for (const auto& slot : job.exec_slots) {
    if (!hosts.empty()) hosts += '+';
    hosts += slot.host + "/" + std::to_string(slot.slot);
  }
  return std::string(stamp) + ";E;" + job.job_id + ";user=" + job.user + " group=" + job.vo + " queue=" + job.queue +
         " qtime=" + std::to_string(to_unix(job.submit)) + " start=" + std::to_string(to_unix(job.start)) +
         " end=" + std::to_string(to_unix(job.end)) + " exec_host=" + hosts +
         " resources_used.walltime=" + hms(job.walltime_s) + " resources_used.cput=" + hms(job.cput_s);
}

UsageCorpus usage_corpus(const Registry& registry, std::size_t jobs, std::uint64_t seed) {
  UsageCorpus corpus;
  corpus.project_vos = {"see", "meteo", "seismo", "env"};
  corpus.other_vos = {"atlas", "cms", "biomed", "compchem"};
  corpus.window = {sys_days{year{2008} / May / 1}, sys_days{year{2010} / May / 1}};
  corpus.project_cpu_seconds = 16'400'000LL * 3600;
  corpus.total_cpu_seconds = 22'500'000LL * 3600;
  corpus.jobs = jobs;
  std::mt19937_64 rng(seed);

  std::vector<RegistryNode> sites;
  std::vector<double> weights;
  for (const auto& site : registry.descendants(kRocId, NodeKind::Site)) {
    if (!registry.effectively_active(site.id)) continue;
    sites.push_back(site);
    weights.push_back(static_cast<double>(site.cpu_count()));
  }
  std::discrete_distribution<std::size_t> pick_site(weights.begin(), weights.end());
  const auto window_s = to_unix(corpus.window.end) - to_unix(corpus.window.start);
  std::uniform_int_distribution<std::int64_t> pick_end(0, window_s - 1);
  std::uniform_real_distribution<double> size(0.2, 1.8);
  std::bernoulli_distribution wants_mpi(0.2);
  std::uniform_int_distribution<int> pick_cores(2, 8);
  std::uniform_int_distribution<std::int64_t> slack(0, 900);

  std::map<NodeId, std::vector<std::string>> lines;
  std::size_t next_id = 1;
  const auto emit_group = [&](const std::vector<std::string>& vos, std::int64_t target, std::size_t count) {
    std::vector<double> shares(count);
    for (auto& s : shares) s = size(rng);
    const double share_sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const bool last = i + 1 == count;
      std::int64_t cpu = last ? target - assigned
                              : static_cast<std::int64_t>(static_cast<double>(target) * shares[i] / share_sum);
      const auto& site = sites[pick_site(rng)];
      JobRecord job;
      job.job_id = std::to_string(next_id++) + ".ce." + site.name + ".example.org";
      job.site = site.id;
      job.vo = vos[i % vos.size()];
      job.user = job.vo + std::to_string(1 + i % 17);
      job.queue = "seegrid";
      job.end = corpus.window.start + Seconds{pick_end(rng)};
      const bool mpi = !last && site.attribute_flag("mpi") && wants_mpi(rng);
      if (mpi) {
        const int cores = pick_cores(rng);
        job.walltime_s = cpu / cores;
        cpu = job.walltime_s * cores;
        job.cput_s = job.walltime_s;  // the mother node only
        for (int c = 0; c < cores; ++c) job.exec_slots.push_back({"wn" + two_digits(1 + c / 2), c % 2});
      } else {
        // Serial CPU time is max(cput, walltime); alternate which one carries it.
        const std::int64_t under = std::min<std::int64_t>(cpu, slack(rng));
        if (i % 2 == 0) {
          job.walltime_s = cpu;
          job.cput_s = cpu - under;
        } else {
          job.cput_s = cpu;
          job.walltime_s = cpu - under;
        }
        job.exec_slots.push_back({"wn01", 0});
      }
      assigned += cpu;
      job.start = job.end - Seconds{job.walltime_s};
      job.submit = job.start - Seconds{slack(rng)};
      auto& out = lines[site.id];
      if (i % 50 == 0) out.push_back(format_batch_line(job).replace(20, 1, "Q"));
      out.push_back(format_batch_line(job));
    }
  };
  const std::size_t project_jobs = jobs * 7 / 10;
  emit_group(corpus.project_vos, corpus.project_cpu_seconds, project_jobs);
  emit_group(corpus.other_vos, corpus.total_cpu_seconds - corpus.project_cpu_seconds, jobs - project_jobs);
  for (auto& [site, site_lines] : lines) {
    std::string text;
    for (const auto& l : site_lines) text += l + "\n";
    corpus.logs[site] = std::move(text);
  }
  return corpus;
}

ShiftRota regional_rota() {
  ShiftRota rota;
  for (const auto& row : country_table()) rota.countries.push_back(row.name);
  rota.epoch_week_start = sys_days{year{2008} / May / 5};
  return rota;
}

std::vector<AlarmRule> default_alarm_rules() {
  const std::string guide = "https://wiki.see-grid.example.org/wms/troubleshooting#";
  return {
      {"input_queue_length", 500, 300, guide + "input_queue_length"},
      {"jobs_waiting", 1000, 600, guide + "jobs_waiting"},
      {"load_1min", 8, 5, guide + "load_1min"},
      {"disk_used_pct", 90, 80, guide + "disk_used_pct"},
      {"daemons_down_count", 0.5, 0.5, guide + "daemons_down_count"},
  };
}

std::vector<WmsSnapshot> wms_series(const Registry& registry, Timestamp start, std::size_t count, Minutes step,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution daemon_failure(0.02);
  std::vector<WmsSnapshot> out;
  for (const auto& site : registry.descendants(kRocId, NodeKind::Site)) {
    for (const auto& svc : registry.children(site.id)) {
      if (svc.service_type() != ServiceType::WMS) continue;
      for (std::size_t i = 0; i < count; ++i) {
        const double phase = 2.0 * 3.141592653589793 * static_cast<double>(i) / 96.0;
        const double wave = std::sin(phase);
        WmsSnapshot s;
        s.wms = svc.id;
        s.timestamp = start + step * static_cast<std::int64_t>(i);
        s.agent_version = "1.0";
        s.metrics["input_queue_length"] = std::max(0.0, 350.0 + 250.0 * wave + 20.0 * noise(rng));
        s.metrics["jobs_waiting"] = std::max(0.0, 500.0 + 400.0 * wave + 30.0 * noise(rng));
        s.metrics["load_1min"] = std::max(0.0, 5.0 + 4.0 * wave + 0.3 * noise(rng));
        s.metrics["disk_used_pct"] = std::clamp(70.0 + 0.1 * static_cast<double>(i) + noise(rng), 0.0, 100.0);
        s.metrics["daemons_down_count"] = daemon_failure(rng) ? 1.0 : 0.0;
        out.push_back(std::move(s));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const WmsSnapshot& a, const WmsSnapshot& b) {
    return std::tie(a.timestamp, a.wms) < std::tie(b.timestamp, b.wms);
  });
  return out;
}

}  // namespace gridops::fixtures
