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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gridops/config.hpp"
#include "gridops/core.hpp"
#include "gridops/error.hpp"
#include "gridops/fixtures.hpp"
#include "gridops/http_api.hpp"

namespace {

using namespace gridops;
using nlohmann::json;

std::string read_input(const std::string& path) {
  std::stringstream buffer;
  if (path == "-") {
    buffer << std::cin.rdbuf();
  } else {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot read " + path);
    buffer << in.rdbuf();
  }
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, what + " is not valid JSON: " + e.what());
  }
}

struct Globals {
  std::string config;
  std::string data_dir;
  std::string actor;
};

Config load(const Globals& g) {
  Config cfg;
  if (const auto path = resolve_config_path(g.config.empty() ? std::nullopt : std::optional(g.config))) {
    cfg = load_config(*path);
  }
  if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
  return cfg;
}

std::optional<std::string> opt(const std::string& s) { return s.empty() ? std::nullopt : std::optional(s); }

void write_fixtures(const std::string& profile, const std::string& out) {
  const auto registry = fixtures::load_regional_registry();
  const auto results_lines = [](const fixtures::ProbeCorpus& c) {
    std::string text;
    for (const auto& r : c.results) text += to_json_line(r) + "\n";
    return text;
  };
  if (profile == "registry") {
    const auto f = fixtures::regional_registry();
    write_output(out, render({{"topology", to_json(f.topology)}, {"directory", to_json(f.directory)}}));
  } else if (profile == "q5") {
    write_output(out, results_lines(fixtures::early_quarter_corpus(registry)));
  } else if (profile == "q8") {
    write_output(out, results_lines(fixtures::late_quarter_corpus(registry)));
  } else if (profile == "rota") {
    write_output(out, render(to_json(fixtures::regional_rota())));
  } else if (profile == "alarms") {
    const auto rules = fixtures::default_alarm_rules();
    write_output(out, render(to_json(std::span<const AlarmRule>(rules))));
  } else if (profile == "wms") {
    std::string text;
    const auto start = parse_iso8601("2010-02-01T00:00:00Z");
    for (const auto& s : fixtures::wms_series(registry, start, 288, Minutes{10})) text += to_json(s).dump() + "\n";
    write_output(out, text);
  } else if (profile == "usage") {
    if (out == "-") fail(ErrorCode::InvalidArgument, "the usage profile writes one log per site; give --out <dir>");
    std::filesystem::create_directories(out);
    const auto corpus = fixtures::usage_corpus(registry);
    for (const auto& [site, text] : corpus.logs) write_output((std::filesystem::path(out) / (site + ".log")).string(), text);
  } else if (profile == "all") {
    if (out == "-") fail(ErrorCode::InvalidArgument, "the all profile needs --out <dir>");
    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    for (const char* p : {"registry", "q5", "q8", "rota", "alarms", "wms"}) {
      const std::string name = std::string(p) + (std::string(p) == "q5" || std::string(p) == "q8" || std::string(p) == "wms" ? ".jsonl" : ".json");
      write_fixtures(p, (dir / name).string());
    }
    write_fixtures("usage", (dir / "accounting").string());
    write_output((dir / "gridops.toml").string(),
                 "[server]\nlisten = \"127.0.0.1:8443\"\ntrusted_proxy_header = \"X-SSL-Client-S-DN\"\n\n"
                 "[sla]\nthreshold = 0.80\nquarter_epoch = \"2008-05-01\"\n\n"
                 "[probes]\nparallelism = 16\ndefault_period_min = 30\nsimulate = true\n\n"
                 "[alarms]\nrules = \"alarms.json\"\n\n[store]\ndata_dir = \"data\"\n\n"
                 "[registry]\nroot_admins = [\"" + std::string(fixtures::kRootAdminDn) + "\"]\n\n"
                 "[operations]\nrota_file = \"rota.json\"\n");
  } else {
    fail(ErrorCode::InvalidArgument, "unknown fixture profile '" + profile +
                                         "' (registry, q5, q8, usage, rota, alarms, wms, all)");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"gridops: regional grid operations toolkit"};
  app.require_subcommand(1);
  Globals g;
  const auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--config", g.config, "Config file (default: $GRIDOPS_CONFIG)");
    cmd->add_option("--data-dir", g.data_dir, "Store directory, overriding the config");
    cmd->add_option("--as", g.actor, "Actor certificate DN for mutations");
  };
  add_globals(&app);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  bool no_scheduler = false;
  std::string listen;
  serve->add_flag("--no-scheduler", no_scheduler, "Do not run the probe scheduler");
  serve->add_option("--listen", listen, "host:port, overriding the config");
  add_globals(serve);

  // topology
  auto* topology = app.add_subcommand("topology", "Registry import and export");
  topology->require_subcommand(1);
  add_globals(topology);
  auto* topo_import = topology->add_subcommand("import", "Load a topology (and optional directory) document");
  std::string topo_file;
  topo_import->add_option("file", topo_file, "Topology JSON, '-' for stdin")->required();
  add_globals(topo_import);
  auto* topo_export = topology->add_subcommand("export", "Write the topology document");
  std::string export_file = "-";
  std::string export_scope;
  topo_export->add_option("file", export_file, "Output path, '-' for stdout");
  topo_export->add_option("--scope", export_scope, "Subtree root");
  add_globals(topo_export);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load probe results, accounting logs or WMS snapshots");
  ingest->require_subcommand(1);
  add_globals(ingest);
  auto* ingest_results = ingest->add_subcommand("results", "JSON-lines probe results");
  std::string results_file;
  ingest_results->add_option("file", results_file, "Input, '-' for stdin")->required();
  add_globals(ingest_results);
  auto* ingest_accounting = ingest->add_subcommand("accounting", "Batch-server accounting log");
  std::string accounting_file;
  std::string accounting_site;
  ingest_accounting->add_option("--site", accounting_site, "Site id")->required();
  ingest_accounting->add_option("file", accounting_file, "Input, '-' for stdin")->required();
  add_globals(ingest_accounting);
  auto* ingest_wms = ingest->add_subcommand("wms", "JSON-lines WMS snapshots");
  std::string wms_file;
  ingest_wms->add_option("file", wms_file, "Input, '-' for stdin")->required();
  add_globals(ingest_wms);

  // report
  auto* report = app.add_subcommand("report", "Availability and usage reports");
  report->require_subcommand(1);
  add_globals(report);
  auto* report_avail = report->add_subcommand("availability", "Availability report");
  int quarter = 0;
  std::string from;
  std::string to;
  std::string scope;
  std::string avail_format = "json";
  report_avail->add_option("--quarter", quarter, "Project quarter number");
  report_avail->add_option("--from", from, "Window start (ISO-8601)");
  report_avail->add_option("--to", to, "Window end (ISO-8601)");
  report_avail->add_option("--scope", scope, "Node id");
  report_avail->add_option("--format", avail_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  add_globals(report_avail);
  auto* report_usage = report->add_subcommand("usage", "Usage pivot table");
  std::string rows = "VO";
  std::string cols = "COUNTRY";
  std::string metric = "CPU_HOURS";
  std::string usage_format = "json";
  std::string f_vo;
  std::string f_country;
  std::string f_site;
  std::string f_job_type;
  std::string f_from;
  std::string f_to;
  report_usage->add_option("--rows", rows, "VO, COUNTRY, SITE, MONTH or JOB_TYPE");
  report_usage->add_option("--cols", cols, "VO, COUNTRY, SITE, MONTH or JOB_TYPE");
  report_usage->add_option("--metric", metric, "CPU_HOURS, CPU_YEARS or JOB_COUNT");
  report_usage->add_option("--format", usage_format, "json or xml")->check(CLI::IsMember({"json", "xml"}));
  report_usage->add_option("--vo", f_vo, "Filter by VO");
  report_usage->add_option("--country", f_country, "Filter by country");
  report_usage->add_option("--site", f_site, "Filter by site id");
  report_usage->add_option("--job-type", f_job_type, "SERIAL or MPI");
  report_usage->add_option("--from", f_from, "Job end on or after");
  report_usage->add_option("--to", f_to, "Job end before");
  add_globals(report_usage);

  // good
  auto* good = app.add_subcommand("good", "Operator-on-duty rota");
  good->require_subcommand(1);
  add_globals(good);
  auto* good_current = good->add_subcommand("current", "Country on shift");
  std::string good_date;
  std::string rota_file;
  good_current->add_option("--date", good_date, "YYYY-MM-DD (default: today, UTC)");
  good_current->add_option("--rota", rota_file, "Rota file, overriding the config");
  add_globals(good_current);

  // ticket
  auto* ticket = app.add_subcommand("ticket", "Helpdesk tickets");
  ticket->require_subcommand(1);
  add_globals(ticket);
  auto* ticket_open = ticket->add_subcommand("open", "Open a ticket");
  std::string t_site;
  std::string t_severity = "SIMPLE";
  std::string t_summary;
  ticket_open->add_option("--site", t_site, "Site id")->required();
  ticket_open->add_option("--severity", t_severity, "SIMPLE or COMPLEX");
  ticket_open->add_option("--summary", t_summary, "One-line description")->required();
  add_globals(ticket_open);
  auto* ticket_list = ticket->add_subcommand("list", "List tickets");
  std::string t_state;
  ticket_list->add_option("--state", t_state, "Only tickets in this state");
  add_globals(ticket_list);
  auto* ticket_transition = ticket->add_subcommand("transition", "Move a ticket along its lifecycle");
  std::string t_id;
  std::string t_to;
  std::string t_note;
  ticket_transition->add_option("id", t_id, "Ticket id")->required();
  ticket_transition->add_option("--state", t_to, "Target state")->required();
  ticket_transition->add_option("--note", t_note, "Comment");
  add_globals(ticket_transition);

  // fixtures
  auto* fix = app.add_subcommand("fixtures", "Reference data sets");
  fix->require_subcommand(1);
  add_globals(fix);
  auto* fix_gen = fix->add_subcommand("generate", "Write a fixture profile");
  std::string profile;
  std::string fix_out = "-";
  fix_gen->add_option("--profile", profile, "registry, q5, q8, usage, rota, alarms, wms or all")->required();
  fix_gen->add_option("--out", fix_out, "Output file or directory, '-' for stdout");
  add_globals(fix_gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (fix_gen->parsed()) {
    write_fixtures(profile, fix_out);
    return 0;
  }
  if (good_current->parsed() && !rota_file.empty()) {
    const auto rota = rota_from_json(parse_json_text(read_input(rota_file), "rota file"));
    const Date date = good_date.empty() ? date_of(now_utc()) : parse_date(good_date);
    std::cout << current_good(date, rota) << "\n";
    return 0;
  }

  Config cfg = load(g);
  if (!listen.empty()) cfg.listen = listen;
  Core core(cfg);
  const ApiIdentity actor = core.local_identity(opt(g.actor));

  if (serve->parsed()) {
    HttpApi api(core);
    const int port = api.bind();
    std::cerr << "gridops " << kBuildVersion << " listening on " << cfg.listen_host() << ":" << port
              << (api.tls() ? " (TLS)" : "") << "\n";
    api.serve(!no_scheduler && cfg.simulate_probes);
    return 0;
  }
  if (topo_import->parsed()) {
    const auto doc = parse_json_text(read_input(topo_file), "topology document");
    if (doc.contains("topology")) {
      std::optional<Directory> dir;
      if (doc.contains("directory")) dir = directory_from_json(doc.at("directory"));
      core.import_registry(actor, topology_from_json(doc.at("topology")), dir);
    } else {
      core.import_registry(actor, topology_from_json(doc), std::nullopt);
    }
    std::cout << core.registry().export_all().nodes.size() << " nodes, version " << core.registry().version() << "\n";
    return 0;
  }
  if (topo_export->parsed()) {
    write_output(export_file, render(core.topology(opt(export_scope))));
    return 0;
  }
  if (ingest_results->parsed()) {
    const auto outcome = core.ingest_results(actor, read_input(results_file));
    std::cout << outcome.accepted << " accepted, " << outcome.duplicates << " duplicates, "
              << outcome.errors.size() << " errors\n";
    for (const auto& e : outcome.errors) std::cerr << "line " << e.line << ": " << e.code << ": " << e.message << "\n";
    return 0;
  }
  if (ingest_accounting->parsed()) {
    const auto outcome = core.ingest_accounting(actor, accounting_site, read_input(accounting_file));
    std::cout << outcome.records << " records, " << outcome.errors << " errors\n";
    for (const auto& e : outcome.error_lines) std::cerr << "line " << e.line << ": " << e.message << "\n";
    return 0;
  }
  if (ingest_wms->parsed()) {
    const auto text = read_input(wms_file);
    std::istringstream in(text);
    std::string line;
    std::size_t stored = 0;
    std::size_t transitions = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      transitions += core.ingest_wms(actor, wms_snapshot_from_json(parse_json_text(line, "snapshot"))).size();
      ++stored;
    }
    std::cout << stored << " snapshots, " << transitions << " alarm transitions\n";
    return 0;
  }
  if (report_avail->parsed()) {
    if (quarter > 0) {
      const auto r = core.quarter_report(quarter);
      std::cout << (avail_format == "csv" ? to_csv(r) : render(to_json(r)));
      return 0;
    }
    if (from.empty() || to.empty()) fail(ErrorCode::InvalidArgument, "give --quarter or both --from and --to");
    const Window w{parse_iso8601(from), parse_iso8601(to)};
    std::cout << (avail_format == "csv" ? to_csv(core.availability(w)) : render(core.availability_json(opt(scope), w)));
    return 0;
  }
  if (report_usage->parsed()) {
    UsageFilter filter;
    filter.vo = opt(f_vo);
    filter.country = opt(f_country);
    filter.site = opt(f_site);
    if (!f_job_type.empty()) filter.job_type = parse_job_type(f_job_type);
    if (!f_from.empty() || !f_to.empty()) {
      if (f_from.empty() || f_to.empty()) fail(ErrorCode::InvalidArgument, "give both --from and --to");
      filter.window = Window{parse_iso8601(f_from), parse_iso8601(f_to)};
    }
    const auto table = core.usage_query(filter, parse_dimension(rows), parse_dimension(cols), parse_metric(metric));
    std::cout << (usage_format == "xml" ? export_xml(table) : render(to_json(table)));
    return 0;
  }
  if (good_current->parsed()) {
    const Date date = good_date.empty() ? date_of(core.now()) : parse_date(good_date);
    std::cout << core.good_for(date) << "\n";
    return 0;
  }
  if (ticket_open->parsed()) {
    std::cout << render(to_json(core.open_ticket(actor, t_site, parse_severity(t_severity), t_summary, {})));
    return 0;
  }
  if (ticket_list->parsed()) {
    std::optional<TicketState> state;
    if (!t_state.empty()) state = parse_ticket_state(t_state);
    json arr = json::array();
    for (const auto& t : core.tickets(state)) arr.push_back(to_json(t));
    std::cout << render(arr);
    return 0;
  }
  if (ticket_transition->parsed()) {
    std::cout << render(to_json(core.transition_ticket(actor, t_id, parse_ticket_state(t_to), t_note)));
    return 0;
  }
  std::cerr << app.help();
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gridops::Error& e) {
    std::cerr << "error: " << gridops::to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == gridops::ErrorCode::StoreIo ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
