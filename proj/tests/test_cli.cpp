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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "gridops/core.hpp"
#include "gridops/fixtures.hpp"
#include "gridops/http_api.hpp"

using namespace gridops;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit = -1;
  std::string out;
};

Run run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && GRIDOPS_CONFIG=gridops.toml '" GRIDOPS_CLI "' " + args +
                          " 2>" + (dir / "stderr.txt").string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 65536> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path dir;
  Workspace() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("gridops-cli-" + std::to_string(rd()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    Workspace ws;
    CHECK(run(ws.dir, "--help").exit == 0);
    CHECK(run(ws.dir, "report usage --rows NOPE --bogus").exit == 1);
    CHECK(run(ws.dir, "").exit == 1);
    std::ofstream(ws.dir / "blocker") << "x";
    std::ofstream(ws.dir / "gridops.toml") << "[store]\ndata_dir = \"blocker/sub\"\n";
    CHECK(run(ws.dir, "ticket list").exit == 2);
    std::ofstream(ws.dir / "gridops.toml") << "[store]\ndata_dir = \"data\"\n[registry]\nroot_admins = [\"CN=R\"]\n";
    CHECK(run(ws.dir, "good current --date 2009-06-10").exit == 1);
    CHECK(run(ws.dir, "report usage --rows VO --cols VO").exit == 1);
  }

  TEST_CASE("fixture workflow matches the library and the HTTP surface") {
    Workspace ws;
    REQUIRE(run(ws.dir, "fixtures generate --profile all --out .").exit == 0);
    for (const char* f : {"gridops.toml", "registry.json", "q5.jsonl", "rota.json", "alarms.json"}) {
      CHECK(fs::exists(ws.dir / f));
    }

    const auto good = run(ws.dir, "good current --date 2009-06-10");
    CHECK(good.exit == 0);
    CHECK(good.out == current_good(parse_date("2009-06-10"), fixtures::regional_rota()) + "\n");

    const auto imported = run(ws.dir, "topology import registry.json");
    REQUIRE(imported.exit == 0);
    CHECK(imported.out.find("nodes, version") != std::string::npos);

    const auto ingested = run(ws.dir, "ingest results q5.jsonl");
    REQUIRE(ingested.exit == 0);
    CHECK(ingested.out.find(" 0 errors") != std::string::npos);
    CHECK(run(ws.dir, "ingest results q5.jsonl").out.find("0 accepted") == 0);

    const fs::path log = ws.dir / "accounting" / "site-rs-01.log";
    REQUIRE(fs::exists(log));
    std::string text = read_file(log);
    std::size_t records = 0;
    for (std::size_t pos = text.find(";E;"); pos != std::string::npos; pos = text.find(";E;", pos + 1)) ++records;
    std::ofstream(ws.dir / "broken.log")
        << text << "06/01/2009 00:00:00;E;x1;user=a\n06/01/2009 00:00:00;E;x2;end=oops\nnonsense;E;\n";
    const auto acc = run(ws.dir, "ingest accounting --site site-rs-01 broken.log");
    REQUIRE(acc.exit == 0);
    CHECK(acc.out == std::to_string(records) + " records, 3 errors\n");

    const auto report = run(ws.dir, "report availability --quarter 5");
    REQUIRE(report.exit == 0);
    const auto csv = run(ws.dir, "report availability --quarter 5 --format csv");
    const auto xml = run(ws.dir, "report usage --rows VO --cols MONTH --metric CPU_HOURS --format xml");
    REQUIRE(xml.exit == 0);

    auto cfg = load_config(ws.dir / "gridops.toml");
    Core core(cfg);
    CHECK(report.out == render(to_json(core.quarter_report(5))));
    CHECK(csv.out == to_csv(core.quarter_report(5)));
    CHECK(xml.out == export_xml(core.usage_query({}, Dimension::Vo, Dimension::Month, Metric::CpuHours)));

    HttpApi api(core);
    const int port = api.bind("127.0.0.1", 0);
    api.start(false);
    httplib::Client cli("127.0.0.1", port);
    cli.set_default_headers({{"X-SSL-Client-S-DN", fixtures::kRootAdminDn}});
    auto r = cli.Get("/api/v1/reports/quarter/5");
    REQUIRE(r);
    CHECK(r->body == report.out);
    r = cli.Get("/api/v1/accounting/query?rows=VO&cols=MONTH&metric=CPU_HOURS&format=xml");
    REQUIRE(r);
    CHECK(r->body == xml.out);
    api.stop();
  }
}
