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

#include <filesystem>
#include <random>

#include "suites.hpp"

using namespace suites;

namespace {

void expect(const Outcome& o) {
  INFO(o.detail);
  CHECK(o.ok);
  CHECK(o.cases > 0);
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("timeline matches per-minute expansion") { expect(oracle_timeline(150, 11)); }
  TEST_CASE("site AND matches per-minute conjunction") { expect(oracle_site_and(150, 12)); }
  TEST_CASE("weighted availability matches weighted mean") { expect(oracle_weighted(100, 13)); }
  TEST_CASE("usage pivot matches group-by") { expect(oracle_pivot(150, 14)); }
  TEST_CASE("percentiles and business days") { expect(oracle_percentile(150, 15)); }
  TEST_CASE("registry summaries and authorization") { expect(prop_registry(100, 16)); }
  TEST_CASE("probe store idempotence") { expect(prop_probe_store(100, 17)); }
  TEST_CASE("alarm hysteresis") { expect(prop_alarms(100, 18)); }
  TEST_CASE("rota fairness") { expect(prop_rota(100, 19)); }
  TEST_CASE("usage conservation") { expect(prop_conservation(100, 20)); }
  TEST_CASE("XML round trip") { expect(prop_xml(100, 21)); }
  TEST_CASE("accounting parser never crashes") { expect(parser_fuzz(2000, 22)); }
}
