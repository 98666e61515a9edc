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

#include <functional>
#include <optional>
#include <string>

#include "gridops/error.hpp"
#include "gridops/registry.hpp"
#include "gridops/time.hpp"

namespace support {

using namespace gridops;

inline std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline const char* kRoot = "CN=Root Admin";
inline const Timestamp kT0 = parse_iso8601("2009-06-01T00:00:00Z");

/// roc > country "Serbia", country "Bulgaria" (empty) > site "S1" > CE + SE.
inline Registry tiny_registry() {
  Registry r({kRoot});
  TopologySnapshot t;
  t.generated_at = kT0;
  t.nodes.push_back({"roc", NodeKind::Roc, "ROC", std::nullopt, {}, NodeStatus::Active});
  t.nodes.push_back({"rs", NodeKind::Country, "Serbia", "roc", {}, NodeStatus::Active});
  t.nodes.push_back({"bg", NodeKind::Country, "Bulgaria", "roc", {}, NodeStatus::Active});
  t.nodes.push_back({"s1", NodeKind::Site, "S1", "rs", {{"cpu_count", "100"}, {"storage_tb", "2.5"}, {"mpi", "true"}},
                     NodeStatus::Active});
  t.nodes.push_back({"ce1", NodeKind::Service, "CE", "s1", {{"service_type", "CE"}, {"critical", "true"}}, NodeStatus::Active});
  t.nodes.push_back({"se1", NodeKind::Service, "SE", "s1", {{"service_type", "SE"}, {"critical", "true"}}, NodeStatus::Active});
  r.import_topology(t);
  Directory d;
  d.contacts.push_back({"ct-rs", "Serbia Admin", "admin@rs.example.org", "", "rs", Privilege::Admin});
  d.contacts.push_back({"ct-bg", "Bulgaria Admin", "admin@bg.example.org", "", "bg", Privilege::Admin});
  d.contacts.push_back({"ct-s1", "Site Admin", "site@s1.example.org", "", "s1", Privilege::Admin});
  d.contacts.push_back({"ct-view", "Viewer", "view@rs.example.org", "", "rs", Privilege::Viewer});
  d.identities.push_back({"CN=Serbia Admin", "ct-rs"});
  d.identities.push_back({"CN=Bulgaria Admin", "ct-bg"});
  d.identities.push_back({"CN=Site Admin", "ct-s1"});
  d.identities.push_back({"CN=Viewer", "ct-view"});
  r.import_directory(d);
  return r;
}

}  // namespace support
