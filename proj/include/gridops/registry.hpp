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
#include <map>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridops/time.hpp"

namespace gridops {

using NodeId = std::string;
using ContactId = std::string;

enum class NodeKind { Roc, Country, Site, Service };
enum class NodeStatus { Active, Suspended };
enum class ServiceType { CE, SE, sBDII, WMS, VOMS, LFC, FTS, MYPROXY, OTHER };
enum class Privilege { Viewer, Admin };
enum class Action { View, Edit, Admin };

std::string_view to_string(NodeKind kind);
std::string_view to_string(NodeStatus status);
std::string_view to_string(ServiceType type);
std::string_view to_string(Privilege privilege);
NodeKind parse_node_kind(std::string_view text);
NodeStatus parse_node_status(std::string_view text);
ServiceType parse_service_type(std::string_view text);
Privilege parse_privilege(std::string_view text);
Action parse_action(std::string_view text);

/// Storage capacity held in thousandths of a terabyte so that roll-ups are exact.
class StorageTb {
 public:
  constexpr StorageTb() = default;
  static constexpr StorageTb from_milli(std::int64_t milli) { return StorageTb(milli); }
  /// Parses a non-negative decimal with at most three fraction digits.
  static StorageTb parse(std::string_view text);

  constexpr std::int64_t milli() const { return milli_; }
  double terabytes() const { return static_cast<double>(milli_) / 1000.0; }
  /// Shortest decimal form with at least one fraction digit ("97.0", "754.2").
  std::string to_string() const;

  constexpr StorageTb& operator+=(StorageTb other) {
    milli_ += other.milli_;
    return *this;
  }
  friend constexpr StorageTb operator+(StorageTb a, StorageTb b) { return a += b; }
  friend constexpr auto operator<=>(StorageTb, StorageTb) = default;

 private:
  constexpr explicit StorageTb(std::int64_t milli) : milli_(milli) {}
  std::int64_t milli_ = 0;
};

struct RegistryNode {
  NodeId id;
  NodeKind kind = NodeKind::Site;
  std::string name;
  std::optional<NodeId> parent;
  std::map<std::string, std::string> attributes;
  NodeStatus status = NodeStatus::Active;

  // Typed views over the attribute map; they throw INVALID_ARGUMENT when absent.
  std::int64_t cpu_count() const;
  StorageTb storage() const;
  ServiceType service_type() const;
  bool critical() const;
  bool attribute_flag(const std::string& key) const;

  friend bool operator==(const RegistryNode&, const RegistryNode&) = default;
};

struct Contact {
  ContactId id;
  std::string name;
  std::string email;
  std::string phone;
  NodeId node;
  Privilege privilege = Privilege::Viewer;

  friend bool operator==(const Contact&, const Contact&) = default;
};

struct CertIdentity {
  std::string subject_dn;
  ContactId mapped_contact;

  friend bool operator==(const CertIdentity&, const CertIdentity&) = default;
};

struct ResourceTotals {
  std::int64_t cpu_total = 0;
  StorageTb storage_tb_total;
  std::int64_t site_count = 0;

  ResourceTotals& operator+=(const ResourceTotals& other) {
    cpu_total += other.cpu_total;
    storage_tb_total += other.storage_tb_total;
    site_count += other.site_count;
    return *this;
  }
  friend bool operator==(const ResourceTotals&, const ResourceTotals&) = default;
};

struct TopologySnapshot {
  Timestamp generated_at;
  std::vector<RegistryNode> nodes;
  std::uint64_t version = 0;
};

/// Contacts and certificate mappings; kept out of the topology document
/// because it carries personal data.
struct Directory {
  std::vector<Contact> contacts;
  std::vector<CertIdentity> identities;
};

/// Normalizes an X.509 subject to RFC 2253 form. OpenSSL slash form
/// ("/C=RS/O=AEGIS/CN=Jane") is reversed into "CN=Jane,O=AEGIS,C=RS".
std::string normalize_dn(std::string_view dn);

bool valid_email(std::string_view email);

/// Hierarchical inventory ROC -> COUNTRY -> SITE -> SERVICE with contacts and
/// certificate-based authorization. Reads take a shared lock; mutations are
/// serialized and each one bumps version().
class Registry {
 public:
  explicit Registry(std::vector<std::string> root_admin_dns = {});

  Registry(const Registry& other);
  Registry& operator=(const Registry& other);

  NodeId upsert_node(std::string_view actor_dn, RegistryNode node, Timestamp now);
  void remove_node(std::string_view actor_dn, const NodeId& id, Timestamp now);
  ContactId upsert_contact(std::string_view actor_dn, Contact contact, Timestamp now);
  void map_identity(std::string_view actor_dn, const CertIdentity& identity, Timestamp now);

  bool check_authz(std::string_view actor_dn, Action action, const NodeId& node) const;

  ResourceTotals resource_summary(const NodeId& scope) const;
  TopologySnapshot export_topology(const NodeId& scope) const;
  /// Every root plus its subtree.
  TopologySnapshot export_all() const;

  /// Trusted load of a snapshot (CLI import and store replay); bypasses authz.
  /// Nodes are validated against the hierarchy rules.
  void import_topology(const TopologySnapshot& snapshot);
  void import_directory(const Directory& directory);
  Directory directory() const;

  bool contains(const NodeId& id) const;
  RegistryNode node(const NodeId& id) const;
  std::optional<RegistryNode> find(const NodeId& id) const;
  std::vector<RegistryNode> children(const NodeId& id) const;
  std::vector<RegistryNode> roots() const;
  /// Descendants (excluding scope) of the given kind, ordered by id.
  std::vector<RegistryNode> descendants(const NodeId& scope, NodeKind kind) const;
  /// Nearest ancestor-or-self of the given kind.
  std::optional<RegistryNode> ancestor_of_kind(const NodeId& id, NodeKind kind) const;
  /// True if the node and every ancestor are ACTIVE.
  bool effectively_active(const NodeId& id) const;
  std::optional<Contact> contact(const ContactId& id) const;
  std::vector<Contact> contacts_at(const NodeId& node) const;
  std::optional<Contact> contact_for_dn(std::string_view dn) const;
  bool is_root_admin(std::string_view dn) const;

  std::uint64_t version() const;
  Timestamp last_modified() const;
  /// Store replay: reinstates the counters saved alongside a snapshot.
  void restore_counters(std::uint64_t version, Timestamp last_modified);

 private:
  using Lock = std::unique_lock<std::shared_mutex>;
  using SharedLock = std::shared_lock<std::shared_mutex>;

  void validate_node_locked(const RegistryNode& node) const;
  bool check_authz_locked(std::string_view actor_dn, Action action, const NodeId& node) const;
  bool is_ancestor_or_self_locked(const NodeId& ancestor, NodeId node) const;
  bool effectively_active_locked(const NodeId& id) const;
  ResourceTotals summary_locked(const NodeId& scope) const;
  void collect_subtree_locked(const NodeId& scope, std::vector<RegistryNode>& out) const;
  const RegistryNode& node_locked(const NodeId& id) const;
  NodeId fresh_id_locked(NodeKind kind) const;
  void touch_locked(Timestamp now);

  mutable std::shared_mutex mutex_;
  std::vector<std::string> root_admins_;
  std::unordered_map<NodeId, RegistryNode> nodes_;
  std::unordered_map<NodeId, std::vector<NodeId>> children_;
  std::map<ContactId, Contact> contacts_;
  std::map<std::string, ContactId> identities_;
  std::uint64_t version_ = 0;
  Timestamp last_modified_{};
};

// JSON document forms.
nlohmann::json to_json(const RegistryNode& node);
RegistryNode node_from_json(const nlohmann::json& j);
/// Nodes are emitted ordered by (kind rank, name, id) so equal snapshots
/// serialize to identical bytes.
nlohmann::json to_json(const TopologySnapshot& snapshot);
TopologySnapshot topology_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Contact& contact);
Contact contact_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Directory& directory);
Directory directory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResourceTotals& totals);

}  // namespace gridops
