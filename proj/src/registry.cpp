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

#include "gridops/registry.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "gridops/error.hpp"

namespace gridops {

using nlohmann::json;

namespace {

int kind_rank(NodeKind kind) { return static_cast<int>(kind); }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool parse_bool_attribute(const std::string& value, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(ErrorCode::InvalidArgument, "attribute " + key + " must be true or false");
}

bool valid_endpoint(std::string_view endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == endpoint.size()) {
    return false;
  }
  const auto port = endpoint.substr(colon + 1);
  if (port.size() > 5) return false;
  if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  return std::stoi(std::string(port)) <= 65535;
}

bool node_order(const RegistryNode& a, const RegistryNode& b) {
  if (a.kind != b.kind) return kind_rank(a.kind) < kind_rank(b.kind);
  if (a.name != b.name) return a.name < b.name;
  return a.id < b.id;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Roc: return "ROC";
    case NodeKind::Country: return "COUNTRY";
    case NodeKind::Site: return "SITE";
    case NodeKind::Service: return "SERVICE";
  }
  return "?";
}

std::string_view to_string(NodeStatus status) {
  return status == NodeStatus::Active ? "ACTIVE" : "SUSPENDED";
}

std::string_view to_string(ServiceType type) {
  switch (type) {
    case ServiceType::CE: return "CE";
    case ServiceType::SE: return "SE";
    case ServiceType::sBDII: return "sBDII";
    case ServiceType::WMS: return "WMS";
    case ServiceType::VOMS: return "VOMS";
    case ServiceType::LFC: return "LFC";
    case ServiceType::FTS: return "FTS";
    case ServiceType::MYPROXY: return "MYPROXY";
    case ServiceType::OTHER: return "OTHER";
  }
  return "?";
}

std::string_view to_string(Privilege privilege) {
  return privilege == Privilege::Admin ? "ADMIN" : "VIEWER";
}

NodeKind parse_node_kind(std::string_view text) {
  for (auto k : {NodeKind::Roc, NodeKind::Country, NodeKind::Site, NodeKind::Service}) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown node kind: " + std::string(text));
}

NodeStatus parse_node_status(std::string_view text) {
  if (text == "ACTIVE") return NodeStatus::Active;
  if (text == "SUSPENDED") return NodeStatus::Suspended;
  fail(ErrorCode::InvalidArgument, "unknown node status: " + std::string(text));
}

ServiceType parse_service_type(std::string_view text) {
  for (auto t : {ServiceType::CE, ServiceType::SE, ServiceType::sBDII, ServiceType::WMS,
                 ServiceType::VOMS, ServiceType::LFC, ServiceType::FTS, ServiceType::MYPROXY,
                 ServiceType::OTHER}) {
    if (to_string(t) == text) return t;
  }
  fail(ErrorCode::InvalidArgument, "unknown service type: " + std::string(text));
}

Privilege parse_privilege(std::string_view text) {
  if (text == "ADMIN") return Privilege::Admin;
  if (text == "VIEWER") return Privilege::Viewer;
  fail(ErrorCode::InvalidArgument, "unknown privilege: " + std::string(text));
}

Action parse_action(std::string_view text) {
  if (text == "VIEW") return Action::View;
  if (text == "EDIT") return Action::Edit;
  if (text == "ADMIN") return Action::Admin;
  fail(ErrorCode::InvalidArgument, "unknown action: " + std::string(text));
}

// ---------------------------------------------------------------------------

StorageTb StorageTb::parse(std::string_view text) {
  const std::string s = trim(text);
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_digit = false;
  bool in_frac = false;
  for (char c : s) {
    if (c == '.' && !in_frac) {
      in_frac = true;
      continue;
    }
    if (c < '0' || c > '9') {
      fail(ErrorCode::InvalidArgument, "storage_tb must be a non-negative decimal: " + s);
    }
    seen_digit = true;
    if (in_frac) {
      if (++frac_digits > 3) {
        fail(ErrorCode::InvalidArgument, "storage_tb has more than 3 fraction digits: " + s);
      }
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > 1'000'000'000'000) fail(ErrorCode::InvalidArgument, "storage_tb too large");
    }
  }
  if (!seen_digit) fail(ErrorCode::InvalidArgument, "storage_tb is empty");
  for (int i = frac_digits; i < 3; ++i) frac *= 10;
  return StorageTb(whole * 1000 + frac);
}

std::string StorageTb::to_string() const {
  std::string out = std::to_string(milli_ / 1000) + ".";
  std::string frac = std::to_string(1000 + milli_ % 1000).substr(1);
  while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
  return out + frac;
}

// ---------------------------------------------------------------------------

std::int64_t RegistryNode::cpu_count() const {
  const auto it = attributes.find("cpu_count");
  if (it == attributes.end()) fail(ErrorCode::InvalidArgument, "node " + id + " has no cpu_count");
  const std::string& v = it->second;
  if (v.empty() || v.size() > 12 ||
      !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    fail(ErrorCode::InvalidArgument, "cpu_count must be a non-negative integer on " + id);
  }
  return std::stoll(v);
}

StorageTb RegistryNode::storage() const {
  const auto it = attributes.find("storage_tb");
  if (it == attributes.end()) fail(ErrorCode::InvalidArgument, "node " + id + " has no storage_tb");
  return StorageTb::parse(it->second);
}

ServiceType RegistryNode::service_type() const {
  const auto it = attributes.find("service_type");
  if (it == attributes.end()) {
    fail(ErrorCode::InvalidArgument, "node " + id + " has no service_type");
  }
  return parse_service_type(it->second);
}

bool RegistryNode::critical() const { return attribute_flag("critical"); }

bool RegistryNode::attribute_flag(const std::string& key) const {
  const auto it = attributes.find(key);
  return it != attributes.end() && it->second == "true";
}

// ---------------------------------------------------------------------------

std::string normalize_dn(std::string_view dn) {
  const std::string text = trim(dn);
  std::vector<std::string> rdns;
  if (!text.empty() && text.front() == '/') {
    std::string current;
    for (std::size_t i = 1; i < text.size(); ++i) {
      if (text[i] == '/') {
        // A slash inside a value (e.g. CN=host/name) continues the RDN.
        const auto next_eq = text.find('=', i + 1);
        const auto next_slash = text.find('/', i + 1);
        if (next_eq != std::string::npos && (next_slash == std::string::npos || next_eq < next_slash)) {
          rdns.push_back(current);
          current.clear();
          continue;
        }
      }
      current.push_back(text[i]);
    }
    rdns.push_back(current);
    std::reverse(rdns.begin(), rdns.end());
  } else {
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\\' && i + 1 < text.size()) {
        current.push_back(text[i]);
        current.push_back(text[++i]);
      } else if (text[i] == ',') {
        rdns.push_back(current);
        current.clear();
      } else {
        current.push_back(text[i]);
      }
    }
    rdns.push_back(current);
  }
  std::string out;
  for (const auto& rdn : rdns) {
    const auto eq = rdn.find('=');
    std::string part;
    if (eq == std::string::npos) {
      part = trim(rdn);
    } else {
      part = upper(trim(rdn.substr(0, eq))) + "=" + trim(rdn.substr(eq + 1));
    }
    if (part.empty()) continue;
    if (!out.empty()) out.push_back(',');
    out += part;
  }
  return out;
}

bool valid_email(std::string_view email) {
  const auto at = email.find('@');
  if (at == std::string_view::npos || at == 0 || email.find('@', at + 1) != std::string_view::npos) {
    return false;
  }
  const auto domain = email.substr(at + 1);
  const auto dot = domain.find('.');
  if (dot == std::string_view::npos || dot == 0 || domain.back() == '.') return false;
  return std::none_of(email.begin(), email.end(),
                      [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

// ---------------------------------------------------------------------------

Registry::Registry(std::vector<std::string> root_admin_dns) {
  for (const auto& dn : root_admin_dns) root_admins_.push_back(normalize_dn(dn));
}

Registry::Registry(const Registry& other) {
  SharedLock lock(other.mutex_);
  root_admins_ = other.root_admins_;
  nodes_ = other.nodes_;
  children_ = other.children_;
  contacts_ = other.contacts_;
  identities_ = other.identities_;
  version_ = other.version_;
  last_modified_ = other.last_modified_;
}

Registry& Registry::operator=(const Registry& other) {
  if (this == &other) return *this;
  Registry copy(other);
  Lock lock(mutex_);
  root_admins_ = std::move(copy.root_admins_);
  nodes_ = std::move(copy.nodes_);
  children_ = std::move(copy.children_);
  contacts_ = std::move(copy.contacts_);
  identities_ = std::move(copy.identities_);
  version_ = copy.version_;
  last_modified_ = copy.last_modified_;
  return *this;
}

const RegistryNode& Registry::node_locked(const NodeId& id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(ErrorCode::UnknownNode, "unknown node: " + id);
  return it->second;
}

void Registry::validate_node_locked(const RegistryNode& node) const {
  if (node.name.empty()) fail(ErrorCode::InvalidArgument, "node name must not be empty");
  if (node.kind == NodeKind::Roc) {
    if (node.parent) fail(ErrorCode::HierarchyViolation, "ROC nodes have no parent");
  } else {
    if (!node.parent) {
      fail(ErrorCode::HierarchyViolation,
           std::string(to_string(node.kind)) + " node requires a parent");
    }
    const auto parent = nodes_.find(*node.parent);
    if (parent == nodes_.end()) fail(ErrorCode::UnknownNode, "unknown parent: " + *node.parent);
    if (kind_rank(parent->second.kind) + 1 != kind_rank(node.kind)) {
      fail(ErrorCode::HierarchyViolation,
           std::string(to_string(node.kind)) + " cannot be placed under " +
               std::string(to_string(parent->second.kind)));
    }
  }
  // Sibling name uniqueness.
  const auto siblings = [&]() -> std::vector<NodeId> {
    if (node.parent) {
      const auto it = children_.find(*node.parent);
      return it == children_.end() ? std::vector<NodeId>{} : it->second;
    }
    std::vector<NodeId> roots;
    for (const auto& [id, n] : nodes_) {
      if (!n.parent) roots.push_back(id);
    }
    return roots;
  }();
  for (const auto& sibling : siblings) {
    if (sibling != node.id && node_locked(sibling).name == node.name) {
      fail(ErrorCode::DuplicateSiblingName, "a sibling named '" + node.name + "' already exists");
    }
  }
  if (node.kind == NodeKind::Site) {
    (void)node.cpu_count();
    (void)node.storage();
  }
  if (node.kind == NodeKind::Service) {
    (void)node.service_type();
    if (const auto it = node.attributes.find("endpoint");
        it != node.attributes.end() && !valid_endpoint(it->second)) {
      fail(ErrorCode::InvalidArgument, "endpoint must be host:port: " + it->second);
    }
    if (const auto it = node.attributes.find("critical"); it != node.attributes.end()) {
      parse_bool_attribute(it->second, "critical");
    }
  }
  if (const auto it = node.attributes.find("mpi"); it != node.attributes.end()) {
    parse_bool_attribute(it->second, "mpi");
  }
  // Kind changes would orphan children with the wrong parent kind.
  if (const auto existing = nodes_.find(node.id); existing != nodes_.end()) {
    const auto kids = children_.find(node.id);
    if (existing->second.kind != node.kind && kids != children_.end() && !kids->second.empty()) {
      fail(ErrorCode::HierarchyViolation, "cannot change the kind of a node with children");
    }
  }
}

NodeId Registry::fresh_id_locked(NodeKind kind) const {
  std::string prefix(to_string(kind));
  for (auto& c : prefix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (std::uint64_t n = nodes_.size() + 1;; ++n) {
    NodeId candidate = prefix + "-" + std::to_string(n);
    if (!nodes_.contains(candidate)) return candidate;
  }
}

void Registry::touch_locked(Timestamp now) {
  ++version_;
  last_modified_ = std::max(last_modified_, now);
}

NodeId Registry::upsert_node(std::string_view actor_dn, RegistryNode node, Timestamp now) {
  Lock lock(mutex_);
  if (node.id.empty()) node.id = fresh_id_locked(node.kind);
  // Authorization is checked where the node lives: its parent, or the node
  // itself for roots.
  const auto existing = nodes_.find(node.id);
  bool allowed = false;
  if (node.parent) {
    if (!nodes_.contains(*node.parent)) fail(ErrorCode::UnknownNode, "unknown parent: " + *node.parent);
    allowed = check_authz_locked(actor_dn, Action::Edit, *node.parent);
  } else {
    allowed = existing != nodes_.end() ? check_authz_locked(actor_dn, Action::Edit, node.id)
                                       : is_root_admin(actor_dn);
  }
  // Moving a node also requires edit rights where it currently lives.
  if (allowed && existing != nodes_.end() && existing->second.parent &&
      existing->second.parent != node.parent) {
    allowed = check_authz_locked(actor_dn, Action::Edit, *existing->second.parent);
  }
  if (!allowed) fail(ErrorCode::AuthzDenied, "actor may not edit under this node");
  validate_node_locked(node);

  if (existing != nodes_.end() && existing->second.parent != node.parent) {
    if (existing->second.parent) {
      auto& siblings = children_[*existing->second.parent];
      std::erase(siblings, node.id);
    }
  }
  const bool relink = existing == nodes_.end() || existing->second.parent != node.parent;
  if (relink && node.parent) children_[*node.parent].push_back(node.id);
  const NodeId id = node.id;
  nodes_[id] = std::move(node);
  touch_locked(now);
  return id;
}

void Registry::remove_node(std::string_view actor_dn, const NodeId& id, Timestamp now) {
  Lock lock(mutex_);
  const RegistryNode& node = node_locked(id);
  const NodeId authz_at = node.parent.value_or(id);
  if (!check_authz_locked(actor_dn, Action::Edit, authz_at) ||
      (!node.parent && !is_root_admin(actor_dn))) {
    fail(ErrorCode::AuthzDenied, "actor may not remove " + id);
  }
  if (const auto kids = children_.find(id); kids != children_.end() && !kids->second.empty()) {
    fail(ErrorCode::HierarchyViolation, "cannot remove a node that still has children");
  }
  if (node.parent) std::erase(children_[*node.parent], id);
  children_.erase(id);
  for (auto it = contacts_.begin(); it != contacts_.end();) {
    if (it->second.node == id) {
      std::erase_if(identities_, [&](const auto& kv) { return kv.second == it->first; });
      it = contacts_.erase(it);
    } else {
      ++it;
    }
  }
  nodes_.erase(id);
  touch_locked(now);
}

ContactId Registry::upsert_contact(std::string_view actor_dn, Contact contact, Timestamp now) {
  Lock lock(mutex_);
  const RegistryNode& target = node_locked(contact.node);
  if (!valid_email(contact.email)) {
    fail(ErrorCode::InvalidArgument, "invalid email address: " + contact.email);
  }
  // Administrators manage contacts below them; granting ADMIN at a node needs
  // an administrator strictly above it.
  bool allowed = is_root_admin(actor_dn);
  if (!allowed) {
    if (contact.privilege == Privilege::Admin) {
      allowed = target.parent && check_authz_locked(actor_dn, Action::Admin, *target.parent);
    } else {
      allowed = check_authz_locked(actor_dn, Action::Admin, contact.node);
    }
  }
  if (allowed) {
    if (const auto existing = contacts_.find(contact.id); existing != contacts_.end()) {
      const auto& old_node = node_locked(existing->second.node);
      if (existing->second.privilege == Privilege::Admin) {
        allowed = is_root_admin(actor_dn) ||
                  (old_node.parent && check_authz_locked(actor_dn, Action::Admin, *old_node.parent));
      } else {
        allowed = check_authz_locked(actor_dn, Action::Admin, existing->second.node);
      }
    }
  }
  if (!allowed) fail(ErrorCode::AuthzDenied, "actor may not manage contacts at " + contact.node);
  if (contact.id.empty()) {
    for (std::uint64_t n = contacts_.size() + 1;; ++n) {
      contact.id = "contact-" + std::to_string(n);
      if (!contacts_.contains(contact.id)) break;
    }
  }
  const ContactId id = contact.id;
  contacts_[id] = std::move(contact);
  touch_locked(now);
  return id;
}

void Registry::map_identity(std::string_view actor_dn, const CertIdentity& identity,
                            Timestamp now) {
  Lock lock(mutex_);
  const auto contact = contacts_.find(identity.mapped_contact);
  if (contact == contacts_.end()) {
    fail(ErrorCode::InvalidArgument, "unknown contact: " + identity.mapped_contact);
  }
  const auto& node = node_locked(contact->second.node);
  const bool allowed =
      is_root_admin(actor_dn) ||
      (contact->second.privilege == Privilege::Admin
           ? node.parent && check_authz_locked(actor_dn, Action::Admin, *node.parent)
           : check_authz_locked(actor_dn, Action::Admin, contact->second.node));
  if (!allowed) fail(ErrorCode::AuthzDenied, "actor may not map identities for this contact");
  const std::string dn = normalize_dn(identity.subject_dn);
  if (dn.empty()) fail(ErrorCode::InvalidArgument, "empty subject DN");
  if (const auto it = identities_.find(dn); it != identities_.end() && it->second != identity.mapped_contact) {
    fail(ErrorCode::InvalidArgument, "subject DN already mapped: " + dn);
  }
  identities_[dn] = identity.mapped_contact;
  touch_locked(now);
}

bool Registry::is_root_admin(std::string_view dn) const {
  const std::string normalized = normalize_dn(dn);
  return std::find(root_admins_.begin(), root_admins_.end(), normalized) != root_admins_.end();
}

bool Registry::is_ancestor_or_self_locked(const NodeId& ancestor, NodeId node) const {
  for (;;) {
    if (node == ancestor) return true;
    const auto it = nodes_.find(node);
    if (it == nodes_.end() || !it->second.parent) return false;
    node = *it->second.parent;
  }
}

bool Registry::check_authz_locked(std::string_view actor_dn, Action action,
                                  const NodeId& node) const {
  node_locked(node);
  if (is_root_admin(actor_dn)) return true;
  const auto mapping = identities_.find(normalize_dn(actor_dn));
  if (mapping == identities_.end()) {
    fail(ErrorCode::UnknownIdentity, "no contact mapped to " + std::string(actor_dn));
  }
  if (action == Action::View) return true;
  const auto contact = contacts_.find(mapping->second);
  if (contact == contacts_.end()) return false;
  if (contact->second.privilege != Privilege::Admin) return false;
  return is_ancestor_or_self_locked(contact->second.node, node);
}

bool Registry::check_authz(std::string_view actor_dn, Action action, const NodeId& node) const {
  SharedLock lock(mutex_);
  return check_authz_locked(actor_dn, action, node);
}

bool Registry::effectively_active_locked(const NodeId& id) const {
  NodeId current = id;
  for (;;) {
    const RegistryNode& n = node_locked(current);
    if (n.status != NodeStatus::Active) return false;
    if (!n.parent) return true;
    current = *n.parent;
  }
}

ResourceTotals Registry::summary_locked(const NodeId& scope) const {
  const RegistryNode& n = node_locked(scope);
  ResourceTotals totals;
  if (n.status != NodeStatus::Active) return totals;
  if (n.kind == NodeKind::Site) {
    totals.cpu_total = n.cpu_count();
    totals.storage_tb_total = n.storage();
    totals.site_count = 1;
    return totals;
  }
  if (n.kind == NodeKind::Service) return totals;
  if (const auto kids = children_.find(scope); kids != children_.end()) {
    for (const auto& child : kids->second) totals += summary_locked(child);
  }
  return totals;
}

ResourceTotals Registry::resource_summary(const NodeId& scope) const {
  SharedLock lock(mutex_);
  node_locked(scope);
  if (!effectively_active_locked(scope)) return {};
  return summary_locked(scope);
}

void Registry::collect_subtree_locked(const NodeId& scope, std::vector<RegistryNode>& out) const {
  out.push_back(node_locked(scope));
  if (const auto kids = children_.find(scope); kids != children_.end()) {
    for (const auto& child : kids->second) collect_subtree_locked(child, out);
  }
}

TopologySnapshot Registry::export_topology(const NodeId& scope) const {
  SharedLock lock(mutex_);
  TopologySnapshot snapshot;
  snapshot.version = version_;
  snapshot.generated_at = last_modified_;
  collect_subtree_locked(scope, snapshot.nodes);
  std::sort(snapshot.nodes.begin(), snapshot.nodes.end(), node_order);
  return snapshot;
}

TopologySnapshot Registry::export_all() const {
  SharedLock lock(mutex_);
  TopologySnapshot snapshot;
  snapshot.version = version_;
  snapshot.generated_at = last_modified_;
  for (const auto& [id, n] : nodes_) snapshot.nodes.push_back(n);
  std::sort(snapshot.nodes.begin(), snapshot.nodes.end(), node_order);
  return snapshot;
}

void Registry::import_topology(const TopologySnapshot& snapshot) {
  Lock lock(mutex_);
  // Parents sort before children because kind rank orders the list.
  std::vector<RegistryNode> ordered = snapshot.nodes;
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return kind_rank(a.kind) < kind_rank(b.kind);
  });
  for (auto& node : ordered) {
    if (node.id.empty()) fail(ErrorCode::InvalidArgument, "imported node without id");
    if (node.parent && !nodes_.contains(*node.parent)) {
      // Allowed only when the parent is outside the imported scope and absent.
      fail(ErrorCode::UnknownNode, "imported node " + node.id + " has unknown parent");
    }
    validate_node_locked(node);
    const auto existing = nodes_.find(node.id);
    if (existing != nodes_.end() && existing->second.parent != node.parent && existing->second.parent) {
      std::erase(children_[*existing->second.parent], node.id);
    }
    if ((existing == nodes_.end() || existing->second.parent != node.parent) && node.parent) {
      children_[*node.parent].push_back(node.id);
    }
    nodes_[node.id] = node;
  }
  version_ = std::max(version_ + 1, snapshot.version);
  last_modified_ = std::max(last_modified_, snapshot.generated_at);
}

void Registry::import_directory(const Directory& directory) {
  Lock lock(mutex_);
  for (const auto& c : directory.contacts) {
    node_locked(c.node);
    if (!valid_email(c.email)) fail(ErrorCode::InvalidArgument, "invalid email: " + c.email);
    contacts_[c.id] = c;
  }
  for (const auto& i : directory.identities) {
    if (!contacts_.contains(i.mapped_contact)) {
      fail(ErrorCode::InvalidArgument, "identity maps to unknown contact " + i.mapped_contact);
    }
    identities_[normalize_dn(i.subject_dn)] = i.mapped_contact;
  }
  ++version_;
}

void Registry::restore_counters(std::uint64_t version, Timestamp last_modified) {
  Lock lock(mutex_);
  version_ = version;
  last_modified_ = last_modified;
}

Directory Registry::directory() const {
  SharedLock lock(mutex_);
  Directory d;
  for (const auto& [id, c] : contacts_) d.contacts.push_back(c);
  for (const auto& [dn, contact] : identities_) d.identities.push_back({dn, contact});
  return d;
}

bool Registry::contains(const NodeId& id) const {
  SharedLock lock(mutex_);
  return nodes_.contains(id);
}

RegistryNode Registry::node(const NodeId& id) const {
  SharedLock lock(mutex_);
  return node_locked(id);
}

std::optional<RegistryNode> Registry::find(const NodeId& id) const {
  SharedLock lock(mutex_);
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

std::vector<RegistryNode> Registry::children(const NodeId& id) const {
  SharedLock lock(mutex_);
  node_locked(id);
  std::vector<RegistryNode> out;
  if (const auto kids = children_.find(id); kids != children_.end()) {
    for (const auto& k : kids->second) out.push_back(node_locked(k));
  }
  std::sort(out.begin(), out.end(), node_order);
  return out;
}

std::vector<RegistryNode> Registry::roots() const {
  SharedLock lock(mutex_);
  std::vector<RegistryNode> out;
  for (const auto& [id, n] : nodes_) {
    if (!n.parent) out.push_back(n);
  }
  std::sort(out.begin(), out.end(), node_order);
  return out;
}

std::vector<RegistryNode> Registry::descendants(const NodeId& scope, NodeKind kind) const {
  SharedLock lock(mutex_);
  std::vector<RegistryNode> all;
  collect_subtree_locked(scope, all);
  std::vector<RegistryNode> out;
  for (auto& n : all) {
    if (n.kind == kind && n.id != scope) out.push_back(std::move(n));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::optional<RegistryNode> Registry::ancestor_of_kind(const NodeId& id, NodeKind kind) const {
  SharedLock lock(mutex_);
  NodeId current = id;
  for (;;) {
    const auto it = nodes_.find(current);
    if (it == nodes_.end()) return std::nullopt;
    if (it->second.kind == kind) return it->second;
    if (!it->second.parent) return std::nullopt;
    current = *it->second.parent;
  }
}

bool Registry::effectively_active(const NodeId& id) const {
  SharedLock lock(mutex_);
  return effectively_active_locked(id);
}

std::optional<Contact> Registry::contact(const ContactId& id) const {
  SharedLock lock(mutex_);
  const auto it = contacts_.find(id);
  if (it == contacts_.end()) return std::nullopt;
  return it->second;
}

std::vector<Contact> Registry::contacts_at(const NodeId& node) const {
  SharedLock lock(mutex_);
  std::vector<Contact> out;
  for (const auto& [id, c] : contacts_) {
    if (c.node == node) out.push_back(c);
  }
  return out;
}

std::optional<Contact> Registry::contact_for_dn(std::string_view dn) const {
  SharedLock lock(mutex_);
  const auto it = identities_.find(normalize_dn(dn));
  if (it == identities_.end()) return std::nullopt;
  const auto c = contacts_.find(it->second);
  if (c == contacts_.end()) return std::nullopt;
  return c->second;
}

std::uint64_t Registry::version() const {
  SharedLock lock(mutex_);
  return version_;
}

Timestamp Registry::last_modified() const {
  SharedLock lock(mutex_);
  return last_modified_;
}

// ---------------------------------------------------------------------------

json to_json(const RegistryNode& node) {
  json attrs = json::object();
  for (const auto& [k, v] : node.attributes) attrs[k] = v;
  return json{{"id", node.id},
              {"kind", to_string(node.kind)},
              {"name", node.name},
              {"parent", node.parent ? json(*node.parent) : json(nullptr)},
              {"attributes", attrs},
              {"status", to_string(node.status)}};
}

RegistryNode node_from_json(const json& j) {
  try {
    RegistryNode node;
    node.id = j.value("id", "");
    node.kind = parse_node_kind(j.at("kind").get<std::string>());
    node.name = j.at("name").get<std::string>();
    if (j.contains("parent") && !j.at("parent").is_null()) node.parent = j.at("parent").get<std::string>();
    if (j.contains("attributes")) {
      for (const auto& [k, v] : j.at("attributes").items()) {
        node.attributes[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    node.status = parse_node_status(j.value("status", "ACTIVE"));
    return node;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad node document: ") + e.what());
  }
}

json to_json(const TopologySnapshot& snapshot) {
  std::vector<RegistryNode> nodes = snapshot.nodes;
  std::sort(nodes.begin(), nodes.end(), node_order);
  json arr = json::array();
  for (const auto& n : nodes) arr.push_back(to_json(n));
  return json{{"version", snapshot.version},
              {"generated_at", format_iso8601(snapshot.generated_at)},
              {"nodes", arr}};
}

TopologySnapshot topology_from_json(const json& j) {
  try {
    TopologySnapshot s;
    s.version = j.value("version", std::uint64_t{0});
    if (j.contains("generated_at")) s.generated_at = parse_iso8601(j.at("generated_at").get<std::string>());
    for (const auto& n : j.at("nodes")) s.nodes.push_back(node_from_json(n));
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad topology document: ") + e.what());
  }
}

json to_json(const Contact& c) {
  return json{{"id", c.id},       {"name", c.name}, {"email", c.email},
              {"phone", c.phone}, {"node", c.node}, {"privilege", to_string(c.privilege)}};
}

Contact contact_from_json(const json& j) {
  try {
    Contact c;
    c.id = j.value("id", "");
    c.name = j.at("name").get<std::string>();
    c.email = j.at("email").get<std::string>();
    c.phone = j.value("phone", "");
    c.node = j.at("node").get<std::string>();
    c.privilege = parse_privilege(j.value("privilege", "VIEWER"));
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad contact document: ") + e.what());
  }
}

json to_json(const Directory& d) {
  json contacts = json::array();
  for (const auto& c : d.contacts) contacts.push_back(to_json(c));
  json identities = json::array();
  for (const auto& i : d.identities) {
    identities.push_back({{"subject_dn", i.subject_dn}, {"contact", i.mapped_contact}});
  }
  return json{{"contacts", contacts}, {"identities", identities}};
}

Directory directory_from_json(const json& j) {
  try {
    Directory d;
    if (j.contains("contacts")) {
      for (const auto& c : j.at("contacts")) d.contacts.push_back(contact_from_json(c));
    }
    if (j.contains("identities")) {
      for (const auto& i : j.at("identities")) {
        d.identities.push_back({i.at("subject_dn").get<std::string>(), i.at("contact").get<std::string>()});
      }
    }
    return d;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad directory document: ") + e.what());
  }
}

json to_json(const ResourceTotals& totals) {
  return json{{"cpu_total", totals.cpu_total},
              {"storage_tb_total", totals.storage_tb_total.terabytes()},
              {"site_count", totals.site_count}};
}

}  // namespace gridops
