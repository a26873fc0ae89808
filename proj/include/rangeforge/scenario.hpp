#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/core/net.hpp"

namespace rangeforge {

enum class Role { firewall, router, attacker, target, monitor, operator_pc };
enum class ServiceKind { http, dns, ssh, rdp, smtp, imap };
enum class SensorMode { ids, ips };
enum class FilterAction { allow, deny };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::firewall: return "firewall";
    case Role::router: return "router";
    case Role::attacker: return "attacker";
    case Role::target: return "target";
    case Role::monitor: return "monitor";
    case Role::operator_pc: return "operator";
  }
  return "target";
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "firewall") return Role::firewall;
  if (s == "router") return Role::router;
  if (s == "attacker") return Role::attacker;
  if (s == "target") return Role::target;
  if (s == "monitor") return Role::monitor;
  if (s == "operator") return Role::operator_pc;
  return std::nullopt;
}

inline bool forwards_traffic(Role r) { return r == Role::firewall || r == Role::router; }

inline std::string_view to_string(ServiceKind k) {
  switch (k) {
    case ServiceKind::http: return "http";
    case ServiceKind::dns: return "dns";
    case ServiceKind::ssh: return "ssh";
    case ServiceKind::rdp: return "rdp";
    case ServiceKind::smtp: return "smtp";
    case ServiceKind::imap: return "imap";
  }
  return "http";
}

inline std::optional<ServiceKind> parse_service_kind(std::string_view s) {
  if (s == "http") return ServiceKind::http;
  if (s == "dns") return ServiceKind::dns;
  if (s == "ssh") return ServiceKind::ssh;
  if (s == "rdp") return ServiceKind::rdp;
  if (s == "smtp") return ServiceKind::smtp;
  if (s == "imap") return ServiceKind::imap;
  return std::nullopt;
}

// IANA well-known port for each service kind.
constexpr std::uint16_t default_port(ServiceKind k) {
  switch (k) {
    case ServiceKind::http: return 80;
    case ServiceKind::dns: return 53;
    case ServiceKind::ssh: return 22;
    case ServiceKind::rdp: return 3389;
    case ServiceKind::smtp: return 25;
    case ServiceKind::imap: return 143;
  }
  return 0;
}

inline std::string_view to_string(SensorMode m) { return m == SensorMode::ids ? "ids" : "ips"; }
inline std::string_view to_string(FilterAction a) {
  return a == FilterAction::allow ? "allow" : "deny";
}

// Packet-filter rule on a firewall node. Ordered lists, first match wins.
struct FilterRule {
  FilterAction action = FilterAction::allow;
  ProtoMatch proto;
  AddrMatch src;
  PortMatch src_port;
  AddrMatch dst;
  PortMatch dst_port;

  friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

struct ServiceSpec {
  ServiceKind kind = ServiceKind::http;
  std::uint16_t port = 80;

  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

struct SensorSpec {
  std::string engine;                      // "suricata", "snort", "zeek"
  SensorMode mode = SensorMode::ids;
  std::optional<std::string> tap_network;  // nullopt = inline

  bool is_inline() const { return !tap_network.has_value(); }
  friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

struct InterfaceSpec {
  std::string name;
  std::string network;
  std::optional<Ipv4> ip;  // pinned address; otherwise assigned

  friend bool operator==(const InterfaceSpec&, const InterfaceSpec&) = default;
};

struct NodeSpec {
  std::string name;
  Role role = Role::target;
  std::string os;
  int cpu = 2;
  int ram_mb = 2048;
  std::vector<InterfaceSpec> interfaces;
  std::vector<ServiceSpec> services;
  std::optional<SensorSpec> sensor;
  std::vector<FilterRule> fw_rules;

  const ServiceSpec* find_service(ServiceKind k) const {
    for (const auto& s : services)
      if (s.kind == k) return &s;
    return nullptr;
  }

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct NetworkSpec {
  std::string name;
  bool external = false;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// `constraint separate(a, b, ...)`: members must land on distinct hosts.
struct AntiAffinityConstraint {
  std::vector<std::string> members;

  friend bool operator==(const AntiAffinityConstraint&, const AntiAffinityConstraint&) = default;
};

struct Scenario {
  std::string name;
  std::vector<NetworkSpec> networks;
  std::vector<NodeSpec> nodes;
  std::vector<AntiAffinityConstraint> constraints;

  const NodeSpec* find_node(std::string_view n) const {
    for (const auto& node : nodes)
      if (node.name == n) return &node;
    return nullptr;
  }
  const NetworkSpec* find_network(std::string_view n) const {
    for (const auto& net : networks)
      if (net.name == n) return &net;
    return nullptr;
  }
  int network_index(std::string_view n) const {
    for (std::size_t i = 0; i < networks.size(); ++i)
      if (networks[i].name == n) return static_cast<int>(i);
    return -1;
  }

  // Group identifier of the anti-affinity constraint naming `node`, if any.
  std::optional<std::string> anti_affinity_group(std::string_view node) const {
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& m = constraints[i].members;
      if (std::find(m.begin(), m.end(), node) != m.end())
        return "separate-" + std::to_string(i);
    }
    return std::nullopt;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// Resource defaults by os label (role fallback for unknown labels).

struct Resources {
  int cpu;
  int ram_mb;
};

inline Resources default_resources(std::string_view os, Role role) {
  static const std::map<std::string, Resources, std::less<>> table = {
      {"pfsense", {1, 1024}},       {"opnsense", {1, 1024}},   {"mikrotik-chr", {1, 1024}},
      {"security-onion", {4, 8192}}, {"kali", {2, 2048}},       {"parrot", {2, 2048}},
      {"ubuntu", {2, 2048}},        {"windows-server", {2, 2048}}, {"oracle-linux", {2, 2048}},
      {"freebsd", {2, 2048}},       {"metasploitable", {2, 2048}},
  };
  if (auto it = table.find(os); it != table.end()) return it->second;
  switch (role) {
    case Role::firewall:
    case Role::router: return {1, 1024};
    case Role::monitor: return {4, 8192};
    default: return {2, 2048};
  }
}

// ---------------------------------------------------------------------------
// Deterministic addressing.
//
// Network i (declaration order) is 10.10.i.0/24; the external network is
// 203.0.113.0/24. Firewalls take .1, .2, ... in attach order; every other
// unpinned interface takes .11, .12, ... in attach order (nodes in
// declaration order, interfaces in declaration order).

inline constexpr Cidr kExternalSubnet{Ipv4(203, 0, 113, 0), 24};
inline constexpr int kMaxNetworks = 256;
inline constexpr std::uint32_t kFirstHostOffset = 11;
inline constexpr std::uint32_t kMaxGateways = 9;

inline Cidr subnet_for(const NetworkSpec& net, int index) {
  if (net.external) return kExternalSubnet;
  return Cidr{Ipv4(10, 10, static_cast<std::uint8_t>(index), 0), 24};
}

// "node/iface" key used for address maps.
inline std::string iface_key(std::string_view node, std::string_view iface) {
  std::string k(node);
  k += '/';
  k += iface;
  return k;
}

struct AddressPlan {
  std::map<std::string, Cidr> subnets;                 // network -> CIDR
  std::map<std::string, Ipv4> addresses;               // node/iface -> address
  std::vector<std::string> exhausted_networks;         // ran out of host slots
};

// Assigns every interface whose network resolves. Interfaces on unknown
// networks are skipped (validation reports them).
inline AddressPlan plan_addresses(const Scenario& s) {
  AddressPlan plan;
  std::map<std::string, std::uint32_t> next_host, next_gateway;
  std::set<std::string> exhausted;
  for (std::size_t i = 0; i < s.networks.size() && i < kMaxNetworks; ++i)
    plan.subnets.emplace(s.networks[i].name, subnet_for(s.networks[i], static_cast<int>(i)));
  for (const auto& node : s.nodes) {
    for (const auto& ifc : node.interfaces) {
      auto sn = plan.subnets.find(ifc.network);
      if (sn == plan.subnets.end()) continue;
      const auto key = iface_key(node.name, ifc.name);
      if (ifc.ip) {
        plan.addresses[key] = *ifc.ip;
        continue;
      }
      if (node.role == Role::firewall) {
        auto& g = next_gateway[ifc.network];
        if (g >= kMaxGateways) {
          exhausted.insert(ifc.network);
          continue;
        }
        plan.addresses[key] = sn->second.host(1 + g++);
      } else {
        auto& h = next_host[ifc.network];
        if (kFirstHostOffset + h >= 255) {
          exhausted.insert(ifc.network);
          continue;
        }
        plan.addresses[key] = sn->second.host(kFirstHostOffset + h++);
      }
    }
  }
  plan.exhausted_networks.assign(exhausted.begin(), exhausted.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Validation.

enum class Severity { error, warning };

// Where a finding points. Indices are declaration positions; -1 = not set.
struct Location {
  int network = -1;
  int node = -1;
  int constraint = -1;
  std::string element;  // "", "interface", "service", "sensor", "rule", "member"
  int index = -1;

  std::string path() const {
    std::string p;
    if (network >= 0) p = "networks[" + std::to_string(network) + "]";
    if (node >= 0) p = "nodes[" + std::to_string(node) + "]";
    if (constraint >= 0) p = "constraints[" + std::to_string(constraint) + "]";
    if (!element.empty()) {
      if (!p.empty()) p += '.';
      p += element;
      if (index >= 0) p += "[" + std::to_string(index) + "]";
    }
    return p.empty() ? "scenario" : p;
  }
};

struct Finding {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  Location where;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return error_count() == 0; }
  std::size_t error_count() const {
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const auto& f) {
      return f.severity == Severity::error;
    }));
  }
  std::vector<Finding> errors() const {
    std::vector<Finding> out;
    for (const auto& f : findings)
      if (f.severity == Severity::error) out.push_back(f);
    return out;
  }
  bool has(std::string_view code) const {
    return std::any_of(findings.begin(), findings.end(), [&](const auto& f) { return f.code == code; });
  }
};

inline bool is_scenario_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

// Identifiers: letters, digits, '_', '-', '.'; must start with a letter or digit.
inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alnum = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  };
  if (!alnum(s.front())) return false;
  return std::all_of(s.begin(), s.end(),
                     [&](char c) { return alnum(c) || c == '_' || c == '-' || c == '.'; });
}

inline ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport rep;
  auto add = [&](Severity sev, std::string code, std::string msg, Location loc) {
    rep.findings.push_back({sev, std::move(code), std::move(msg), std::move(loc)});
  };
  auto err = [&](std::string code, std::string msg, Location loc) {
    add(Severity::error, std::move(code), std::move(msg), std::move(loc));
  };

  if (!is_scenario_name(s.name))
    err("E_BAD_NAME", "scenario name '" + s.name + "' must match [a-z0-9-]+", {});

  // Networks.
  std::set<std::string> net_names;
  std::set<std::string> attached;
  for (const auto& n : s.nodes)
    for (const auto& i : n.interfaces) attached.insert(i.network);
  bool seen_external = false;
  for (std::size_t i = 0; i < s.networks.size(); ++i) {
    const auto& net = s.networks[i];
    Location loc{.network = static_cast<int>(i)};
    if (!is_identifier(net.name)) err("E_BAD_IDENT", "bad network name '" + net.name + "'", loc);
    if (!net_names.insert(net.name).second)
      err("E_DUP_NETWORK", "network '" + net.name + "' declared twice", loc);
    if (net.external) {
      if (seen_external)
        err("E_MULTI_EXTERNAL", "network '" + net.name + "' is a second external network", loc);
      seen_external = true;
    }
    if (static_cast<int>(i) >= kMaxNetworks)
      err("E_TOO_MANY_NETWORKS", "at most 256 networks are addressable", loc);
    if (!attached.count(net.name))
      add(Severity::warning, "W_UNUSED_NETWORK", "no interface attaches to '" + net.name + "'", loc);
  }

  const AddressPlan addr = plan_addresses(s);
  std::map<std::uint32_t, std::string> pinned_owner;
  std::set<std::uint32_t> auto_addrs;
  for (const auto& n : s.nodes)
    for (const auto& ifc : n.interfaces)
      if (!ifc.ip) {
        auto it = addr.addresses.find(iface_key(n.name, ifc.name));
        if (it != addr.addresses.end()) auto_addrs.insert(it->second.value);
      }

  // Nodes.
  std::set<std::string> node_names;
  for (std::size_t ni = 0; ni < s.nodes.size(); ++ni) {
    const auto& node = s.nodes[ni];
    const int nidx = static_cast<int>(ni);
    Location nloc{.node = nidx};
    if (!is_identifier(node.name)) err("E_BAD_IDENT", "bad node name '" + node.name + "'", nloc);
    if (!node_names.insert(node.name).second)
      err("E_DUP_NODE", "node '" + node.name + "' declared twice", nloc);
    if (node.cpu < 1 || node.ram_mb < 1)
      err("E_BAD_RESOURCES", "node '" + node.name + "' needs cpu >= 1 and ram_mb >= 1", nloc);
    const std::size_t min_ifaces = forwards_traffic(node.role) ? 2 : 1;
    if (node.interfaces.size() < min_ifaces)
      err("E_TOO_FEW_IFACES",
          "node '" + node.name + "' (" + std::string(to_string(node.role)) + ") needs at least " +
              std::to_string(min_ifaces) + " interface(s)",
          nloc);

    std::set<std::string> iface_names, iface_nets;
    for (std::size_t ii = 0; ii < node.interfaces.size(); ++ii) {
      const auto& ifc = node.interfaces[ii];
      Location loc{.node = nidx, .element = "interface", .index = static_cast<int>(ii)};
      if (!is_identifier(ifc.name)) err("E_BAD_IDENT", "bad interface name '" + ifc.name + "'", loc);
      if (!iface_names.insert(ifc.name).second)
        err("E_DUP_IFACE", "interface '" + ifc.name + "' declared twice on '" + node.name + "'", loc);
      const NetworkSpec* net = s.find_network(ifc.network);
      if (!net) {
        err("E_UNKNOWN_NET", "interface '" + ifc.name + "' references undeclared network '" +
                                 ifc.network + "'",
            loc);
        continue;
      }
      if (!iface_nets.insert(ifc.network).second)
        err("E_DUP_ATTACH", "node '" + node.name + "' attaches to '" + ifc.network + "' twice", loc);
      if (ifc.ip) {
        const Cidr sn = addr.subnets.at(ifc.network);
        if (!sn.contains(*ifc.ip) || *ifc.ip == sn.network || *ifc.ip == sn.broadcast()) {
          err("E_IP_OUT_OF_SUBNET",
              ifc.ip->to_string() + " is not a host address in " + sn.to_string(), loc);
        } else if (auto [it, fresh] = pinned_owner.emplace(ifc.ip->value, iface_key(node.name, ifc.name));
                   !fresh) {
          err("E_DUP_IP", ifc.ip->to_string() + " already pinned by " + it->second, loc);
        } else if (auto_addrs.count(ifc.ip->value)) {
          err("E_IP_CONFLICT", ifc.ip->to_string() + " collides with an assigned address", loc);
        }
      } else if (std::find(addr.exhausted_networks.begin(), addr.exhausted_networks.end(),
                           ifc.network) != addr.exhausted_networks.end() &&
                 !addr.addresses.count(iface_key(node.name, ifc.name))) {
        err("E_SUBNET_FULL", "no free address on '" + ifc.network + "'", loc);
      }
    }

    std::set<std::uint16_t> ports;
    for (std::size_t si = 0; si < node.services.size(); ++si) {
      const auto& svc = node.services[si];
      Location loc{.node = nidx, .element = "service", .index = static_cast<int>(si)};
      if (svc.port == 0) err("E_BAD_PORT", "service port must be in 1..65535", loc);
      if (!ports.insert(svc.port).second)
        err("E_DUP_PORT", "port " + std::to_string(svc.port) + " used twice on '" + node.name + "'",
            loc);
    }

    if (node.sensor) {
      const auto& sen = *node.sensor;
      Location loc{.node = nidx, .element = "sensor"};
      if (sen.mode == SensorMode::ips && !sen.is_inline())
        err("E_IPS_NOT_INLINE", "ips mode requires inline attachment", loc);
      if (sen.is_inline() && !forwards_traffic(node.role))
        err(sen.mode == SensorMode::ips ? "E_IPS_ROLE" : "E_INLINE_ROLE",
            "inline sensors need a firewall or router host", loc);
      else if (sen.mode == SensorMode::ips && !forwards_traffic(node.role))
        err("E_IPS_ROLE", "ips mode needs a firewall or router host", loc);
      if (sen.tap_network && !s.find_network(*sen.tap_network))
        err("E_TAP_UNKNOWN_NET", "tap references undeclared network '" + *sen.tap_network + "'", loc);
    }

    if (!node.fw_rules.empty() && node.role != Role::firewall)
      add(Severity::warning, "W_RULES_IGNORED", "only firewalls apply filter rules", {.node = nidx});
  }

  // Constraints.
  std::map<std::string, int> group_of;
  for (std::size_t ci = 0; ci < s.constraints.size(); ++ci) {
    const auto& c = s.constraints[ci];
    const int cidx = static_cast<int>(ci);
    if (c.members.size() < 2)
      err("E_SMALL_GROUP", "separate() needs at least two members", {.constraint = cidx});
    std::set<std::string> seen;
    for (std::size_t mi = 0; mi < c.members.size(); ++mi) {
      const auto& m = c.members[mi];
      Location loc{.constraint = cidx, .element = "member", .index = static_cast<int>(mi)};
      if (!s.find_node(m)) {
        err("E_UNKNOWN_NODE", "constraint names undeclared node '" + m + "'", loc);
        continue;
      }
      if (!seen.insert(m).second) {
        err("E_DUP_MEMBER", "'" + m + "' listed twice", loc);
        continue;
      }
      if (auto [it, fresh] = group_of.emplace(m, cidx); !fresh)
        err("E_MULTI_GROUP", "'" + m + "' already belongs to constraints[" +
                                 std::to_string(it->second) + "]",
            loc);
    }
  }
  return rep;
}

}  // namespace rangeforge
