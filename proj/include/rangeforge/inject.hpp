#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/core/rng.hpp"
#include "rangeforge/flow.hpp"
#include "rangeforge/netsim.hpp"
#include "rangeforge/scenario.hpp"
#include "rangeforge/topology.hpp"

namespace rangeforge {

enum class InjectKind { port_scan, ssh_bruteforce, sql_injection, ddos_flood, phishing_mail };

inline std::string_view to_string(InjectKind k) {
  switch (k) {
    case InjectKind::port_scan: return "port_scan";
    case InjectKind::ssh_bruteforce: return "ssh_bruteforce";
    case InjectKind::sql_injection: return "sql_injection";
    case InjectKind::ddos_flood: return "ddos_flood";
    case InjectKind::phishing_mail: return "phishing_mail";
  }
  return "port_scan";
}

inline std::optional<InjectKind> parse_inject_kind(std::string_view s) {
  for (InjectKind k : {InjectKind::port_scan, InjectKind::ssh_bruteforce, InjectKind::sql_injection,
                       InjectKind::ddos_flood, InjectKind::phishing_mail})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ParamSchema {
  std::string name;
  std::string description;
  std::int64_t default_value = 0;
  std::int64_t min = 1;
  std::int64_t max = 0;
};

struct InjectCatalogEntry {
  InjectKind kind;
  std::string tag;                          // canonical payload tag
  std::optional<ServiceKind> service;       // service the target must expose
  std::vector<Role> source_roles;
  std::string description;
  std::vector<ParamSchema> params;

  const ParamSchema* param(std::string_view name) const {
    for (const auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
};

// The closed set of inject kinds. `rate` is flows per tick; flow i of an
// inject is stamped start_tick + i / rate.
inline const std::vector<InjectCatalogEntry>& list_injects() {
  static const std::vector<InjectCatalogEntry> catalog = {
      {InjectKind::port_scan, "port-scan", std::nullopt, {Role::attacker},
       "TCP connect scan, one flow per port",
       {{"port_from", "first port scanned", 1, 1, 65535},
        {"port_to", "last port scanned", 1024, 1, 65535},
        {"rate", "flows per tick", 16, 1, 100000}}},
      {InjectKind::ssh_bruteforce, "ssh-bruteforce", ServiceKind::ssh, {Role::attacker},
       "repeated SSH login attempts",
       {{"attempts", "login attempts", 20, 1, 1000000}, {"rate", "flows per tick", 1, 1, 100000}}},
      {InjectKind::sql_injection, "sql-injection", ServiceKind::http, {Role::attacker},
       "one HTTP request carrying an SQL injection payload", {}},
      {InjectKind::ddos_flood, "ddos", ServiceKind::http, {Role::attacker},
       "HTTP flood from spoofed 198.51.100.0/24 sources",
       {{"count", "flows in the flood", 500, 1, 1000000}, {"rate", "flows per tick", 10, 1, 100000}}},
      {InjectKind::phishing_mail, "phishing", ServiceKind::smtp, {Role::attacker, Role::operator_pc},
       "one SMTP delivery of a phishing mail", {}},
  };
  return catalog;
}

inline const InjectCatalogEntry& catalog_entry(InjectKind k) {
  for (const auto& e : list_injects())
    if (e.kind == k) return e;
  return list_injects().front();
}

struct InjectSpec {
  InjectKind kind = InjectKind::port_scan;
  std::string source_node;
  std::string target_node;
  std::map<std::string, std::int64_t> params;  // missing keys take catalog defaults
  std::uint64_t seed = 0;

  friend bool operator==(const InjectSpec&, const InjectSpec&) = default;
};

struct InjectResult {
  std::string id;
  std::vector<FlowEvent> flows;
  std::map<std::string, std::uint64_t> summary;  // tag -> flow count
};

struct InjectError {
  std::string code;  // E_NO_SERVICE, E_BAD_SOURCE, E_UNKNOWN_NODE, E_BAD_PARAM
  std::string message;
};

inline constexpr Cidr kSpoofRange{Ipv4(198, 51, 100, 0), 24};

// Picks the first attacker as source and the first target exposing the
// required service when either is left empty.
inline InjectSpec fill_defaults(InjectSpec spec, const Scenario& s) {
  const auto& entry = catalog_entry(spec.kind);
  if (spec.source_node.empty()) {
    for (const auto& n : s.nodes)
      if (n.role == Role::attacker) {
        spec.source_node = n.name;
        break;
      }
  }
  if (spec.target_node.empty()) {
    for (const auto& n : s.nodes)
      if (n.role == Role::target && (!entry.service || n.find_service(*entry.service))) {
        spec.target_node = n.name;
        break;
      }
  }
  return spec;
}

// Deterministic flows for an inject: equal (spec, scenario, start_tick) give
// identical lists. Flow ids are 0-based positions; callers renumber them.
inline Result<InjectResult, InjectError> generate(const InjectSpec& spec, const Scenario& s,
                                                  const TopologyGraph& g, Tick start_tick) {
  const auto& entry = catalog_entry(spec.kind);
  const NodeSpec* src = s.find_node(spec.source_node);
  const NodeSpec* dst = s.find_node(spec.target_node);
  if (!src) return InjectError{"E_UNKNOWN_NODE", "unknown source node '" + spec.source_node + "'"};
  if (!dst) return InjectError{"E_UNKNOWN_NODE", "unknown target node '" + spec.target_node + "'"};
  if (std::find(entry.source_roles.begin(), entry.source_roles.end(), src->role) == entry.source_roles.end())
    return InjectError{"E_BAD_SOURCE", "'" + src->name + "' is a " + std::string(to_string(src->role)) +
                                           ", not a valid source for " + std::string(to_string(spec.kind))};
  const ServiceSpec* svc = nullptr;
  if (entry.service) {
    svc = dst->find_service(*entry.service);
    if (!svc)
      return InjectError{"E_NO_SERVICE", "'" + dst->name + "' exposes no " +
                                             std::string(to_string(*entry.service)) + " service"};
  }

  std::map<std::string, std::int64_t> p;
  for (const auto& ps : entry.params) p[ps.name] = ps.default_value;
  for (const auto& [k, v] : spec.params) {
    const ParamSchema* ps = entry.param(k);
    if (!ps)
      return InjectError{"E_BAD_PARAM", "unknown parameter '" + k + "' for " + std::string(to_string(spec.kind))};
    if (v < ps->min || v > ps->max)
      return InjectError{"E_BAD_PARAM", "'" + k + "' must be in " + std::to_string(ps->min) + ".." +
                                            std::to_string(ps->max)};
    p[k] = v;
  }
  if (spec.kind == InjectKind::port_scan && p["port_from"] > p["port_to"])
    return InjectError{"E_BAD_PARAM", "port_from must not exceed port_to"};

  // Addresses on the routed path's first and last switches.
  Ipv4 src_ip = g.primary_address(src->name).value_or(Ipv4{});
  Ipv4 dst_ip = g.primary_address(dst->name).value_or(Ipv4{});
  if (auto path = route_flow(g, src->name, dst->name); path && path->vertices.size() >= 3) {
    const auto& vs = path->vertices;
    const std::string first_net = vs[1].substr(3);
    const std::string last_net = vs[vs.size() - 2].substr(3);
    src_ip = g.address_on(src->name, first_net).value_or(src_ip);
    dst_ip = g.address_on(dst->name, last_net).value_or(dst_ip);
  }

  InjectResult res;
  const std::int64_t rate = p.count("rate") ? p["rate"] : 1;
  auto add = [&](std::uint16_t dport, std::uint16_t sport, Ipv4 sip, std::uint64_t packets,
                 std::uint64_t bytes) {
    FlowEvent f;
    f.id = res.flows.size();
    f.tick = start_tick + static_cast<Tick>(res.flows.size()) / static_cast<Tick>(rate);
    f.src_node = src->name;
    f.dst_node = dst->name;
    f.src_ip = sip;
    f.dst_ip = dst_ip;
    f.proto = Proto::tcp;
    f.src_port = sport;
    f.dst_port = dport;
    f.payload_tags = {entry.tag};
    f.packets = packets;
    f.bytes = bytes;
    res.flows.push_back(std::move(f));
  };
  auto ephemeral = [&](std::size_t i) { return static_cast<std::uint16_t>(49152 + i % 16384); };

  switch (spec.kind) {
    case InjectKind::port_scan:
      for (std::int64_t port = p["port_from"]; port <= p["port_to"]; ++port)
        add(static_cast<std::uint16_t>(port), ephemeral(res.flows.size()), src_ip, 2, 120);
      break;
    case InjectKind::ssh_bruteforce:
      for (std::int64_t i = 0; i < p["attempts"]; ++i)
        add(svc->port, ephemeral(res.flows.size()), src_ip, 12, 2400);
      break;
    case InjectKind::sql_injection:
      add(svc->port, ephemeral(0), src_ip, 6, 1800);
      break;
    case InjectKind::ddos_flood: {
      SplitMix64 gen = keyed_generator(spec.seed, src->name);
      for (std::int64_t i = 0; i < p["count"]; ++i) {
        const std::uint64_t v = gen.next();
        const Ipv4 spoofed = kSpoofRange.host(1 + static_cast<std::uint32_t>(v % 254));
        const auto sport = static_cast<std::uint16_t>(1024 + (v >> 16) % 64512);
        add(svc->port, sport, spoofed, 1, 64);
      }
      break;
    }
    case InjectKind::phishing_mail:
      add(svc->port, ephemeral(0), src_ip, 10, 8000);
      break;
  }
  res.summary[entry.tag] = res.flows.size();
  return res;
}

}  // namespace rangeforge
