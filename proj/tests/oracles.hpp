#pragma once

// Reference implementations used only by tests. Written from the definitions,
// not from the library code, and deliberately naive.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rangeforge.hpp"

namespace oracle {

using namespace rangeforge;

// ---- seeded generator -------------------------------------------------------

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// splitmix64 as published by Vigna: x += golden; mix.
inline std::vector<std::uint64_t> splitmix_stream(std::uint64_t x, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    out.push_back(z ^ (z >> 31));
  }
  return out;
}

// Tick at which a freshly started instance reaches RUNNING: every VM
// completes at 5 + jitter, the phase follows the slowest.
inline std::uint64_t time_to_running(const Scenario& s, std::uint64_t seed) {
  std::uint64_t worst = 0;
  for (const auto& n : s.nodes) {
    const std::uint64_t jitter = splitmix_stream(seed ^ fnv1a(n.name), 1)[0] % 4;
    worst = std::max(worst, 5 + jitter);
  }
  return worst;
}

// ---- rule matching ------------------------------------------------------------

inline bool in_cidr(std::uint32_t ip, const std::optional<Cidr>& c) {
  if (!c) return true;
  for (int bit = 31; bit >= 32 - c->prefix; --bit)
    if (((ip >> bit) & 1u) != ((c->network.value >> bit) & 1u)) return false;
  return true;
}

inline bool port_ok(std::uint16_t p, const PortMatch& m) { return m.any || (m.lo <= p && p <= m.hi); }

// Stateless rule-vs-flow check straight from the matching definition.
inline bool naive_match(const DetectionRule& r, const FlowEvent& f) {
  if (r.rate) return false;
  if (r.proto.proto && *r.proto.proto != f.proto) return false;
  if (!in_cidr(f.src_ip.value, r.src.cidr) || !in_cidr(f.dst_ip.value, r.dst.cidr)) return false;
  if (!port_ok(f.src_port, r.src_port) || !port_ok(f.dst_port, r.dst_port)) return false;
  if (r.tag && std::find(f.payload_tags.begin(), f.payload_tags.end(), *r.tag) == f.payload_tags.end()) return false;
  return true;
}

struct NaiveAlert {
  std::uint64_t flow;
  std::uint32_t sid;
  std::string action;  // pass, drop, downgraded-pass
  auto operator<=>(const NaiveAlert&) const = default;
};

// All (flow, rule) pairs, checked independently.
inline std::vector<NaiveAlert> naive_alerts(const std::vector<DetectionRule>& rules, const std::vector<FlowEvent>& flows,
                                            bool can_drop) {
  std::vector<NaiveAlert> out;
  for (const auto& f : flows)
    for (const auto& r : rules)
      if (naive_match(r, f))
        out.push_back({f.id, r.sid,
                       r.action == RuleAction::alert ? "pass" : (can_drop ? "drop" : "downgraded-pass")});
  std::sort(out.begin(), out.end());
  return out;
}

// ---- windows ------------------------------------------------------------------

// Fires for hit i when the hits for its key in (t_i - W, t_i] number at least
// T and the key has not fired within the last W ticks. Recounted from the
// whole log for every hit.
template <typename Key>
std::vector<std::pair<std::size_t, std::uint64_t>> recount_window(const std::vector<std::pair<Key, Tick>>& log, Tick w,
                                                                  std::uint64_t threshold) {
  std::vector<std::pair<std::size_t, std::uint64_t>> fired;  // (hit index, count)
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& [key, t] = log[i];
    std::uint64_t count = 0;
    for (std::size_t j = 0; j <= i; ++j)
      if (log[j].first == key && log[j].second + w > t && log[j].second <= t) ++count;
    if (count < threshold) continue;
    bool quiet = true;
    for (const auto& [idx, _] : fired)
      if (log[idx].first == key && log[idx].second + w > t) quiet = false;
    if (quiet) fired.push_back({i, count});
  }
  return fired;
}

// ---- routing ----------------------------------------------------------------

// Every simple path from src to dst whose interior node vertices forward;
// the shortest, lexicographically smallest one wins.
inline std::optional<std::vector<std::string>> best_path(const TopologyGraph& g, const std::string& src,
                                                         const std::string& dst) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : g.edges) {
    adj[e.node].push_back(switch_id(e.network));
    adj[switch_id(e.network)].push_back(e.node);
  }
  auto forwards = [&](const std::string& v) {
    for (const auto& vx : g.vertices)
      if (vx.id == v && vx.role) return *vx.role == Role::firewall || *vx.role == Role::router;
    return true;  // switch
  };
  std::optional<std::vector<std::string>> best;
  std::vector<std::string> cur{src};
  std::set<std::string> seen{src};
  std::function<void(const std::string&)> dfs = [&](const std::string& v) {
    if (best && cur.size() > best->size()) return;
    if (v == dst) {
      if (!best || cur.size() < best->size() || (cur.size() == best->size() && cur < *best)) best = cur;
      return;
    }
    if (v != src && !forwards(v)) return;
    for (const auto& w : adj[v]) {
      if (seen.count(w)) continue;
      seen.insert(w);
      cur.push_back(w);
      dfs(w);
      cur.pop_back();
      seen.erase(w);
    }
  };
  if (src == dst) return std::vector<std::string>{src};
  dfs(src);
  return best;
}

// ---- placement ----------------------------------------------------------------

// Tries every host^n assignment.
inline bool brute_force_feasible(const std::vector<VMSpec>& vms, const ClusterSpec& hosts) {
  if (vms.empty()) return true;
  if (hosts.empty()) return false;
  std::vector<std::size_t> a(vms.size(), 0);
  while (true) {
    std::vector<long> cpu(hosts.size(), 0), ram(hosts.size(), 0);
    bool ok = true;
    for (std::size_t i = 0; i < vms.size() && ok; ++i) {
      cpu[a[i]] += vms[i].cpu;
      ram[a[i]] += vms[i].ram_mb;
      for (std::size_t j = 0; j < i; ++j)
        if (a[i] == a[j] && vms[i].anti_affinity_group && vms[i].anti_affinity_group == vms[j].anti_affinity_group)
          ok = false;
    }
    for (std::size_t h = 0; h < hosts.size() && ok; ++h)
      if (cpu[h] > hosts[h].cpu_cores || ram[h] > hosts[h].ram_mb) ok = false;
    if (ok) return true;
    std::size_t k = 0;
    while (k < a.size() && ++a[k] == hosts.size()) a[k++] = 0;
    if (k == a.size()) return false;
  }
}

// ---- random generators ------------------------------------------------------

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::string ident(Rng& rng, const std::string& prefix, int i) {
  static const char* words[] = {"alpha", "bravo", "core", "dmz", "edge", "lab", "ops", "red"};
  return prefix + "-" + words[uniform(rng, 0, 7)] + "_" + std::to_string(i);
}

inline AddrMatch random_addr(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return {};
    case 1: return AddrMatch{Cidr{Ipv4(10, 10, static_cast<std::uint8_t>(uniform(rng, 0, 3)), 0), 24}};
    case 2: return AddrMatch{Cidr{Ipv4(10, 10, 0, 0), 16}};
    default: return AddrMatch{Cidr{Ipv4(10, 10, static_cast<std::uint8_t>(uniform(rng, 0, 3)),
                                        static_cast<std::uint8_t>(uniform(rng, 10, 14))), 32}};
  }
}

inline PortMatch random_port(Rng& rng) {
  switch (uniform(rng, 0, 2)) {
    case 0: return {};
    case 1: return PortMatch::single(static_cast<std::uint16_t>(uniform(rng, 20, 30)));
    default: {
      auto a = static_cast<std::uint16_t>(uniform(rng, 1, 100));
      return PortMatch::range(a, static_cast<std::uint16_t>(a + uniform(rng, 0, 60)));
    }
  }
}

inline ProtoMatch random_proto(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return {};
    case 1: return ProtoMatch{Proto::tcp};
    case 2: return ProtoMatch{Proto::udp};
    default: return ProtoMatch{Proto::icmp};
  }
}

// A structurally valid scenario: networks, a forwarding spine, endpoints,
// services, sensors, rules and constraints, all with legal references.
inline Scenario random_scenario(Rng& rng) {
  Scenario s;
  s.name = "rand-" + std::to_string(uniform(rng, 0, 99999));
  const int nets = uniform(rng, 1, 4);
  const bool ext = uniform(rng, 0, 1) == 1;
  for (int i = 0; i < nets; ++i) s.networks.push_back({ident(rng, "net", i), ext && i == 0});
  auto net = [&] { return s.networks[uniform(rng, 0, nets - 1)].name; };
  const int count = uniform(rng, 1, 7);
  static const char* oses[] = {"ubuntu", "kali", "freebsd", "pfsense", "mikrotik-chr", "custom os", "x\"q"};
  for (int i = 0; i < count; ++i) {
    NodeSpec n;
    n.name = ident(rng, "node", i);
    const bool fwd = nets >= 2 && uniform(rng, 0, 2) == 0;
    n.role = fwd ? (uniform(rng, 0, 1) ? Role::firewall : Role::router)
                 : static_cast<Role>(uniform(rng, 2, 5));
    n.os = oses[uniform(rng, 0, 6)];
    n.cpu = uniform(rng, 1, 8);
    n.ram_mb = 512 * uniform(rng, 1, 16);
    std::vector<std::string> used;
    const int ifaces = fwd ? 2 : 1;
    for (int k = 0; k < ifaces; ++k) {
      std::string nn = k == 0 ? net() : s.networks[(s.network_index(used[0]) + 1) % nets].name;
      used.push_back(nn);
      InterfaceSpec ifc{"if" + std::to_string(k), nn, std::nullopt};
      if (uniform(rng, 0, 5) == 0) {
        // Pin high in the subnet where nothing is auto-assigned.
        const int idx = s.network_index(nn);
        const Cidr c = subnet_for(s.networks[idx], idx);
        ifc.ip = c.host(static_cast<std::uint32_t>(200 + i * 3 + k));
      }
      n.interfaces.push_back(ifc);
    }
    std::set<int> kinds;
    const int svcs = uniform(rng, 0, 3);
    for (int k = 0; k < svcs; ++k) kinds.insert(uniform(rng, 0, 5));
    int port_bump = 0;
    for (int k : kinds) {
      const auto kind = static_cast<ServiceKind>(k);
      n.services.push_back({kind, uniform(rng, 0, 1) ? default_port(kind)
                                                     : static_cast<std::uint16_t>(8000 + port_bump++)});
    }
    if (uniform(rng, 0, 3) == 0) {
      SensorSpec sp{uniform(rng, 0, 1) ? "suricata" : "zeek", SensorMode::ids, net()};
      if (fwd && uniform(rng, 0, 1)) {
        sp.tap_network.reset();
        sp.mode = uniform(rng, 0, 1) ? SensorMode::ips : SensorMode::ids;
      }
      n.sensor = sp;
    }
    if (n.role == Role::firewall) {
      const int rules = uniform(rng, 0, 3);
      for (int k = 0; k < rules; ++k)
        n.fw_rules.push_back({uniform(rng, 0, 1) ? FilterAction::allow : FilterAction::deny, random_proto(rng),
                              random_addr(rng), random_port(rng), random_addr(rng), random_port(rng)});
    }
    s.nodes.push_back(std::move(n));
  }
  // Every network gets at least one attachment to avoid unused-network noise.
  for (const auto& nw : s.networks) {
    bool used = false;
    for (const auto& n : s.nodes)
      for (const auto& i : n.interfaces) used |= i.network == nw.name;
    if (!used) s.nodes.back().interfaces.push_back({"extra" + std::to_string(s.nodes.back().interfaces.size()),
                                                    nw.name, std::nullopt});
  }
  // Disjoint separate() groups.
  std::vector<std::string> names;
  for (const auto& n : s.nodes) names.push_back(n.name);
  std::shuffle(names.begin(), names.end(), rng);
  std::size_t at = 0;
  while (names.size() - at >= 2 && uniform(rng, 0, 1)) {
    const std::size_t k = static_cast<std::size_t>(uniform(rng, 2, static_cast<int>(std::min<std::size_t>(3, names.size() - at))));
    s.constraints.push_back({std::vector<std::string>(names.begin() + at, names.begin() + at + k)});
    at += k;
  }
  return s;
}

inline FlowEvent random_flow(Rng& rng, std::uint64_t id) {
  static const char* tags[] = {"port-scan", "ssh-bruteforce", "sql-injection", "ddos", "phishing", "noise"};
  FlowEvent f;
  f.id = id;
  f.tick = static_cast<Tick>(uniform(rng, 0, 50));
  f.src_node = "a";
  f.dst_node = "b";
  f.src_ip = Ipv4(10, 10, static_cast<std::uint8_t>(uniform(rng, 0, 3)), static_cast<std::uint8_t>(uniform(rng, 10, 14)));
  f.dst_ip = Ipv4(10, 10, static_cast<std::uint8_t>(uniform(rng, 0, 3)), static_cast<std::uint8_t>(uniform(rng, 10, 14)));
  f.proto = static_cast<Proto>(uniform(rng, 0, 2));
  if (f.proto != Proto::icmp) {
    f.src_port = static_cast<std::uint16_t>(uniform(rng, 1, 120));
    f.dst_port = static_cast<std::uint16_t>(uniform(rng, 1, 120));
  }
  const int n = uniform(rng, 0, 2);
  for (int i = 0; i < n; ++i) f.payload_tags.insert(tags[uniform(rng, 0, 5)]);
  return f;
}

inline std::vector<DetectionRule> random_rules(Rng& rng, int n) {
  static const char* tags[] = {"port-scan", "ssh-bruteforce", "sql-injection", "ddos", "phishing"};
  std::vector<DetectionRule> rules;
  for (int i = 0; i < n; ++i) {
    DetectionRule r;
    r.action = uniform(rng, 0, 1) ? RuleAction::alert : RuleAction::drop;
    r.proto = random_proto(rng);
    r.src = random_addr(rng);
    r.src_port = random_port(rng);
    r.dst = random_addr(rng);
    r.dst_port = random_port(rng);
    r.msg = "rule " + std::to_string(i);
    r.sid = static_cast<std::uint32_t>(100 + i * 7 + uniform(rng, 0, 6));
    if (uniform(rng, 0, 1)) r.tag = tags[uniform(rng, 0, 4)];
    rules.push_back(std::move(r));
  }
  std::shuffle(rules.begin(), rules.end(), rng);
  return rules;
}

}  // namespace oracle
