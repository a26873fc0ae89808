#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/detection.hpp"
#include "rangeforge/flow.hpp"
#include "rangeforge/scenario.hpp"
#include "rangeforge/topology.hpp"

namespace rangeforge {

struct FlowPath {
  std::vector<std::string> vertices;            // src node, switch, node, switch, ..., dst node
  std::vector<std::string> traversed_firewalls;  // intermediate firewall nodes, in order

  friend bool operator==(const FlowPath&, const FlowPath&) = default;
};

enum class RouteFailure { unreachable, unknown_node };

// Shortest path by hop count. Only firewalls and routers forward, so every
// intermediate node vertex is one of those. Among equal-length paths the
// lexicographically smallest vertex-id sequence wins.
inline Result<FlowPath, RouteFailure> route_flow(const TopologyGraph& g, std::string_view src,
                                                 std::string_view dst) {
  const Vertex* s = g.find_node(src);
  const Vertex* d = g.find_node(dst);
  if (!s || !d) return RouteFailure::unknown_node;
  FlowPath path;
  if (src == dst) {
    path.vertices.emplace_back(src);
    return path;
  }
  auto transit = [&](const std::string& id) {
    const Vertex* v = g.find_vertex(id);
    return v->kind == VertexKind::network_switch || (v->role && forwards_traffic(*v->role));
  };
  // Distances to dst over vertices that may sit on a path.
  std::map<std::string, std::size_t> dist;
  std::deque<std::string> queue;
  dist[d->id] = 0;
  queue.push_back(d->id);
  while (!queue.empty()) {
    const std::string u = queue.front();
    queue.pop_front();
    if (u != d->id && !transit(u)) continue;
    for (const auto& w : g.neighbours(u)) {
      if (dist.count(w)) continue;
      dist[w] = dist[u] + 1;
      queue.push_back(w);
    }
  }
  if (!dist.count(s->id)) return RouteFailure::unreachable;
  std::string cur = s->id;
  path.vertices.push_back(cur);
  while (cur != d->id) {
    const std::size_t want = dist[cur] - 1;
    std::optional<std::string> best;
    for (const auto& w : g.neighbours(cur)) {
      auto it = dist.find(w);
      if (it == dist.end() || it->second != want) continue;
      if (w != d->id && !transit(w)) continue;
      if (!best || w < *best) best = w;
    }
    cur = *best;
    path.vertices.push_back(cur);
  }
  for (std::size_t i = 1; i + 1 < path.vertices.size(); ++i) {
    const Vertex* v = g.find_vertex(path.vertices[i]);
    if (v->kind == VertexKind::node && v->role == Role::firewall) path.traversed_firewalls.push_back(v->id);
  }
  return path;
}

inline Result<FlowPath, RouteFailure> route_flow(const TopologyGraph& g, const FlowEvent& f) {
  return route_flow(g, f.src_node, f.dst_node);
}

// ---------------------------------------------------------------------------
// Packet filtering.

using FilterRulesets = std::map<std::string, std::vector<FilterRule>>;

inline bool filter_matches(const FilterRule& r, const FlowEvent& f) {
  return r.proto.matches(f.proto) && r.src.matches(f.src_ip) && r.dst.matches(f.dst_ip) &&
         r.src_port.matches(f.src_port) && r.dst_port.matches(f.dst_port);
}

struct Delivered {
  friend bool operator==(const Delivered&, const Delivered&) = default;
};
struct Filtered {
  std::string firewall;
  std::optional<std::size_t> rule_index;  // nullopt = default policy
  friend bool operator==(const Filtered&, const Filtered&) = default;
};
using FilterVerdict = std::variant<Delivered, Filtered>;

// Decision of one firewall: first matching rule, else deny when the flow
// arrived through an external network and allow otherwise.
inline std::optional<Filtered> filter_at(const TopologyGraph& g, const FlowPath& path, std::size_t pos,
                                         const FlowEvent& f, const FilterRulesets& rulesets) {
  const std::string& fw = path.vertices[pos];
  auto it = rulesets.find(fw);
  if (it != rulesets.end()) {
    const auto& rules = it->second;
    for (std::size_t i = 0; i < rules.size(); ++i)
      if (filter_matches(rules[i], f)) {
        if (rules[i].action == FilterAction::deny) return Filtered{fw, i};
        return std::nullopt;
      }
  }
  const Vertex* ingress = g.find_vertex(path.vertices[pos - 1]);
  if (ingress && ingress->external) return Filtered{fw, std::nullopt};
  return std::nullopt;
}

// Earliest filtering firewall on the path decides.
inline FilterVerdict apply_filters(const TopologyGraph& g, const FlowPath& path, const FlowEvent& f,
                                   const FilterRulesets& rulesets) {
  for (std::size_t i = 1; i + 1 < path.vertices.size(); ++i) {
    const Vertex* v = g.find_vertex(path.vertices[i]);
    if (v->kind != VertexKind::node || v->role != Role::firewall) continue;
    if (auto f2 = filter_at(g, path, i, f, rulesets)) return *f2;
  }
  return Delivered{};
}

// ---------------------------------------------------------------------------
// Per-tick pipeline.

struct DeliveryEvent {
  Tick tick = 0;
  std::uint64_t flow_id = 0;
  std::vector<std::string> path;
  friend bool operator==(const DeliveryEvent&, const DeliveryEvent&) = default;
};

enum class DropStage { unreachable, filter, ips };

inline std::string_view to_string(DropStage s) {
  switch (s) {
    case DropStage::unreachable: return "unreachable";
    case DropStage::filter: return "filter";
    case DropStage::ips: return "ips";
  }
  return "filter";
}

struct DropEvent {
  Tick tick = 0;
  std::uint64_t flow_id = 0;
  DropStage stage = DropStage::filter;
  std::string at;                         // firewall or sensor node; empty when unreachable
  std::optional<std::size_t> rule_index;  // filter stage; nullopt = default policy
  std::vector<std::uint32_t> sids;        // ips stage: matching drop rules
  friend bool operator==(const DropEvent&, const DropEvent&) = default;
};

using NetEvent = std::variant<DeliveryEvent, DropEvent, AlertEvent, AnomalyEvent>;

struct SensorPlacement {
  std::string node;
  SensorSpec spec;

  SensorRef ref() const { return {node, spec.mode, spec.is_inline()}; }
};

// Read-only description of one instance's fabric.
struct Fabric {
  TopologyGraph graph;
  FilterRulesets filters;               // firewall node -> ordered rules
  std::vector<SensorPlacement> sensors; // node declaration order
  Ruleset ruleset;                      // applied by every sensor
  bool monitor_enabled = true;

  static Fabric from_scenario(const Scenario& s, Ruleset rules) {
    Fabric fab;
    fab.graph = compile_topology(s);
    for (const auto& n : s.nodes) {
      if (n.role == Role::firewall) fab.filters[n.name] = n.fw_rules;
      if (n.sensor) fab.sensors.push_back({n.name, *n.sensor});
    }
    fab.ruleset = std::move(rules);
    return fab;
  }
};

// Mutable per-instance detection state.
struct FabricState {
  std::map<std::string, SensorWindows> sensors;
  MonitorState monitor;
  friend bool operator==(const FabricState&, const FabricState&) = default;
};

namespace detail {

inline void run_sensor(const SensorPlacement& sp, const Ruleset& rules, const FlowEvent& f, Tick tick,
                       FabricState& st, std::vector<NetEvent>& out, bool& dropped) {
  auto [windows, verdict] = evaluate(sp.ref(), rules, f, tick, std::move(st.sensors[sp.node]));
  st.sensors[sp.node] = std::move(windows);
  for (auto& a : verdict.alerts) out.emplace_back(std::move(a));
  if (verdict.drop) {
    DropEvent d{tick, f.id, DropStage::ips, sp.node, std::nullopt, {}};
    for (const auto& v : out)
      if (auto* a = std::get_if<AlertEvent>(&v); a && a->flow_id == f.id && a->sensor == sp.node &&
                                                 a->action_taken == ActionTaken::drop)
        d.sids.push_back(a->sid);
    out.emplace_back(std::move(d));
    dropped = true;
  }
}

}  // namespace detail

// One flow through the fabric: monitor, then along the path: tap sensors on
// each switch, filter and inline sensor at each forwarding node; finally
// delivery. Events come out in that order.
inline std::vector<NetEvent> process_flow(const Fabric& fab, FabricState& st, const FlowEvent& f, Tick tick) {
  std::vector<NetEvent> out;
  if (fab.monitor_enabled) {
    auto [mon, anomaly] = evaluate_window(std::move(st.monitor), f);
    st.monitor = std::move(mon);
    if (anomaly) out.emplace_back(*anomaly);
  }
  auto routed = route_flow(fab.graph, f);
  if (!routed) {
    out.emplace_back(DropEvent{tick, f.id, DropStage::unreachable, {}, std::nullopt, {}});
    return out;
  }
  const FlowPath& path = routed.value();
  for (std::size_t i = 1; i < path.vertices.size(); ++i) {
    const Vertex* v = fab.graph.find_vertex(path.vertices[i]);
    const bool last = i + 1 == path.vertices.size();
    if (v->kind == VertexKind::network_switch) {
      for (const auto& sp : fab.sensors) {
        if (sp.spec.tap_network != v->name) continue;
        bool ignored = false;
        detail::run_sensor(sp, fab.ruleset, f, tick, st, out, ignored);
      }
      continue;
    }
    if (last || !v->role || !forwards_traffic(*v->role)) continue;
    if (*v->role == Role::firewall) {
      if (auto blocked = filter_at(fab.graph, path, i, f, fab.filters)) {
        out.emplace_back(DropEvent{tick, f.id, DropStage::filter, blocked->firewall, blocked->rule_index, {}});
        return out;
      }
    }
    for (const auto& sp : fab.sensors) {
      if (sp.node != v->name || !sp.spec.is_inline()) continue;
      bool dropped = false;
      detail::run_sensor(sp, fab.ruleset, f, tick, st, out, dropped);
      if (dropped) return out;
    }
  }
  out.emplace_back(DeliveryEvent{tick, f.id, path.vertices});
  return out;
}

struct NetError {
  std::string code;
  std::string message;
};

// Processes a batch of flows in submission order. Only a RUNNING instance
// carries traffic.
inline Result<std::vector<NetEvent>, NetError> tick_network(Phase phase, const Fabric& fab, FabricState& st,
                                                            const std::vector<FlowEvent>& flows, Tick tick) {
  if (phase != Phase::running)
    return NetError{"E_NOT_RUNNING", "instance is " + std::string(to_string(phase)) + ", not RUNNING"};
  std::vector<NetEvent> out;
  for (const auto& f : flows) {
    auto ev = process_flow(fab, st, f, tick);
    out.insert(out.end(), std::make_move_iterator(ev.begin()), std::make_move_iterator(ev.end()));
  }
  return out;
}

}  // namespace rangeforge
