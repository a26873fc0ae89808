#pragma once

// JSON forms of the domain types. Objects use nlohmann::json's sorted keys,
// so dump() output is canonical and byte-comparable.

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "rangeforge/detection.hpp"
#include "rangeforge/dsl.hpp"
#include "rangeforge/inject.hpp"
#include "rangeforge/lifecycle.hpp"
#include "rangeforge/netsim.hpp"
#include "rangeforge/placement.hpp"
#include "rangeforge/scenario.hpp"
#include "rangeforge/topology.hpp"

namespace rangeforge {

using json = nlohmann::json;

namespace detail {

template <typename T, typename F>
T parse_or_throw(const json& j, F&& parse, const char* what) {
  auto v = parse(j.get<std::string>());
  if (!v) throw std::invalid_argument(std::string("bad ") + what + ": " + j.dump());
  return *v;
}

inline Ipv4 ip_from(const json& j) { return parse_or_throw<Ipv4>(j, Ipv4::parse, "ipv4"); }

}  // namespace detail

// --- scenario --------------------------------------------------------------

inline void to_json(json& j, const FilterRule& r) {
  j = json{{"action", to_string(r.action)}, {"proto", r.proto.to_string()},
           {"src", r.src.to_string()},      {"src_port", r.src_port.to_string()},
           {"dst", r.dst.to_string()},      {"dst_port", r.dst_port.to_string()}};
}

inline void to_json(json& j, const Scenario& s) {
  j = json::object();
  j["name"] = s.name;
  j["networks"] = json::array();
  for (const auto& n : s.networks) j["networks"].push_back({{"name", n.name}, {"external", n.external}});
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) {
    json node{{"name", n.name}, {"role", to_string(n.role)}, {"os", n.os}, {"cpu", n.cpu}, {"ram_mb", n.ram_mb}};
    node["interfaces"] = json::array();
    for (const auto& i : n.interfaces) {
      json ij{{"name", i.name}, {"network", i.network}};
      if (i.ip) ij["ip"] = i.ip->to_string();
      node["interfaces"].push_back(ij);
    }
    node["services"] = json::array();
    for (const auto& svc : n.services) node["services"].push_back({{"kind", to_string(svc.kind)}, {"port", svc.port}});
    if (n.sensor) {
      json sj{{"engine", n.sensor->engine}, {"mode", to_string(n.sensor->mode)}};
      sj["attachment"] = n.sensor->tap_network ? json{{"tap", *n.sensor->tap_network}} : json("inline");
      node["sensor"] = sj;
    } else {
      node["sensor"] = nullptr;
    }
    node["fw_rules"] = n.fw_rules;
    node["anti_affinity_group"] = s.anti_affinity_group(n.name) ? json(*s.anti_affinity_group(n.name)) : json(nullptr);
    j["nodes"].push_back(node);
  }
  j["constraints"] = json::array();
  for (const auto& c : s.constraints) j["constraints"].push_back({{"separate", c.members}});
}

inline std::string canonical_json(const Scenario& s) { return json(s).dump(); }

inline json to_json(const ValidationReport& r) {
  json arr = json::array();
  for (const auto& f : r.findings)
    arr.push_back({{"severity", f.severity == Severity::error ? "error" : "warning"},
                   {"code", f.code},
                   {"message", f.message},
                   {"location", f.where.path()}});
  return arr;
}

inline void to_json(json& j, const ParseError& e) {
  j = json{{"code", e.code},
           {"message", e.message},
           {"span", {{"line", e.span.line}, {"column", e.span.column}, {"length", e.span.length}}}};
}

// --- topology --------------------------------------------------------------

inline void to_json(json& j, const TopologyGraph& g) {
  j = json::object();
  j["scenario"] = g.scenario;
  j["vertices"] = json::array();
  for (const auto& v : g.vertices) {
    json vj{{"id", v.id}, {"kind", v.kind == VertexKind::node ? "node" : "switch"}, {"name", v.name}};
    if (v.role) vj["role"] = to_string(*v.role);
    if (v.kind == VertexKind::network_switch) vj["external"] = v.external;
    j["vertices"].push_back(vj);
  }
  j["edges"] = json::array();
  for (const auto& e : g.edges)
    j["edges"].push_back({{"node", e.node}, {"iface", e.iface}, {"network", e.network}, {"ip", e.ip.to_string()}});
  j["ip_assignments"] = json::object();
  for (const auto& [k, ip] : g.ip_assignments) j["ip_assignments"][k] = ip.to_string();
  j["subnets"] = json::object();
  for (const auto& [k, c] : g.subnets) j["subnets"][k] = c.to_string();
}

inline std::string canonical_json(const TopologyGraph& g) { return json(g).dump(); }

// --- placement -------------------------------------------------------------

inline void to_json(json& j, const HostSpec& h) {
  j = json{{"id", h.id}, {"cpu_cores", h.cpu_cores}, {"ram_mb", h.ram_mb}};
}
inline void from_json(const json& j, HostSpec& h) {
  h.id = j.at("id").get<std::string>();
  h.cpu_cores = j.at("cpu_cores").get<int>();
  h.ram_mb = j.at("ram_mb").get<int>();
  if (h.id.empty() || h.cpu_cores < 1 || h.ram_mb < 1)
    throw std::invalid_argument("host needs an id and positive cpu_cores/ram_mb");
}

// `{"hosts": [{id, cpu_cores, ram_mb}, ...]}`
inline ClusterSpec cluster_from_json(const json& j) {
  ClusterSpec c = j.at("hosts").get<ClusterSpec>();
  std::set<std::string> ids;
  for (const auto& h : c)
    if (!ids.insert(h.id).second) throw std::invalid_argument("duplicate host id '" + h.id + "'");
  if (c.empty()) throw std::invalid_argument("cluster has no hosts");
  return c;
}
inline json cluster_to_json(const ClusterSpec& c) { return json{{"hosts", c}}; }

inline void to_json(json& j, const PlacementPlan& p) {
  j = json::object();
  j["assignments"] = p.assignments;
  j["residuals"] = json::array();
  for (const auto& r : p.residuals) j["residuals"].push_back({{"host", r.host}, {"cpu", r.cpu}, {"ram_mb", r.ram_mb}});
}
inline void from_json(const json& j, PlacementPlan& p) {
  p.assignments = j.at("assignments").get<std::map<std::string, std::string>>();
  p.residuals.clear();
  for (const auto& r : j.at("residuals"))
    p.residuals.push_back({r.at("host").get<std::string>(), r.at("cpu").get<int>(), r.at("ram_mb").get<int>()});
}

// --- lifecycle -------------------------------------------------------------

inline void to_json(json& j, const VmRecord& v) {
  j = json{{"node", v.node},
           {"state", to_string(v.state)},
           {"ready_at", v.ready_at ? json(*v.ready_at) : json(nullptr)},
           {"create_requested", v.create_requested},
           {"draws", v.draws}};
}
inline void from_json(const json& j, VmRecord& v) {
  v.node = j.at("node").get<std::string>();
  v.state = detail::parse_or_throw<VmState>(j.at("state"), parse_vm_state, "vm state");
  v.ready_at = j.at("ready_at").is_null() ? std::nullopt : std::optional<Tick>(j.at("ready_at").get<Tick>());
  v.create_requested = j.at("create_requested").get<bool>();
  v.draws = j.at("draws").get<std::uint64_t>();
}

inline void to_json(json& j, const InstanceState& s) {
  j = json{{"id", s.id},
           {"scenario", s.scenario},
           {"phase", to_string(s.phase)},
           {"vms", s.vms},
           {"clock", s.clock},
           {"seed", s.seed},
           {"destroy_at", s.destroy_at ? json(*s.destroy_at) : json(nullptr)},
           {"plan", s.plan}};
}
inline void from_json(const json& j, InstanceState& s) {
  s.id = j.at("id").get<std::string>();
  s.scenario = j.at("scenario").get<std::string>();
  s.phase = detail::parse_or_throw<Phase>(j.at("phase"), parse_phase, "phase");
  s.vms = j.at("vms").get<std::vector<VmRecord>>();
  s.clock = j.at("clock").get<Tick>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.destroy_at = j.at("destroy_at").is_null() ? std::nullopt : std::optional<Tick>(j.at("destroy_at").get<Tick>());
  s.plan = j.at("plan").get<PlacementPlan>();
}

// Operator-facing view: phase, clock and per-VM state.
inline json instance_view(const InstanceState& s) {
  json vms = json::object();
  for (const auto& v : s.vms) vms[v.node] = to_string(v.state);
  return json{{"id", s.id},       {"scenario", s.scenario}, {"phase", to_string(s.phase)},
              {"clock", s.clock}, {"seed", s.seed},         {"vm_states", vms}};
}

inline void to_json(json& j, const LifecycleEvent& e) {
  j = json{{"tick", e.tick}, {"subject", e.subject}, {"from", e.from_state}, {"to", e.to_state}, {"cause", to_string(e.cause)}};
}

// --- traffic & detection ---------------------------------------------------

inline void to_json(json& j, const FlowEvent& f) {
  j = json{{"id", f.id},
           {"tick", f.tick},
           {"src_node", f.src_node},
           {"dst_node", f.dst_node},
           {"src_ip", f.src_ip.to_string()},
           {"dst_ip", f.dst_ip.to_string()},
           {"proto", to_string(f.proto)},
           {"src_port", f.src_port},
           {"dst_port", f.dst_port},
           {"payload_tags", f.payload_tags},
           {"packets", f.packets},
           {"bytes", f.bytes}};
}
inline void from_json(const json& j, FlowEvent& f) {
  f.id = j.at("id").get<std::uint64_t>();
  f.tick = j.at("tick").get<Tick>();
  f.src_node = j.at("src_node").get<std::string>();
  f.dst_node = j.at("dst_node").get<std::string>();
  f.src_ip = detail::ip_from(j.at("src_ip"));
  f.dst_ip = detail::ip_from(j.at("dst_ip"));
  f.proto = detail::parse_or_throw<Proto>(j.at("proto"), parse_proto, "proto");
  f.src_port = j.at("src_port").get<std::uint16_t>();
  f.dst_port = j.at("dst_port").get<std::uint16_t>();
  f.payload_tags = j.at("payload_tags").get<std::set<std::string>>();
  f.packets = j.at("packets").get<std::uint64_t>();
  f.bytes = j.at("bytes").get<std::uint64_t>();
}

inline void to_json(json& j, const AlertEvent& a) {
  j = json{{"tick", a.tick}, {"sid", a.sid}, {"msg", a.msg}, {"flow_id", a.flow_id}, {"sensor", a.sensor},
           {"action_taken", to_string(a.action_taken)}};
}
inline void to_json(json& j, const AnomalyEvent& a) {
  j = json{{"tick", a.tick}, {"dst_ip", a.dst_ip.to_string()}, {"dst_port", a.dst_port},
           {"observed_rate", a.observed_rate}, {"threshold", a.threshold}, {"window", a.window}};
}
inline void to_json(json& j, const DeliveryEvent& d) {
  j = json{{"tick", d.tick}, {"flow_id", d.flow_id}, {"path", d.path}};
}
inline void to_json(json& j, const DropEvent& d) {
  j = json{{"tick", d.tick}, {"flow_id", d.flow_id}, {"stage", to_string(d.stage)}, {"at", d.at},
           {"rule_index", d.rule_index ? json(*d.rule_index) : json("default-policy")}, {"sids", d.sids}};
  if (d.stage != DropStage::filter) j.erase("rule_index");
}

template <typename Key>
json window_to_json(const SlidingWindow<Key>& w, auto&& key_to_json) {
  json hits = json::array();
  for (const auto& [k, q] : w.hits)
    if (!q.empty()) hits.push_back({{"key", key_to_json(k)}, {"ticks", std::vector<Tick>(q.begin(), q.end())}});
  json fired = json::array();
  for (const auto& [k, t] : w.last_fired) fired.push_back({{"key", key_to_json(k)}, {"tick", t}});
  return json{{"hits", hits}, {"last_fired", fired}};
}

template <typename Key>
SlidingWindow<Key> window_from_json(const json& j, auto&& key_from_json) {
  SlidingWindow<Key> w;
  for (const auto& h : j.at("hits")) {
    const auto ticks = h.at("ticks").get<std::vector<Tick>>();
    w.hits[key_from_json(h.at("key"))] = std::deque<Tick>(ticks.begin(), ticks.end());
  }
  for (const auto& f : j.at("last_fired")) w.last_fired[key_from_json(f.at("key"))] = f.at("tick").get<Tick>();
  return w;
}

inline json fabric_state_to_json(const FabricState& st) {
  json sensors = json::object();
  for (const auto& [name, w] : st.sensors)
    sensors[name] = window_to_json(w.rate, [](const RateKey& k) {
      return json::array({std::get<0>(k), std::get<1>(k), std::get<2>(k)});
    });
  auto endpoint = [](const EndpointKey& k) { return json::array({k.first, k.second}); };
  return json{{"sensors", sensors},
              {"monitor", {{"threshold", st.monitor.threshold},
                           {"window", st.monitor.window},
                           {"counts", window_to_json(st.monitor.counts, endpoint)}}}};
}

inline FabricState fabric_state_from_json(const json& j) {
  FabricState st;
  for (const auto& [name, w] : j.at("sensors").items())
    st.sensors[name].rate = window_from_json<RateKey>(w, [](const json& k) {
      return RateKey{k.at(0).get<std::uint32_t>(), k.at(1).get<std::uint32_t>(), k.at(2).get<std::uint16_t>()};
    });
  const auto& m = j.at("monitor");
  st.monitor.threshold = m.at("threshold").get<std::uint64_t>();
  st.monitor.window = m.at("window").get<Tick>();
  st.monitor.counts = window_from_json<EndpointKey>(m.at("counts"), [](const json& k) {
    return EndpointKey{k.at(0).get<std::uint32_t>(), k.at(1).get<std::uint16_t>()};
  });
  return st;
}

// --- injects ---------------------------------------------------------------

inline json to_json(const InjectCatalogEntry& e) {
  json params = json::array();
  for (const auto& p : e.params)
    params.push_back({{"name", p.name}, {"description", p.description}, {"default", p.default_value},
                      {"min", p.min}, {"max", p.max}});
  json roles = json::array();
  for (Role r : e.source_roles) roles.push_back(to_string(r));
  return json{{"kind", to_string(e.kind)},
              {"tag", e.tag},
              {"target_service", e.service ? json(to_string(*e.service)) : json(nullptr)},
              {"source_roles", roles},
              {"description", e.description},
              {"params", params}};
}

// API body: {kind, source?, target?, seed?, params?: {name: int}}
inline InjectSpec inject_spec_from_json(const json& j) {
  InjectSpec spec;
  spec.kind = detail::parse_or_throw<InjectKind>(j.at("kind"), parse_inject_kind, "inject kind");
  if (j.contains("source")) spec.source_node = j.at("source").get<std::string>();
  if (j.contains("target")) spec.target_node = j.at("target").get<std::string>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("params")) spec.params = j.at("params").get<std::map<std::string, std::int64_t>>();
  return spec;
}

inline json to_json(const InjectSpec& s) {
  return json{{"kind", to_string(s.kind)}, {"source", s.source_node}, {"target", s.target_node},
              {"seed", s.seed}, {"params", s.params}};
}

}  // namespace rangeforge
