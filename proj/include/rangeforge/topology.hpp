#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/scenario.hpp"

namespace rangeforge {

enum class VertexKind { node, network_switch };

// Switch vertex id for a network: "sw:<network>". Node vertices use the node name.
inline std::string switch_id(std::string_view network) {
  std::string id = "sw:";
  id += network;
  return id;
}

struct Vertex {
  std::string id;
  VertexKind kind = VertexKind::node;
  std::string name;                // node or network name
  std::optional<Role> role;        // nodes only
  bool external = false;           // switches only

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

// One interface attachment: node <-> switch.
struct Edge {
  std::string node;
  std::string iface;
  std::string network;
  Ipv4 ip;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct TopologyGraph {
  std::string scenario;
  std::vector<Vertex> vertices;               // nodes (declaration order), then switches
  std::vector<Edge> edges;                    // attach order
  std::map<std::string, Ipv4> ip_assignments; // "node/iface" -> address
  std::map<std::string, Cidr> subnets;        // network -> CIDR

  friend bool operator==(const TopologyGraph&, const TopologyGraph&) = default;

  const Vertex* find_vertex(std::string_view id) const {
    for (const auto& v : vertices)
      if (v.id == id) return &v;
    return nullptr;
  }
  const Vertex* find_node(std::string_view name) const {
    const Vertex* v = find_vertex(name);
    return v && v->kind == VertexKind::node ? v : nullptr;
  }
  bool is_external(std::string_view network) const {
    const Vertex* v = find_vertex(switch_id(network));
    return v && v->external;
  }
  std::size_t node_count() const {
    return static_cast<std::size_t>(std::count_if(vertices.begin(), vertices.end(), [](const auto& v) {
      return v.kind == VertexKind::node;
    }));
  }
  std::size_t switch_count() const { return vertices.size() - node_count(); }

  // Address of `node` on `network`, if attached.
  std::optional<Ipv4> address_on(std::string_view node, std::string_view network) const {
    for (const auto& e : edges)
      if (e.node == node && e.network == network) return e.ip;
    return std::nullopt;
  }
  // First interface address of `node` (declaration order).
  std::optional<Ipv4> primary_address(std::string_view node) const {
    for (const auto& e : edges)
      if (e.node == node) return e.ip;
    return std::nullopt;
  }
  std::vector<std::string> networks_of(std::string_view node) const {
    std::vector<std::string> out;
    for (const auto& e : edges)
      if (e.node == node) out.push_back(e.network);
    return out;
  }
  std::vector<std::string> nodes_on(std::string_view network) const {
    std::vector<std::string> out;
    for (const auto& e : edges)
      if (e.network == network) out.push_back(e.node);
    return out;
  }
  // Neighbour vertex ids of `id` (node -> switches, switch -> nodes).
  std::vector<std::string> neighbours(std::string_view id) const {
    std::vector<std::string> out;
    const Vertex* v = find_vertex(id);
    if (!v) return out;
    for (const auto& e : edges) {
      if (v->kind == VertexKind::node && e.node == v->name) out.push_back(switch_id(e.network));
      if (v->kind == VertexKind::network_switch && e.network == v->name) out.push_back(e.node);
    }
    return out;
  }
};

class InvalidScenario : public std::invalid_argument {
 public:
  InvalidScenario(const std::string& what, ValidationReport report)
      : std::invalid_argument(what), report_(std::move(report)) {}
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

// Compiles a validated scenario. Throws InvalidScenario when validation has errors.
inline TopologyGraph compile_topology(const Scenario& s) {
  auto report = validate_scenario(s);
  if (!report.ok()) {
    const auto errors = report.errors();
    const auto& first = errors.front();
    throw InvalidScenario("cannot compile '" + s.name + "': " + first.code + " at " +
                              first.where.path() + ": " + first.message,
                          std::move(report));
  }
  const AddressPlan addr = plan_addresses(s);
  TopologyGraph g;
  g.scenario = s.name;
  g.subnets = addr.subnets;
  for (const auto& n : s.nodes)
    g.vertices.push_back({n.name, VertexKind::node, n.name, n.role, false});
  for (const auto& net : s.networks)
    g.vertices.push_back({switch_id(net.name), VertexKind::network_switch, net.name, std::nullopt,
                          net.external});
  for (const auto& n : s.nodes) {
    for (const auto& ifc : n.interfaces) {
      const auto key = iface_key(n.name, ifc.name);
      const Ipv4 ip = addr.addresses.at(key);
      g.ip_assignments.emplace(key, ip);
      g.edges.push_back({n.name, ifc.name, ifc.network, ip});
    }
  }
  return g;
}

}  // namespace rangeforge
