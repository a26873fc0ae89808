#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/scenario.hpp"

namespace rangeforge {

struct HostSpec {
  std::string id;
  int cpu_cores = 0;
  int ram_mb = 0;

  friend bool operator==(const HostSpec&, const HostSpec&) = default;
};

using ClusterSpec = std::vector<HostSpec>;

struct VMSpec {
  std::string id;
  int cpu = 1;
  int ram_mb = 1;
  std::optional<std::string> anti_affinity_group;

  friend bool operator==(const VMSpec&, const VMSpec&) = default;
};

struct HostResidual {
  std::string host;
  int cpu = 0;
  int ram_mb = 0;

  friend bool operator==(const HostResidual&, const HostResidual&) = default;
};

struct PlacementPlan {
  std::map<std::string, std::string> assignments;  // vm id -> host id
  std::vector<HostResidual> residuals;             // cluster order

  friend bool operator==(const PlacementPlan&, const PlacementPlan&) = default;
};

enum class BindingConstraint { capacity, anti_affinity };

inline std::string_view to_string(BindingConstraint b) {
  return b == BindingConstraint::capacity ? "capacity" : "anti-affinity";
}

struct Infeasible {
  BindingConstraint binding = BindingConstraint::capacity;
  std::string detail;
};

inline constexpr std::size_t kExactSearchLimit = 12;

// One VM per scenario node, carrying the node's anti-affinity group.
inline std::vector<VMSpec> vms_for(const Scenario& s) {
  std::vector<VMSpec> out;
  out.reserve(s.nodes.size());
  for (const auto& n : s.nodes) out.push_back({n.name, n.cpu, n.ram_mb, s.anti_affinity_group(n.name)});
  return out;
}

// True iff every VM is assigned to exactly one known host, no host is
// overcommitted on cpu or ram, no two members of an anti-affinity group share
// a host, and the recorded residuals match.
inline bool verify_plan(const PlacementPlan& plan, const std::vector<VMSpec>& vms,
                        const ClusterSpec& cluster) {
  std::map<std::string, std::pair<long, long>> used;
  for (const auto& h : cluster) {
    if (used.count(h.id)) return false;
    used[h.id] = {0, 0};
  }
  if (plan.assignments.size() != vms.size()) return false;
  std::set<std::pair<std::string, std::string>> group_host;
  std::set<std::string> seen;
  for (const auto& vm : vms) {
    if (!seen.insert(vm.id).second) return false;
    auto it = plan.assignments.find(vm.id);
    if (it == plan.assignments.end()) return false;
    auto u = used.find(it->second);
    if (u == used.end()) return false;
    u->second.first += vm.cpu;
    u->second.second += vm.ram_mb;
    if (vm.anti_affinity_group && !group_host.emplace(*vm.anti_affinity_group, it->second).second)
      return false;
  }
  if (plan.residuals.size() != cluster.size()) return false;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const auto& h = cluster[i];
    const auto [cpu, ram] = used[h.id];
    if (cpu > h.cpu_cores || ram > h.ram_mb) return false;
    const auto& r = plan.residuals[i];
    if (r.host != h.id || r.cpu != h.cpu_cores - cpu || r.ram_mb != h.ram_mb - ram) return false;
  }
  return true;
}

namespace detail {

struct HostLoad {
  int cpu = 0;
  int ram = 0;
  std::set<std::string> groups;
};

inline bool fits(const VMSpec& vm, const HostSpec& h, const HostLoad& load) {
  if (load.cpu + vm.cpu > h.cpu_cores || load.ram + vm.ram_mb > h.ram_mb) return false;
  return !vm.anti_affinity_group || !load.groups.count(*vm.anti_affinity_group);
}

inline PlacementPlan build_plan(const std::vector<VMSpec>& vms, const ClusterSpec& cluster,
                                const std::vector<int>& host_of) {
  PlacementPlan plan;
  std::vector<HostLoad> load(cluster.size());
  for (std::size_t i = 0; i < vms.size(); ++i) {
    plan.assignments[vms[i].id] = cluster[host_of[i]].id;
    load[host_of[i]].cpu += vms[i].cpu;
    load[host_of[i]].ram += vms[i].ram_mb;
  }
  for (std::size_t h = 0; h < cluster.size(); ++h)
    plan.residuals.push_back(
        {cluster[h].id, cluster[h].cpu_cores - load[h].cpu, cluster[h].ram_mb - load[h].ram});
  return plan;
}

// First-fit decreasing: ram desc, cpu desc, id asc; hosts in declaration order.
inline std::vector<std::size_t> ffd_order(const std::vector<VMSpec>& vms) {
  std::vector<std::size_t> order(vms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = vms[a];
    const auto& y = vms[b];
    if (x.ram_mb != y.ram_mb) return x.ram_mb > y.ram_mb;
    if (x.cpu != y.cpu) return x.cpu > y.cpu;
    return x.id < y.id;
  });
  return order;
}

inline std::optional<std::vector<int>> first_fit_decreasing(const std::vector<VMSpec>& vms,
                                                            const ClusterSpec& cluster) {
  std::vector<HostLoad> load(cluster.size());
  std::vector<int> host_of(vms.size(), -1);
  for (std::size_t idx : ffd_order(vms)) {
    const auto& vm = vms[idx];
    bool placed = false;
    for (std::size_t h = 0; h < cluster.size() && !placed; ++h) {
      if (!fits(vm, cluster[h], load[h])) continue;
      load[h].cpu += vm.cpu;
      load[h].ram += vm.ram_mb;
      if (vm.anti_affinity_group) load[h].groups.insert(*vm.anti_affinity_group);
      host_of[idx] = static_cast<int>(h);
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  return host_of;
}

// Exact search used when FFD fails. VMs in FFD order; hosts whose original
// capacity and current load are indistinguishable are tried once; branches
// whose remaining demand exceeds the remaining aggregate capacity are cut.
class ExactPlacer {
 public:
  ExactPlacer(const std::vector<VMSpec>& vms, const ClusterSpec& cluster)
      : vms_(vms), cluster_(cluster), order_(ffd_order(vms)), load_(cluster.size()),
        host_of_(vms.size(), -1) {
    suffix_cpu_.assign(order_.size() + 1, 0);
    suffix_ram_.assign(order_.size() + 1, 0);
    for (std::size_t k = order_.size(); k-- > 0;) {
      suffix_cpu_[k] = suffix_cpu_[k + 1] + vms_[order_[k]].cpu;
      suffix_ram_[k] = suffix_ram_[k + 1] + vms_[order_[k]].ram_mb;
    }
  }

  std::optional<std::vector<int>> run() {
    if (search(0)) return host_of_;
    return std::nullopt;
  }

 private:
  bool search(std::size_t k) {
    if (k == order_.size()) return true;
    long free_cpu = 0, free_ram = 0;
    for (std::size_t h = 0; h < cluster_.size(); ++h) {
      free_cpu += cluster_[h].cpu_cores - load_[h].cpu;
      free_ram += cluster_[h].ram_mb - load_[h].ram;
    }
    if (free_cpu < suffix_cpu_[k] || free_ram < suffix_ram_[k]) return false;

    const std::size_t idx = order_[k];
    const auto& vm = vms_[idx];
    for (std::size_t h = 0; h < cluster_.size(); ++h) {
      if (!fits(vm, cluster_[h], load_[h]) || equivalent_to_earlier(h)) continue;
      load_[h].cpu += vm.cpu;
      load_[h].ram += vm.ram_mb;
      if (vm.anti_affinity_group) load_[h].groups.insert(*vm.anti_affinity_group);
      host_of_[idx] = static_cast<int>(h);
      if (search(k + 1)) return true;
      load_[h].cpu -= vm.cpu;
      load_[h].ram -= vm.ram_mb;
      if (vm.anti_affinity_group) load_[h].groups.erase(*vm.anti_affinity_group);
      host_of_[idx] = -1;
    }
    return false;
  }

  bool equivalent_to_earlier(std::size_t h) const {
    for (std::size_t e = 0; e < h; ++e) {
      if (cluster_[e].cpu_cores == cluster_[h].cpu_cores && cluster_[e].ram_mb == cluster_[h].ram_mb &&
          load_[e].cpu == load_[h].cpu && load_[e].ram == load_[h].ram &&
          load_[e].groups == load_[h].groups)
        return true;
    }
    return false;
  }

  const std::vector<VMSpec>& vms_;
  const ClusterSpec& cluster_;
  std::vector<std::size_t> order_;
  std::vector<HostLoad> load_;
  std::vector<int> host_of_;
  std::vector<long> suffix_cpu_, suffix_ram_;
};

inline std::vector<VMSpec> without_groups(std::vector<VMSpec> vms) {
  for (auto& v : vms) v.anti_affinity_group.reset();
  return vms;
}

inline Infeasible diagnose(const std::vector<VMSpec>& vms, const ClusterSpec& cluster) {
  std::map<std::string, std::size_t> group_sizes;
  for (const auto& v : vms)
    if (v.anti_affinity_group) ++group_sizes[*v.anti_affinity_group];
  for (const auto& [g, n] : group_sizes)
    if (n > cluster.size())
      return {BindingConstraint::anti_affinity,
              "group '" + g + "' has " + std::to_string(n) + " members but the cluster has " +
                  std::to_string(cluster.size()) + " host(s)"};
  for (const auto& v : vms) {
    bool any = false;
    for (const auto& h : cluster) any = any || (v.cpu <= h.cpu_cores && v.ram_mb <= h.ram_mb);
    if (!any) return {BindingConstraint::capacity, "vm '" + v.id + "' fits on no host"};
  }
  if (!group_sizes.empty()) {
    const auto relaxed = without_groups(vms);
    const bool relaxed_ok = first_fit_decreasing(relaxed, cluster).has_value() ||
                            (relaxed.size() <= kExactSearchLimit &&
                             ExactPlacer(relaxed, cluster).run().has_value());
    if (relaxed_ok)
      return {BindingConstraint::anti_affinity,
              "capacity suffices but anti-affinity groups cannot be separated"};
  }
  return {BindingConstraint::capacity, "insufficient cpu/ram to place all vms"};
}

}  // namespace detail

// Places VMs on hosts. First-fit decreasing, then (for <= 12 VMs) an exact
// search before declaring the instance infeasible.
inline Result<PlacementPlan, Infeasible> plan(const std::vector<VMSpec>& vms,
                                              const ClusterSpec& cluster) {
  if (auto ffd = detail::first_fit_decreasing(vms, cluster))
    return detail::build_plan(vms, cluster, *ffd);
  if (vms.size() <= kExactSearchLimit) {
    if (auto exact = detail::ExactPlacer(vms, cluster).run())
      return detail::build_plan(vms, cluster, *exact);
  }
  return detail::diagnose(vms, cluster);
}

class OversizeInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Test oracle: plain backtracking over every host choice for every VM, in
// input order, with only per-host feasibility checks.
inline bool exhaustive_feasible(const std::vector<VMSpec>& vms, const ClusterSpec& cluster) {
  if (vms.size() > kExactSearchLimit)
    throw OversizeInstance("exhaustive_feasible is limited to 12 vms, got " +
                           std::to_string(vms.size()));
  std::vector<long> cpu(cluster.size(), 0), ram(cluster.size(), 0);
  std::vector<std::multiset<std::string>> groups(cluster.size());
  auto rec = [&](auto&& self, std::size_t i) -> bool {
    if (i == vms.size()) return true;
    const auto& vm = vms[i];
    for (std::size_t h = 0; h < cluster.size(); ++h) {
      if (cpu[h] + vm.cpu > cluster[h].cpu_cores) continue;
      if (ram[h] + vm.ram_mb > cluster[h].ram_mb) continue;
      if (vm.anti_affinity_group && groups[h].count(*vm.anti_affinity_group)) continue;
      cpu[h] += vm.cpu;
      ram[h] += vm.ram_mb;
      if (vm.anti_affinity_group) groups[h].insert(*vm.anti_affinity_group);
      const bool ok = self(self, i + 1);
      cpu[h] -= vm.cpu;
      ram[h] -= vm.ram_mb;
      if (vm.anti_affinity_group) groups[h].erase(groups[h].find(*vm.anti_affinity_group));
      if (ok) return true;
    }
    return false;
  };
  return rec(rec, 0);
}

}  // namespace rangeforge
