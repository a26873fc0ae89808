#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/scenario.hpp"

namespace rangeforge {

namespace detail {

inline FilterRule allow_tcp_to(const char* cidr, std::uint16_t port) {
  return FilterRule{FilterAction::allow, ProtoMatch{Proto::tcp}, AddrMatch{}, PortMatch{},
                    *AddrMatch::parse(cidr), PortMatch::single(port)};
}

inline NodeSpec make_node(std::string name, Role role, std::string os,
                          std::vector<InterfaceSpec> ifaces, std::vector<ServiceSpec> services = {}) {
  const auto res = default_resources(os, role);
  NodeSpec n;
  n.name = std::move(name);
  n.role = role;
  n.os = std::move(os);
  n.cpu = res.cpu;
  n.ram_mb = res.ram_mb;
  n.interfaces = std::move(ifaces);
  n.services = std::move(services);
  return n;
}

inline ServiceSpec svc(ServiceKind k) { return {k, default_port(k)}; }

}  // namespace detail

// pfSense firewall bridging an external and an internal switch; Suricata in
// IDS mode mirrors the external switch. Kali attacks Ubuntu (HTTP/DNS/SSH)
// and Windows Server (RDS).
inline Scenario scenario_1() {
  using namespace detail;
  Scenario s;
  s.name = "scenario-1";
  s.networks = {{"external", true}, {"internal", false}};

  auto fw = make_node("pfsense-fw", Role::firewall, "pfsense",
                      {{"wan", "external", {}}, {"lan", "internal", {}}});
  fw.sensor = SensorSpec{"suricata", SensorMode::ids, "external"};
  fw.fw_rules = {allow_tcp_to("10.10.1.0/24", 22), allow_tcp_to("10.10.1.0/24", 53),
                 allow_tcp_to("10.10.1.0/24", 80), allow_tcp_to("10.10.1.0/24", 3389),
                 FilterRule{FilterAction::allow, ProtoMatch{Proto::udp}, AddrMatch{}, PortMatch{},
                            *AddrMatch::parse("10.10.1.0/24"), PortMatch::single(53)}};
  s.nodes.push_back(std::move(fw));
  s.nodes.push_back(make_node("kali", Role::attacker, "kali", {{"eth0", "external", {}}}));
  s.nodes.push_back(make_node("ubuntu-srv", Role::target, "ubuntu", {{"eth0", "internal", {}}},
                              {svc(ServiceKind::http), svc(ServiceKind::dns), svc(ServiceKind::ssh)}));
  s.nodes.push_back(make_node("win-srv", Role::target, "windows-server", {{"eth0", "internal", {}}},
                              {svc(ServiceKind::rdp)}));
  return s;
}

// OPNsense firewall with Snort inline in IPS mode. Parrot attacks
// Metasploitable and an Oracle Linux mail server (SMTP/IMAP/SSH).
inline Scenario scenario_2() {
  using namespace detail;
  Scenario s;
  s.name = "scenario-2";
  s.networks = {{"external", true}, {"internal", false}};

  auto fw = make_node("opnsense-fw", Role::firewall, "opnsense",
                      {{"wan", "external", {}}, {"lan", "internal", {}}});
  fw.sensor = SensorSpec{"snort", SensorMode::ips, std::nullopt};
  fw.fw_rules = {allow_tcp_to("10.10.1.0/24", 22), allow_tcp_to("10.10.1.0/24", 25),
                 allow_tcp_to("10.10.1.0/24", 80), allow_tcp_to("10.10.1.0/24", 143)};
  s.nodes.push_back(std::move(fw));
  s.nodes.push_back(make_node("parrot", Role::attacker, "parrot", {{"eth0", "external", {}}}));
  s.nodes.push_back(make_node("metasploitable", Role::target, "metasploitable",
                              {{"eth0", "internal", {}}},
                              {svc(ServiceKind::http), svc(ServiceKind::ssh)}));
  s.nodes.push_back(make_node("oracle-srv", Role::target, "oracle-linux", {{"eth0", "internal", {}}},
                              {svc(ServiceKind::smtp), svc(ServiceKind::imap), svc(ServiceKind::ssh)}));
  return s;
}

// Security Onion (ELK, Suricata, Zeek) watching the internal switch from a
// management segment; MikroTik CHR routes between external, internal and
// management networks.
inline Scenario scenario_3() {
  using namespace detail;
  Scenario s;
  s.name = "scenario-3";
  s.networks = {{"external", true}, {"internal", false}, {"mgmt", false}};

  auto so = make_node("sec-onion", Role::monitor, "security-onion", {{"eth0", "mgmt", {}}});
  so.sensor = SensorSpec{"suricata", SensorMode::ids, "internal"};
  s.nodes.push_back(std::move(so));
  s.nodes.push_back(make_node("chr-router", Role::router, "mikrotik-chr",
                              {{"ether1", "external", {}},
                               {"ether2", "internal", {}},
                               {"ether3", "mgmt", {}}}));
  s.nodes.push_back(make_node("metasploitable", Role::target, "metasploitable",
                              {{"eth0", "internal", {}}},
                              {svc(ServiceKind::http), svc(ServiceKind::ssh)}));
  s.nodes.push_back(make_node("freebsd-srv", Role::target, "freebsd", {{"em0", "internal", {}}},
                              {svc(ServiceKind::http), svc(ServiceKind::dns), svc(ServiceKind::ssh)}));
  s.nodes.push_back(make_node("kali", Role::attacker, "kali", {{"eth0", "external", {}}}));
  s.nodes.push_back(make_node("operator-pc", Role::operator_pc, "ubuntu", {{"eth0", "mgmt", {}}}));
  return s;
}

inline std::vector<Scenario> builtin_templates() { return {scenario_1(), scenario_2(), scenario_3()}; }

// Default detection rulesets shipped with each template (also under rules/).
// Authored for this project; real engines use far richer grammars.
inline constexpr std::string_view kScenario1Rules = R"(# scenario-1: Suricata IDS tapping the external switch
alert tcp any any -> any any (msg:"TCP port scan"; sid:1000001; tag:"port-scan";)
alert tcp any any -> any 22 (msg:"SSH brute force"; sid:1000002; tag:"ssh-bruteforce";)
drop tcp any any -> any 80 (msg:"SQL injection attempt"; sid:1000003; tag:"sql-injection";)
drop tcp any any -> any any (msg:"DDoS flood traffic"; sid:1000004; tag:"ddos";)
alert tcp any any -> any 25 (msg:"Phishing mail delivery"; sid:1000005; tag:"phishing";)
alert tcp any any -> any 22 (msg:"SSH login burst"; sid:1000006; tag:"ssh-bruteforce"; rate:10,5;)
)";

inline constexpr std::string_view kScenario2Rules = R"(# scenario-2: Snort IPS inline on the OPNsense firewall
alert tcp any any -> 10.10.1.0/24 any (msg:"TCP port scan"; sid:2000001; tag:"port-scan";)
drop tcp any any -> 10.10.1.0/24 22 (msg:"SSH brute force"; sid:2000002; tag:"ssh-bruteforce";)
drop tcp any any -> 10.10.1.0/24 80 (msg:"SQL injection attempt"; sid:2000003; tag:"sql-injection";)
drop tcp any any -> any any (msg:"DDoS flood traffic"; sid:2000004; tag:"ddos";)
alert tcp any any -> 10.10.1.0/24 25 (msg:"Phishing mail delivery"; sid:2000005; tag:"phishing";)
)";

inline constexpr std::string_view kScenario3Rules = R"(# scenario-3: Security Onion Suricata tapping the internal switch
alert tcp any any -> 10.10.1.0/24 any (msg:"TCP port scan"; sid:3000001; tag:"port-scan";)
alert tcp any any -> 10.10.1.0/24 22 (msg:"SSH brute force"; sid:3000002; tag:"ssh-bruteforce";)
drop tcp any any -> 10.10.1.0/24 80 (msg:"SQL injection attempt"; sid:3000003; tag:"sql-injection";)
drop tcp any any -> any any (msg:"DDoS flood traffic"; sid:3000004; tag:"ddos";)
alert tcp any any -> any 25 (msg:"Phishing mail delivery"; sid:3000005; tag:"phishing";)
)";

// Shipped ruleset text for a built-in template name; empty for others.
inline std::string_view builtin_ruleset_text(std::string_view scenario) {
  if (scenario == "scenario-1") return kScenario1Rules;
  if (scenario == "scenario-2") return kScenario2Rules;
  if (scenario == "scenario-3") return kScenario3Rules;
  return {};
}

}  // namespace rangeforge
