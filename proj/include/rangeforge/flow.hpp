#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "rangeforge/core/net.hpp"
#include "rangeforge/lifecycle.hpp"

namespace rangeforge {

// Atomic unit of simulated traffic: a 5-tuple plus payload tags and counts.
// src_node is where the flow enters the fabric; src_ip may be spoofed.
struct FlowEvent {
  std::uint64_t id = 0;
  Tick tick = 0;
  std::string src_node;
  std::string dst_node;
  Ipv4 src_ip;
  Ipv4 dst_ip;
  Proto proto = Proto::tcp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::set<std::string> payload_tags;
  std::uint64_t packets = 1;
  std::uint64_t bytes = 0;

  friend bool operator==(const FlowEvent&, const FlowEvent&) = default;

  bool well_formed() const {
    if (proto == Proto::icmp) return src_port == 0 && dst_port == 0;
    return dst_port >= 1;
  }
};

}  // namespace rangeforge
