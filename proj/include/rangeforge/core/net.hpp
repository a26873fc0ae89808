#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rangeforge {

struct Ipv4 {
  std::uint32_t value = 0;

  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) |
              std::uint32_t{d}) {}

  friend constexpr auto operator<=>(const Ipv4&, const Ipv4&) = default;

  std::string to_string() const {
    return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
           std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
  }

  static std::optional<Ipv4> parse(std::string_view s) {
    std::uint32_t out = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
      if (octet > 0) {
        if (pos >= s.size() || s[pos] != '.') return std::nullopt;
        ++pos;
      }
      std::size_t start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      std::size_t len = pos - start;
      if (len == 0 || len > 3) return std::nullopt;
      if (len > 1 && s[start] == '0') return std::nullopt;  // no leading zeros
      unsigned v = 0;
      std::from_chars(s.data() + start, s.data() + pos, v);
      if (v > 255) return std::nullopt;
      out = (out << 8) | v;
    }
    if (pos != s.size()) return std::nullopt;
    return Ipv4(out);
  }
};

struct Cidr {
  Ipv4 network;
  int prefix = 32;

  friend constexpr bool operator==(const Cidr&, const Cidr&) = default;

  constexpr std::uint32_t mask() const noexcept {
    return prefix == 0 ? 0u : (~std::uint32_t{0} << (32 - prefix));
  }
  constexpr bool contains(Ipv4 ip) const noexcept {
    return (ip.value & mask()) == network.value;
  }
  constexpr Ipv4 host(std::uint32_t offset) const noexcept { return Ipv4(network.value + offset); }
  constexpr Ipv4 broadcast() const noexcept { return Ipv4(network.value | ~mask()); }

  std::string to_string() const { return network.to_string() + '/' + std::to_string(prefix); }

  // Accepts "a.b.c.d/n" (host bits must be zero) or a bare address (/32).
  static std::optional<Cidr> parse(std::string_view s) {
    auto slash = s.find('/');
    auto ip = Ipv4::parse(s.substr(0, slash));
    if (!ip) return std::nullopt;
    int prefix = 32;
    if (slash != std::string_view::npos) {
      auto p = s.substr(slash + 1);
      if (p.empty() || p.size() > 2) return std::nullopt;
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), prefix);
      if (ec != std::errc{} || ptr != p.data() + p.size() || prefix < 0 || prefix > 32)
        return std::nullopt;
    }
    Cidr c{*ip, prefix};
    if ((ip->value & c.mask()) != ip->value) return std::nullopt;
    return c;
  }
};

// CIDR or the "any" wildcard.
struct AddrMatch {
  std::optional<Cidr> cidr;  // nullopt = any

  friend bool operator==(const AddrMatch&, const AddrMatch&) = default;

  bool matches(Ipv4 ip) const noexcept { return !cidr || cidr->contains(ip); }
  std::string to_string() const { return cidr ? cidr->to_string() : "any"; }

  static std::optional<AddrMatch> parse(std::string_view s) {
    if (s == "any") return AddrMatch{};
    auto c = Cidr::parse(s);
    if (!c) return std::nullopt;
    return AddrMatch{*c};
  }
};

// Single port, inclusive range "lo:hi", or "any".
struct PortMatch {
  std::uint16_t lo = 0;
  std::uint16_t hi = 65535;
  bool any = true;

  friend bool operator==(const PortMatch&, const PortMatch&) = default;

  static PortMatch single(std::uint16_t p) { return {p, p, false}; }
  static PortMatch range(std::uint16_t a, std::uint16_t b) { return {a, b, false}; }

  bool matches(std::uint16_t port) const noexcept { return any || (port >= lo && port <= hi); }

  std::string to_string() const {
    if (any) return "any";
    if (lo == hi) return std::to_string(lo);
    return std::to_string(lo) + ':' + std::to_string(hi);
  }

  static std::optional<PortMatch> parse(std::string_view s) {
    if (s == "any") return PortMatch{};
    auto parse_port = [](std::string_view t) -> std::optional<std::uint16_t> {
      if (t.empty() || t.size() > 5) return std::nullopt;
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || ptr != t.data() + t.size() || v > 65535) return std::nullopt;
      return static_cast<std::uint16_t>(v);
    };
    auto colon = s.find(':');
    if (colon == std::string_view::npos) {
      auto p = parse_port(s);
      if (!p) return std::nullopt;
      return single(*p);
    }
    auto a = parse_port(s.substr(0, colon));
    auto b = parse_port(s.substr(colon + 1));
    if (!a || !b || *a > *b) return std::nullopt;
    return range(*a, *b);
  }
};

enum class Proto { tcp, udp, icmp };

inline std::string_view to_string(Proto p) {
  switch (p) {
    case Proto::tcp: return "tcp";
    case Proto::udp: return "udp";
    case Proto::icmp: return "icmp";
  }
  return "tcp";
}

inline std::optional<Proto> parse_proto(std::string_view s) {
  if (s == "tcp") return Proto::tcp;
  if (s == "udp") return Proto::udp;
  if (s == "icmp") return Proto::icmp;
  return std::nullopt;
}

// Protocol selector in rules: a concrete protocol or "any".
struct ProtoMatch {
  std::optional<Proto> proto;

  friend bool operator==(const ProtoMatch&, const ProtoMatch&) = default;

  bool matches(Proto p) const noexcept { return !proto || *proto == p; }
  std::string to_string() const {
    return proto ? std::string(rangeforge::to_string(*proto)) : "any";
  }
  static std::optional<ProtoMatch> parse(std::string_view s) {
    if (s == "any") return ProtoMatch{};
    auto p = parse_proto(s);
    if (!p) return std::nullopt;
    return ProtoMatch{*p};
  }
};

}  // namespace rangeforge
