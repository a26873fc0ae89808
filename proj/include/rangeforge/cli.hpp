#pragma once

// rangectl verbs as API requests. Each verb builds exactly one request.

#include <charconv>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rangeforge/control_plane.hpp"

namespace rangeforge::cli {

inline std::string instance_path(const std::string& id, const char* leaf = nullptr) {
  std::string p = "/api/v1/instances/" + id;
  if (leaf) p += std::string("/") + leaf;
  return p;
}

inline Request catalog() { return {"GET", "/api/v1/scenarios", {}, {}}; }

inline Request validate(std::string text) { return {"POST", "/api/v1/scenarios/validate", {}, std::move(text)}; }

inline Request up(const std::string& scenario, std::uint64_t seed, const std::optional<json>& cluster) {
  json body{{"scenario", scenario}, {"seed", seed}};
  if (cluster) body["cluster"] = *cluster;
  return {"POST", "/api/v1/instances", {}, body.dump()};
}

inline Request status(const std::string& id) { return {"GET", instance_path(id), {}, {}}; }
inline Request plan(const std::string& id) { return {"GET", instance_path(id, "plan"), {}, {}}; }

inline Request cmd(const std::string& id, const std::string& command) {
  return {"POST", instance_path(id, "commands"), {}, json{{"command", command}}.dump()};
}

inline Request step(const std::string& id, std::uint64_t ticks) {
  return {"POST", instance_path(id, "step"), {}, json{{"ticks", ticks}}.dump()};
}

// `k=v` pairs. source and target name nodes, seed overrides the inject seed,
// everything else is an integer parameter of the inject kind.
inline Request inject(const std::string& id, const std::string& kind, const std::vector<std::string>& kv) {
  json body{{"kind", kind}};
  json params = json::object();
  for (const auto& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--param expects k=v, got '" + item + "'");
    const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    if (k == "source" || k == "target") {
      body[k] = v;
      continue;
    }
    if (k == "seed") {
      std::uint64_t seed = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
      if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("seed must be an integer");
      body["seed"] = seed;
      continue;
    }
    std::int64_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
      throw std::invalid_argument("parameter '" + k + "' must be an integer");
    params[k] = n;
  }
  if (!params.empty()) body["params"] = params;
  return {"POST", instance_path(id, "injects"), {}, body.dump()};
}

inline Request events(const std::string& id, std::uint64_t since, const std::string& kind) {
  Request r{"GET", instance_path(id, "events"), {{"since", std::to_string(since)}}, {}};
  if (!kind.empty()) r.query["kind"] = kind;
  return r;
}

}  // namespace rangeforge::cli
