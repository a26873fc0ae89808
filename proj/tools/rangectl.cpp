// rangectl: command-line client. Works on the data directory directly, or
// against a running rangeforged with --remote.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rangeforge/cli.hpp"
#include "rangeforge/http.hpp"

using namespace rangeforge;

static std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

static std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

static int print_error(const Response& r) {
  const auto& e = r.body.contains("error") ? r.body["error"] : json::object();
  std::cerr << "error: " << e.value("code", "E_UNKNOWN") << ": " << e.value("message", r.body.dump()) << "\n";
  return 1;
}

int main(int argc, char** argv) {
  CLI::App app{"rangectl - drive cyber range instances"};
  app.require_subcommand(1);
  std::string data_dir = env_or("RANGEFORGE_DATA_DIR", "./rangeforge-data");
  std::string listen = env_or("RANGEFORGE_LISTEN", "127.0.0.1:8080");
  bool remote = false;
  app.add_option("--data-dir", data_dir, "data directory for local mode (env RANGEFORGE_DATA_DIR)");
  app.add_option("--listen", listen, "service address for --remote (env RANGEFORGE_LISTEN)");
  app.add_flag("--remote", remote, "talk to a running rangeforged instead of the data directory");

  std::string file, scenario, id, command, kind, cluster_file, event_kind;
  std::uint64_t seed = 0, ticks = 0, since = 0;
  std::vector<std::string> params;
  bool follow = false;

  auto* c_catalog = app.add_subcommand("catalog", "list scenarios and inject kinds");
  auto* c_validate = app.add_subcommand("validate", "check a scenario file");
  c_validate->add_option("FILE", file)->required();
  auto* c_up = app.add_subcommand("up", "create an instance of a scenario");
  c_up->add_option("SCENARIO", scenario)->required();
  c_up->add_option("--seed", seed, "instance seed");
  c_up->add_option("--cluster", cluster_file, "cluster JSON file");
  auto* c_status = app.add_subcommand("status", "show an instance");
  c_status->add_option("ID", id)->required();
  auto* c_plan = app.add_subcommand("plan", "show an instance's placement");
  c_plan->add_option("ID", id)->required();
  auto* c_cmd = app.add_subcommand("cmd", "send a lifecycle command");
  c_cmd->add_option("ID", id)->required();
  c_cmd->add_option("COMMAND", command)->required()->check(CLI::IsMember({"start", "pause", "resume", "reset", "destroy"}));
  auto* c_step = app.add_subcommand("step", "advance the virtual clock");
  c_step->add_option("ID", id)->required();
  c_step->add_option("N", ticks)->required();
  auto* c_inject = app.add_subcommand("inject", "fire an attack inject");
  c_inject->add_option("ID", id)->required();
  c_inject->add_option("KIND", kind)->required();
  c_inject->add_option("--param", params, "k=v (source, target, seed or a kind parameter)");
  auto* c_events = app.add_subcommand("events", "print the event log as JSON lines");
  c_events->add_option("ID", id)->required();
  c_events->add_option("--since", since, "only records with seq > N");
  c_events->add_option("--kind", event_kind, "only records of this kind");
  c_events->add_flag("--follow", follow, "keep streaming new records (needs --remote)");
  CLI11_PARSE(app, argc, argv);

  Request req;
  try {
    if (c_catalog->parsed()) req = cli::catalog();
    else if (c_validate->parsed()) {
      auto text = slurp(file);
      if (!text) {
        std::cerr << "error: cannot read " << file << "\n";
        return 1;
      }
      req = cli::validate(*text);
    } else if (c_up->parsed()) {
      std::optional<json> cluster;
      if (!cluster_file.empty()) {
        auto text = slurp(cluster_file);
        if (!text) {
          std::cerr << "error: cannot read " << cluster_file << "\n";
          return 1;
        }
        cluster = json::parse(*text);
      }
      req = cli::up(scenario, seed, cluster);
    } else if (c_status->parsed()) req = cli::status(id);
    else if (c_plan->parsed()) req = cli::plan(id);
    else if (c_cmd->parsed()) req = cli::cmd(id, command);
    else if (c_step->parsed()) req = cli::step(id, ticks);
    else if (c_inject->parsed()) req = cli::inject(id, kind, params);
    else req = cli::events(id, since, event_kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (follow && !remote) {
    std::cerr << "error: --follow streams from a running service; add --remote\n";
    return 1;
  }

  Response res;
  if (remote) {
    res = remote_call(listen, req);
  } else {
    try {
      ControlPlane cp(ControlPlaneConfig{data_dir, default_cluster()});
      res = cp.handle(req);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  if (res.status >= 400) return print_error(res);

  if (c_validate->parsed()) {
    for (const auto& e : res.body["errors"])
      std::cout << file << ":" << e["span"]["line"] << ":" << e["span"]["column"] << ": error: "
                << e["code"].get<std::string>() << ": " << e["message"].get<std::string>() << "\n";
    for (const auto& w : res.body["warnings"])
      std::cout << file << ":" << w["span"]["line"] << ":" << w["span"]["column"] << ": warning: "
                << w["code"].get<std::string>() << ": " << w["message"].get<std::string>() << "\n";
    if (!res.body["valid"].get<bool>()) return 1;
    std::cout << file << ": ok (" << res.body["scenario"]["name"].get<std::string>() << ")\n";
    return 0;
  }
  if (c_events->parsed()) {
    std::uint64_t last = since;
    for (const auto& r : res.body["events"]) {
      std::cout << r.dump() << "\n";
      last = r["seq"].get<std::uint64_t>();
    }
    std::cout.flush();
    if (!follow) return 0;
    const bool ok = remote_follow(listen, id, last, event_kind, [](const EventRecord& r) {
      std::cout << json(r).dump() << std::endl;
      return true;
    });
    return ok ? 0 : 1;
  }
  std::cout << res.body.dump(2) << "\n";
  return 0;
}
