// rangeforged: HTTP control plane for simulated cyber ranges.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "rangeforge/control_plane.hpp"
#include "rangeforge/http.hpp"

using namespace rangeforge;

static std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

int main(int argc, char** argv) {
  CLI::App app{"rangeforged - cyber range control plane"};
  std::string listen = env_or("RANGEFORGE_LISTEN", "127.0.0.1:8080");
  std::string data_dir = env_or("RANGEFORGE_DATA_DIR", "./rangeforge-data");
  std::string cluster_file;
  bool realtime = false;
  app.add_option("--listen", listen, "host:port to serve on (env RANGEFORGE_LISTEN)");
  app.add_option("--data-dir", data_dir, "event logs and snapshots (env RANGEFORGE_DATA_DIR)");
  app.add_option("--cluster", cluster_file, "cluster JSON: {\"hosts\": [{id, cpu_cores, ram_mb}]}");
  app.add_flag("--realtime", realtime, "advance every live instance one tick per 100 ms");
  CLI11_PARSE(app, argc, argv);

  ControlPlaneConfig cfg;
  cfg.data_dir = data_dir;
  if (!cluster_file.empty()) {
    std::ifstream in(cluster_file);
    if (!in) {
      std::cerr << "rangeforged: cannot read cluster file " << cluster_file << "\n";
      return 2;
    }
    try {
      cfg.cluster = cluster_from_json(json::parse(in));
    } catch (const std::exception& e) {
      std::cerr << "rangeforged: malformed cluster file " << cluster_file << ": " << e.what() << "\n";
      return 2;
    }
  }

  // Signals are taken by a dedicated thread.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  std::unique_ptr<ControlPlane> cp;
  try {
    cp = std::make_unique<ControlPlane>(cfg);
  } catch (const std::exception& e) {
    std::cerr << "rangeforged: " << e.what() << "\n";
    return 2;
  }
  for (const auto& w : cp->warnings()) std::cerr << "rangeforged: skipped instance " << w << "\n";

  HttpServer server(*cp);
  std::pair<std::string, int> addr;
  try {
    addr = split_listen(listen);
  } catch (const std::exception&) {
    std::cerr << "rangeforged: bad listen address '" << listen << "'\n";
    return 2;
  }
  const int port = server.bind(addr.first, addr.second);
  if (port < 0) {
    std::cerr << "rangeforged: cannot bind " << listen << "\n";
    return 2;
  }
  std::cout << "rangeforged listening on " << addr.first << ":" << port << " data-dir " << data_dir
            << (realtime ? " (realtime)" : "") << std::endl;

  std::atomic<bool> done{false};
  std::thread signals([&] {
    int sig = 0;
    sigwait(&sigs, &sig);
    done = true;
    server.stop();
  });
  signals.detach();

  std::thread clock;
  if (realtime)
    clock = std::thread([&] {
      auto next = std::chrono::steady_clock::now();
      while (!done) {
        next += std::chrono::milliseconds(kTickMillis);
        std::this_thread::sleep_until(next);
        cp->tick_all();
      }
    });

  server.listen_after_bind();
  done = true;
  if (clock.joinable()) clock.join();
  return 0;
}
