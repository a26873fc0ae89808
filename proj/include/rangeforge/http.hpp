#pragma once

// HTTP front end over ControlPlane, plus a small client used by rangectl.
// `GET .../events?follow=true` streams server-sent events: one `id/event/data`
// block per record, resuming after `since` or the Last-Event-ID header.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>

#include "httplib.h"
#include "rangeforge/control_plane.hpp"

namespace rangeforge {

inline std::string sse_block(const EventRecord& r) {
  return "id: " + std::to_string(r.seq) + "\nevent: " + r.kind + "\ndata: " + json(r).dump() + "\n\n";
}

class HttpServer {
 public:
  explicit HttpServer(ControlPlane& cp) : cp_(cp) {
    auto any = [this](const httplib::Request& req, httplib::Response& res) { serve(req, res); };
    const char* pattern = R"(/api/v1/.*)";
    srv_.Get(pattern, any);
    srv_.Post(pattern, any);
    srv_.Put(pattern, any);
    srv_.Delete(pattern, any);
    srv_.Patch(pattern, any);
    srv_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  }

  // host:port; port 0 binds an ephemeral port. Returns the bound port or -1.
  int bind(const std::string& host, int port) {
    if (port == 0) return srv_.bind_to_any_port(host);
    return srv_.bind_to_port(host, port) ? port : -1;
  }
  bool listen_after_bind() { return srv_.listen_after_bind(); }
  void stop() {
    stopping_ = true;
    srv_.stop();
  }
  void wait_until_ready() { srv_.wait_until_ready(); }

 private:
  void serve(const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    if (req.method == "GET" && r.query.count("follow") && r.query["follow"] == "true") {
      if (follow(r, req, res)) return;
    }
    Response out = cp_.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  }

  // Returns false when the request should fall through to the plain handler
  // (unknown instance, bad parameters).
  bool follow(Request& r, const httplib::Request& req, httplib::Response& res) {
    const std::string prefix = "/api/v1/instances/";
    if (r.path.rfind(prefix, 0) != 0) return false;
    const std::string rest = r.path.substr(prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string::npos || rest.substr(slash) != "/events") return false;
    const EventLog* log = cp_.event_log(rest.substr(0, slash));
    if (!log) return false;
    // Validate since/kind through the plain handler first.
    Request probe = r;
    probe.query.erase("follow");
    if (cp_.handle(probe).status != 200) return false;

    std::uint64_t since = r.query.count("since") && !r.query["since"].empty() ? std::stoull(r.query["since"]) : 0;
    if (req.has_header("Last-Event-ID")) since = std::stoull(req.get_header_value("Last-Event-ID"));
    const std::string kind = r.query.count("kind") ? r.query["kind"] : "";
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, log, since, kind](std::size_t, httplib::DataSink& sink) mutable {
          while (!stopping_) {
            // Cursor tracks every record seen, filtered or not.
            const auto all = log->query(since);
            for (const auto& rec : all) {
              since = rec.seq;
              if (!kind.empty() && rec.kind != kind) continue;
              const std::string block = sse_block(rec);
              if (!sink.write(block.data(), block.size())) return false;
            }
            if (!log->wait_past(since, std::chrono::milliseconds(1000))) {
              if (!sink.is_writable()) return false;
              static constexpr char keepalive[] = ": keepalive\n\n";
              if (!sink.write(keepalive, sizeof keepalive - 1)) return false;
            }
          }
          sink.done();
          return true;
        });
    return true;
  }

  ControlPlane& cp_;
  httplib::Server srv_;
  std::atomic<bool> stopping_{false};
};

// Splits "host:port"; a bare port means 127.0.0.1.
inline std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return {"127.0.0.1", std::stoi(listen)};
  return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

// Sends a Request to a remote service; transport failures become E_IO.
inline Response remote_call(const std::string& listen, const Request& req) {
  auto [host, port] = split_listen(listen);
  httplib::Client cli(host, port);
  cli.set_read_timeout(60, 0);
  httplib::Params params(req.query.begin(), req.query.end());
  const std::string path = params.empty() ? req.path : httplib::append_query_params(req.path, params);
  httplib::Result res = req.method == "GET" ? cli.Get(path) : cli.Post(path, req.body, "application/json");
  if (!res) return error_response("E_IO", "cannot reach " + listen + ": " + httplib::to_string(res.error()));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) return error_response("E_IO", "non-JSON reply from " + listen);
  return {res->status, body};
}

// Follows a remote event stream, calling `on_record` per record until it
// returns false or the connection ends.
inline bool remote_follow(const std::string& listen, const std::string& id, std::uint64_t since,
                          const std::string& kind, const std::function<bool(const EventRecord&)>& on_record) {
  auto [host, port] = split_listen(listen);
  httplib::Client cli(host, port);
  cli.set_read_timeout(24 * 3600, 0);
  httplib::Params params{{"follow", "true"}, {"since", std::to_string(since)}};
  if (!kind.empty()) params.emplace("kind", kind);
  const std::string path = httplib::append_query_params("/api/v1/instances/" + id + "/events", params);
  std::string buf;
  auto res = cli.Get(path, [&](const char* data, std::size_t len) {
    buf.append(data, len);
    std::size_t end;
    while ((end = buf.find("\n\n")) != std::string::npos) {
      const std::string block = buf.substr(0, end);
      buf.erase(0, end + 2);
      const auto at = block.find("data: ");
      if (at == std::string::npos) continue;
      const auto line_end = block.find('\n', at);
      json j = json::parse(block.substr(at + 6, line_end == std::string::npos ? std::string::npos : line_end - at - 6),
                           nullptr, false);
      if (j.is_discarded()) continue;
      if (!on_record(j.get<EventRecord>())) return false;
    }
    return true;
  });
  return res || res.error() == httplib::Error::Canceled;
}

}  // namespace rangeforge
