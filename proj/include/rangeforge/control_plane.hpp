#pragma once

// Request dispatch for the HTTP API. The server and the CLI both go through
// ControlPlane::handle, so a CLI verb and its endpoint cannot drift apart.
//
//   GET  /api/v1/scenarios
//   POST /api/v1/scenarios/validate          body: scenario text
//   POST /api/v1/instances                   {scenario, seed?, cluster?}
//   GET  /api/v1/instances/{id}
//   GET  /api/v1/instances/{id}/plan
//   POST /api/v1/instances/{id}/commands     {command}
//   POST /api/v1/instances/{id}/step         {ticks}
//   POST /api/v1/instances/{id}/injects      {kind, source?, target?, seed?, params?}
//   GET  /api/v1/instances/{id}/events       ?since=&kind=   (follow is served by the HTTP layer)
//
// Errors are {"error": {"code", "message"}} with a matching status.

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/dsl.hpp"
#include "rangeforge/instance.hpp"
#include "rangeforge/json_io.hpp"
#include "rangeforge/store.hpp"
#include "rangeforge/templates.hpp"

namespace rangeforge {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  json body;
};

inline int status_for(std::string_view code) {
  if (code == "E_NOT_FOUND" || code == "E_UNKNOWN_SCENARIO") return 404;
  if (code == "E_TRANSITION" || code == "E_NOT_RUNNING") return 409;
  if (code == "E_BAD_REQUEST") return 400;
  if (code == "E_METHOD") return 405;
  if (code == "E_IO" || code == "E_CORRUPT" || code == "E_VERSION") return 500;
  return 422;  // E_INFEASIBLE, E_NO_SERVICE, E_BAD_SOURCE, E_BAD_PARAM, ...
}

inline Response error_response(std::string_view code, std::string message) {
  return {status_for(code), json{{"error", {{"code", code}, {"message", std::move(message)}}}}};
}

// Three desk-sized hypervisors, used when no cluster file is given.
inline ClusterSpec default_cluster() {
  return {{"host-1", 16, 32768}, {"host-2", 16, 32768}, {"host-3", 16, 32768}};
}

struct ControlPlaneConfig {
  fs::path data_dir;
  ClusterSpec cluster = default_cluster();
};

struct CatalogItem {
  Scenario scenario;
  std::string ruleset;
  std::string source;  // "builtin" or the .scn file name
};

class ControlPlane {
 public:
  // Throws IoError when the data directory cannot be used.
  explicit ControlPlane(ControlPlaneConfig cfg) : cfg_(std::move(cfg)) {
    std::error_code ec;
    fs::create_directories(cfg_.data_dir / "instances", ec);
    if (ec || ::access(cfg_.data_dir.c_str(), R_OK | W_OK | X_OK) != 0 ||
        ::access((cfg_.data_dir / "instances").c_str(), R_OK | W_OK | X_OK) != 0)
      throw IoError("data directory " + cfg_.data_dir.string() + " is not readable and writable");
    lock_ = std::make_unique<DirLock>(cfg_.data_dir);
    recover();
  }

  const ControlPlaneConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  Response handle(const Request& req) {
    try {
      return route(req);
    } catch (const IoError& e) {
      return error_response("E_IO", e.what());
    } catch (const json::exception& e) {
      return error_response("E_BAD_REQUEST", std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      return error_response("E_BAD_REQUEST", e.what());
    }
  }

  // Scenario catalog: built-in templates, then <data_dir>/scenarios/*.scn in
  // name order. A file's ruleset is the sibling .rules file, if any.
  std::vector<CatalogItem> catalog(std::vector<json>* invalid = nullptr) const {
    std::vector<CatalogItem> items;
    for (auto& s : builtin_templates()) {
      std::string rules(builtin_ruleset_text(s.name));
      items.push_back({std::move(s), std::move(rules), "builtin"});
    }
    const fs::path dir = cfg_.data_dir / "scenarios";
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return items;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir, ec))
      if (e.path().extension() == ".scn") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto text = detail::read_file(f).value_or("");
      auto parsed = dsl::parse(text);
      if (!parsed) {
        if (invalid) {
          json errs = json::array();
          for (const auto& e : parsed.error()) errs.push_back(e);
          invalid->push_back({{"file", f.filename().string()}, {"errors", errs}});
        }
        continue;
      }
      fs::path rules_path = f;
      rules_path.replace_extension(".rules");
      items.push_back({std::move(parsed.value()), detail::read_file(rules_path).value_or(""),
                       f.filename().string()});
    }
    return items;
  }

  std::vector<std::string> instance_ids() const {
    std::shared_lock lk(map_mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : slots_) ids.push_back(id);
    return ids;
  }

  // Event reads for the streaming endpoint; nullptr for an unknown instance.
  const EventLog* event_log(const std::string& id) const {
    std::shared_lock lk(map_mu_);
    auto it = slots_.find(id);
    return it == slots_.end() ? nullptr : &it->second->log;
  }

  // Real-time mode: one tick for every instance whose timers can move.
  void tick_all() {
    for (const auto& id : instance_ids()) {
      Slot* slot = find(id);
      std::lock_guard lk(slot->mu);
      const Phase p = slot->inst->state().phase;
      if (p == Phase::defined || p == Phase::destroyed || p == Phase::failed) continue;
      commit(*slot, [](RangeInstance& i) { return i.step(1); });
    }
  }

 private:
  struct Slot {
    std::mutex mu;  // serializes mutations: the instance's command queue
    std::optional<RangeInstance> inst;
    EventLog log;
    fs::path dir;
  };

  // ---- startup ------------------------------------------------------------

  void recover() {
    const fs::path root = cfg_.data_dir / "instances";
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      const std::string name = dir.filename().string();
      if (name.rfind(".new-", 0) == 0 || !fs::exists(dir / "state.json")) {
        fs::remove_all(dir);  // creation never committed
        continue;
      }
      fs::remove(dir / "state.json.tmp");
      auto stored = restore_instance_file(dir / "state.json");
      if (!stored) {
        warnings_.push_back(name + ": " + stored.error().code + ": " + stored.error().message);
        continue;
      }
      auto slot = std::make_unique<Slot>();
      slot->dir = dir;
      auto opened = slot->log.open(dir / "events.jsonl", stored->next_seq);
      if (!opened) {
        warnings_.push_back(name + ": " + opened.error().code + ": " + opened.error().message);
        continue;
      }
      slot->inst.emplace(std::move(stored->instance));
      next_id_ = std::max(next_id_, id_number(name) + 1);
      slots_.emplace(name, std::move(slot));
    }
  }

  static std::uint64_t id_number(const std::string& id) {
    std::uint64_t n = 0;
    if (id.size() > 2) std::from_chars(id.data() + 2, id.data() + id.size(), n);
    return n;
  }

  static std::string format_id(std::uint64_t n) {
    std::ostringstream ss;
    ss << "i-" << std::setw(6) << std::setfill('0') << n;
    return ss.str();
  }

  Slot* find(const std::string& id) const {
    std::shared_lock lk(map_mu_);
    auto it = slots_.find(id);
    return it == slots_.end() ? nullptr : it->second.get();
  }

  // Applies a mutation to a copy, logs its records, then commits the new
  // snapshot. A rejected mutation changes nothing. Caller holds slot.mu.
  template <typename F>
  Result<std::vector<EventRecord>, InstanceError> commit(Slot& slot, F&& mutate) {
    RangeInstance next = *slot.inst;
    auto drafts = mutate(next);
    if (!drafts) return drafts.error();
    auto records = slot.log.append(drafts.value());
    detail::atomic_write(slot.dir / "state.json", snapshot_instance(next, slot.log.next_seq()));
    slot.inst = std::move(next);
    return records;
  }

  // ---- routing ------------------------------------------------------------

  static std::vector<std::string> split_path(std::string_view p) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < p.size()) {
      std::size_t j = p.find('/', i);
      if (j == std::string_view::npos) j = p.size();
      if (j > i) out.emplace_back(p.substr(i, j - i));
      i = j + 1;
    }
    return out;
  }

  static json body_json(const Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
    return j;
  }

  Response route(const Request& req) {
    const auto parts = split_path(req.path);
    if (parts.size() < 3 || parts[0] != "api" || parts[1] != "v1")
      return error_response("E_NOT_FOUND", "no such endpoint: " + req.path);
    const bool get = req.method == "GET", post = req.method == "POST";
    auto method_error = [&] { return error_response("E_METHOD", req.method + " not allowed on " + req.path); };

    if (parts[2] == "scenarios") {
      if (parts.size() == 3) return get ? list_scenarios() : method_error();
      if (parts.size() == 4 && parts[3] == "validate") return post ? validate(req.body) : method_error();
      return error_response("E_NOT_FOUND", "no such endpoint: " + req.path);
    }
    if (parts[2] != "instances" || parts.size() > 5)
      return error_response("E_NOT_FOUND", "no such endpoint: " + req.path);
    if (parts.size() == 3) return post ? create_instance(body_json(req)) : method_error();

    Slot* slot = find(parts[3]);
    if (!slot) return error_response("E_NOT_FOUND", "no instance '" + parts[3] + "'");
    if (parts.size() == 4) return get ? show(*slot) : method_error();
    const std::string& leaf = parts[4];
    if (leaf == "plan") return get ? plan_of(*slot) : method_error();
    if (leaf == "events") return get ? events(*slot, req.query) : method_error();
    if (leaf == "commands") return post ? command(*slot, body_json(req)) : method_error();
    if (leaf == "step") return post ? step(*slot, body_json(req)) : method_error();
    if (leaf == "injects") return post ? inject(*slot, body_json(req)) : method_error();
    return error_response("E_NOT_FOUND", "no such endpoint: " + req.path);
  }

  // ---- endpoints ----------------------------------------------------------

  Response list_scenarios() const {
    std::vector<json> invalid;
    json items = json::array();
    for (const auto& c : catalog(&invalid)) {
      json j = c.scenario;
      j["source"] = c.source;
      auto rules = load_ruleset(c.ruleset);
      j["rule_count"] = rules ? rules->rules.size() : 0;
      items.push_back(j);
    }
    json injects = json::array();
    for (const auto& e : list_injects()) injects.push_back(to_json(e));
    return {200, json{{"scenarios", items}, {"injects", injects}, {"invalid", invalid}}};
  }

  static Response validate(const std::string& text) {
    auto rep = dsl::check(text);
    json errs = json::array(), warns = json::array();
    for (const auto& e : rep.errors) errs.push_back(e);
    for (const auto& w : rep.warnings) warns.push_back(w);
    json body{{"valid", rep.errors.empty()}, {"errors", errs}, {"warnings", warns}};
    if (rep.scenario) {
      body["scenario"] = *rep.scenario;
      body["canonical"] = dsl::serialize(*rep.scenario);
    }
    return {200, body};
  }

  Response create_instance(const json& body) {
    if (!body.contains("scenario") || !body["scenario"].is_string())
      return error_response("E_BAD_REQUEST", "'scenario' (string) is required");
    const std::string name = body["scenario"].get<std::string>();
    const std::uint64_t seed = body.contains("seed") ? body["seed"].get<std::uint64_t>() : 0;
    const ClusterSpec cluster = body.contains("cluster") ? cluster_from_json(body["cluster"]) : cfg_.cluster;
    std::optional<CatalogItem> item;
    for (auto& c : catalog())
      if (c.scenario.name == name) {
        item = std::move(c);
        break;
      }
    if (!item) return error_response("E_UNKNOWN_SCENARIO", "no scenario named '" + name + "'");

    std::lock_guard create_lk(create_mu_);
    const std::string id = format_id(next_id_);
    auto inst = RangeInstance::create(item->scenario, item->ruleset, cluster, seed, id);
    if (!inst) return error_response(inst.error().code, inst.error().message);

    const fs::path root = cfg_.data_dir / "instances";
    const fs::path staging = root / (".new-" + id);
    const fs::path dir = root / id;
    fs::remove_all(staging);
    fs::create_directories(staging);
    detail::atomic_write(staging / "state.json", snapshot_instance(inst.value(), 1));
    fs::rename(staging, dir);
    detail::fsync_dir(root);

    auto slot = std::make_unique<Slot>();
    slot->dir = dir;
    if (auto opened = slot->log.open(dir / "events.jsonl", 1); !opened)
      return error_response(opened.error().code, opened.error().message);
    slot->inst.emplace(std::move(inst.value()));
    ++next_id_;
    Response r{201, view(*slot)};
    std::unique_lock lk(map_mu_);
    slots_.emplace(id, std::move(slot));
    return r;
  }

  static json view(const Slot& slot) {
    json v = instance_view(slot.inst->state());
    v["next_seq"] = slot.log.next_seq();
    v["pending_flows"] = slot.inst->pending_flows().size();
    return v;
  }

  static Response show(Slot& slot) {
    std::lock_guard lk(slot.mu);
    return {200, view(slot)};
  }

  static Response plan_of(Slot& slot) {
    std::lock_guard lk(slot.mu);
    const auto& st = slot.inst->state();
    json body = st.plan;
    body["instance"] = st.id;
    return {200, body};
  }

  static Response events(const Slot& slot, const std::map<std::string, std::string>& q) {
    std::uint64_t since = 0;
    if (auto it = q.find("since"); it != q.end() && !it->second.empty()) {
      const auto& s = it->second;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), since);
      if (ec != std::errc{} || p != s.data() + s.size())
        return error_response("E_BAD_REQUEST", "since must be a non-negative integer");
    }
    std::string kind;
    if (auto it = q.find("kind"); it != q.end()) kind = it->second;
    if (!kind.empty() && !is_event_kind(kind)) return error_response("E_BAD_REQUEST", "unknown event kind '" + kind + "'");
    return {200, json{{"events", slot.log.query(since, kind)}}};
  }

  Response command(Slot& slot, const json& body) {
    if (!body.contains("command") || !body["command"].is_string())
      return error_response("E_BAD_REQUEST", "'command' (string) is required");
    auto cmd = parse_command(body["command"].get<std::string>());
    if (!cmd) return error_response("E_BAD_REQUEST", "unknown command '" + body["command"].get<std::string>() + "'");
    std::lock_guard lk(slot.mu);
    auto r = commit(slot, [&](RangeInstance& i) { return i.command(*cmd); });
    if (!r) return error_response(r.error().code, r.error().message);
    return {200, view(slot)};
  }

  Response step(Slot& slot, const json& body) {
    if (!body.contains("ticks") || !body["ticks"].is_number_integer() || body["ticks"].get<std::int64_t>() < 0)
      return error_response("E_BAD_REQUEST", "'ticks' (non-negative integer) is required");
    const Tick ticks = body["ticks"].get<Tick>();
    std::lock_guard lk(slot.mu);
    auto r = commit(slot, [&](RangeInstance& i) { return i.step(ticks); });
    if (!r) return error_response(r.error().code, r.error().message);
    json v = view(slot);
    v["appended"] = r->size();
    return {200, v};
  }

  Response inject(Slot& slot, const json& body) {
    if (!body.contains("kind")) return error_response("E_BAD_REQUEST", "'kind' is required");
    if (!parse_inject_kind(body["kind"].get<std::string>()))
      return error_response("E_BAD_PARAM", "unknown inject kind '" + body["kind"].get<std::string>() + "'");
    InjectSpec spec = inject_spec_from_json(body);
    std::optional<std::uint64_t> seed;
    if (body.contains("seed")) seed = spec.seed;
    std::lock_guard lk(slot.mu);
    json summary;
    auto r = commit(slot, [&](RangeInstance& i) -> Result<std::vector<EventDraft>, InstanceError> {
      auto out = i.inject(spec, seed);
      if (!out) return out.error();
      summary = out->first;
      return std::move(out->second);
    });
    if (!r) return error_response(r.error().code, r.error().message);
    return {201, summary};
  }

  ControlPlaneConfig cfg_;
  std::unique_ptr<DirLock> lock_;
  std::vector<std::string> warnings_;
  mutable std::shared_mutex map_mu_;
  std::mutex create_mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::uint64_t next_id_ = 1;
};

}  // namespace rangeforge
