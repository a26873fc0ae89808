#pragma once

// A running range: lifecycle state, compiled fabric, detection windows and
// the queue of injected flows waiting for their tick.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/core/rng.hpp"
#include "rangeforge/detection.hpp"
#include "rangeforge/dsl.hpp"
#include "rangeforge/inject.hpp"
#include "rangeforge/json_io.hpp"
#include "rangeforge/lifecycle.hpp"
#include "rangeforge/netsim.hpp"
#include "rangeforge/placement.hpp"
#include "rangeforge/scenario.hpp"

namespace rangeforge {

// An event before the log gives it a sequence number.
struct EventDraft {
  Tick tick = 0;
  std::string kind;  // lifecycle, flow, alert, drop, anomaly, inject, delivery
  json payload;

  friend bool operator==(const EventDraft&, const EventDraft&) = default;
};

struct InstanceError {
  std::string code;
  std::string message;
};

inline EventDraft draft_of(const NetEvent& ev) {
  return std::visit(
      [](const auto& e) -> EventDraft {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, DeliveryEvent>) return {e.tick, "delivery", json(e)};
        else if constexpr (std::is_same_v<T, DropEvent>) return {e.tick, "drop", json(e)};
        else if constexpr (std::is_same_v<T, AlertEvent>) return {e.tick, "alert", json(e)};
        else return {e.tick, "anomaly", json(e)};
      },
      ev);
}

inline EventDraft draft_of(const LifecycleEvent& e) { return {e.tick, "lifecycle", json(e)}; }

class RangeInstance {
 public:
  static Result<RangeInstance, InstanceError> create(const Scenario& s, std::string_view ruleset_text,
                                                     const ClusterSpec& cluster, std::uint64_t seed,
                                                     std::string id) {
    auto report = validate_scenario(s);
    if (!report.ok()) {
      const auto errs = report.errors();
      return InstanceError{"E_INVALID_SCENARIO", errs.front().code + ": " + errs.front().message};
    }
    auto rules = load_ruleset(ruleset_text);
    if (!rules) return InstanceError{"E_BAD_RULESET", format_error(rules.error().front())};
    auto st = instantiate(s, cluster, seed, std::move(id));
    if (!st)
      return InstanceError{"E_INFEASIBLE",
                           std::string(to_string(st.error().binding)) + ": " + st.error().detail};
    RangeInstance inst;
    inst.scenario_ = s;
    inst.fabric_ = Fabric::from_scenario(s, std::move(rules.value()));
    inst.state_ = std::move(st.value());
    return inst;
  }

  const InstanceState& state() const { return state_; }
  const Scenario& scenario() const { return scenario_; }
  const Fabric& fabric() const { return fabric_; }
  const FabricState& fabric_state() const { return net_; }
  const std::vector<FlowEvent>& pending_flows() const { return pending_; }

  Result<std::vector<EventDraft>, InstanceError> command(Command cmd) {
    SimulatedBackend backend;
    auto out = apply_command(state_, cmd, backend, &scenario_);
    if (!out) return InstanceError{"E_TRANSITION", out.error().message()};
    state_ = std::move(out->state);
    if (cmd == Command::reset || cmd == Command::destroy) pending_.clear();
    return std::vector<EventDraft>{draft_of(out->event)};
  }

  // Each tick: lifecycle timers first, then the flows due at or before the
  // new clock when the instance is RUNNING. Paused instances hold traffic.
  Result<std::vector<EventDraft>, InstanceError> step(Tick ticks) {
    if (state_.terminal()) return InstanceError{"E_TRANSITION", TransitionError{state_.phase, std::nullopt}.message()};
    SimulatedBackend backend;
    std::vector<EventDraft> out;
    for (Tick i = 0; i < ticks && !state_.terminal(); ++i) {
      std::vector<LifecycleEvent> lc;
      advance_one_tick(state_, backend, lc, &scenario_);
      for (const auto& e : lc) out.push_back(draft_of(e));
      if (state_.phase == Phase::destroyed) pending_.clear();
      if (state_.phase != Phase::running) continue;
      std::size_t due = 0;
      while (due < pending_.size() && pending_[due].tick <= state_.clock) ++due;
      for (std::size_t k = 0; k < due; ++k) {
        const FlowEvent& f = pending_[k];
        out.push_back({state_.clock, "flow", json(f)});
        for (const auto& ev : process_flow(fabric_, net_, f, state_.clock)) out.push_back(draft_of(ev));
      }
      pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(due));
    }
    return out;
  }

  // Queues the inject's flows starting on the next tick. Without an explicit
  // seed each inject draws from the instance seed and its ordinal.
  Result<std::pair<json, std::vector<EventDraft>>, InstanceError> inject(InjectSpec spec,
                                                                         std::optional<std::uint64_t> seed) {
    if (state_.phase != Phase::running)
      return InstanceError{"E_NOT_RUNNING", "instance is " + std::string(to_string(state_.phase)) + ", not RUNNING"};
    const std::string inject_id = "inj-" + std::to_string(inject_count_ + 1);
    spec = fill_defaults(std::move(spec), scenario_);
    spec.seed = seed ? *seed : state_.seed ^ stable_hash(inject_id);
    auto gen = generate(spec, scenario_, fabric_.graph, state_.clock + 1);
    if (!gen) return InstanceError{gen.error().code, gen.error().message};
    ++inject_count_;
    auto& flows = gen->flows;
    for (auto& f : flows) f.id = next_flow_id_++;
    json summary{{"id", inject_id},
                 {"spec", to_json(spec)},
                 {"flows", flows.size()},
                 {"first_flow", flows.empty() ? json(nullptr) : json(flows.front().id)},
                 {"first_tick", flows.empty() ? json(nullptr) : json(flows.front().tick)},
                 {"last_tick", flows.empty() ? json(nullptr) : json(flows.back().tick)},
                 {"summary", gen->summary}};
    pending_.insert(pending_.end(), flows.begin(), flows.end());
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const FlowEvent& a, const FlowEvent& b) { return a.tick < b.tick; });
    EventDraft ev{state_.clock, "inject", summary};
    return std::pair{summary, std::vector<EventDraft>{ev}};
  }

  // Everything needed to continue the instance bit-for-bit.
  json to_body() const {
    std::vector<std::string> rules;
    for (const auto& r : fabric_.ruleset.rules) rules.push_back(format_rule(r));
    return json{{"state", state_},
                {"scenario_dsl", dsl::serialize(scenario_)},
                {"ruleset", rules},
                {"fabric_state", fabric_state_to_json(net_)},
                {"pending", pending_},
                {"next_flow_id", next_flow_id_},
                {"inject_count", inject_count_}};
  }

  static Result<RangeInstance, InstanceError> from_body(const json& body) {
    try {
      auto s = dsl::parse(body.at("scenario_dsl").get<std::string>());
      if (!s) return InstanceError{"E_CORRUPT", "stored scenario does not parse: " + format_error(s.error().front())};
      std::string text;
      for (const auto& line : body.at("ruleset")) text += line.get<std::string>() + "\n";
      auto rules = load_ruleset(text);
      if (!rules) return InstanceError{"E_CORRUPT", "stored ruleset does not load"};
      RangeInstance inst;
      inst.scenario_ = std::move(s.value());
      inst.fabric_ = Fabric::from_scenario(inst.scenario_, std::move(rules.value()));
      inst.state_ = body.at("state").get<InstanceState>();
      inst.net_ = fabric_state_from_json(body.at("fabric_state"));
      inst.pending_ = body.at("pending").get<std::vector<FlowEvent>>();
      inst.next_flow_id_ = body.at("next_flow_id").get<std::uint64_t>();
      inst.inject_count_ = body.at("inject_count").get<std::uint64_t>();
      return inst;
    } catch (const std::exception& e) {
      return InstanceError{"E_CORRUPT", std::string("malformed instance body: ") + e.what()};
    }
  }

 private:
  RangeInstance() = default;

  Scenario scenario_;
  Fabric fabric_;
  InstanceState state_;
  FabricState net_;
  std::vector<FlowEvent> pending_;  // ordered by tick, then submission
  std::uint64_t next_flow_id_ = 1;
  std::uint64_t inject_count_ = 0;
};

}  // namespace rangeforge
