#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/core/rng.hpp"
#include "rangeforge/placement.hpp"
#include "rangeforge/scenario.hpp"

namespace rangeforge {

// Virtual time. One tick is 100 ms; wall-clock time is never consulted.
using Tick = std::uint64_t;
inline constexpr std::uint64_t kTickMillis = 100;

// PLACING is reserved for backends that place asynchronously; placement is
// synchronous here, so instances go straight from instantiate() to DEFINED.
enum class Phase { defined, placing, provisioning, running, paused, resetting, destroying, destroyed, failed };
enum class VmState { pending, creating, running, stopped, failed };
enum class Command { start, pause, resume, reset, destroy };
enum class Cause { command, timer, failure };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::defined: return "DEFINED";
    case Phase::placing: return "PLACING";
    case Phase::provisioning: return "PROVISIONING";
    case Phase::running: return "RUNNING";
    case Phase::paused: return "PAUSED";
    case Phase::resetting: return "RESETTING";
    case Phase::destroying: return "DESTROYING";
    case Phase::destroyed: return "DESTROYED";
    case Phase::failed: return "FAILED";
  }
  return "DEFINED";
}

inline std::optional<Phase> parse_phase(std::string_view s) {
  for (Phase p : {Phase::defined, Phase::placing, Phase::provisioning, Phase::running, Phase::paused,
                  Phase::resetting, Phase::destroying, Phase::destroyed, Phase::failed})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

inline std::string_view to_string(VmState v) {
  switch (v) {
    case VmState::pending: return "PENDING";
    case VmState::creating: return "CREATING";
    case VmState::running: return "RUNNING";
    case VmState::stopped: return "STOPPED";
    case VmState::failed: return "FAILED";
  }
  return "PENDING";
}

inline std::optional<VmState> parse_vm_state(std::string_view s) {
  for (VmState v : {VmState::pending, VmState::creating, VmState::running, VmState::stopped, VmState::failed})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::start: return "start";
    case Command::pause: return "pause";
    case Command::resume: return "resume";
    case Command::reset: return "reset";
    case Command::destroy: return "destroy";
  }
  return "start";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (Command c : {Command::start, Command::pause, Command::resume, Command::reset, Command::destroy})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::string_view to_string(Cause c) {
  switch (c) {
    case Cause::command: return "command";
    case Cause::timer: return "timer";
    case Cause::failure: return "failure";
  }
  return "command";
}

inline std::optional<Cause> parse_cause(std::string_view s) {
  for (Cause c : {Cause::command, Cause::timer, Cause::failure})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct VmRecord {
  std::string node;
  VmState state = VmState::pending;
  std::optional<Tick> ready_at;  // creation completes at this tick; nullopt = backend refused
  bool create_requested = false; // CREATING transition due on the next tick
  std::uint64_t draws = 0;       // jitter values consumed from this VM's generator

  friend bool operator==(const VmRecord&, const VmRecord&) = default;
};

struct InstanceState {
  std::string id;
  std::string scenario;
  Phase phase = Phase::defined;
  std::vector<VmRecord> vms;  // scenario node order
  Tick clock = 0;
  std::uint64_t seed = 0;
  std::optional<Tick> destroy_at;
  PlacementPlan plan;

  friend bool operator==(const InstanceState&, const InstanceState&) = default;

  const VmRecord* vm(std::string_view node) const {
    for (const auto& v : vms)
      if (v.node == node) return &v;
    return nullptr;
  }
  bool all_vms(VmState s) const {
    for (const auto& v : vms)
      if (v.state != s) return false;
    return true;
  }
  bool terminal() const { return phase == Phase::destroyed; }
};

struct LifecycleEvent {
  Tick tick = 0;
  std::string subject;  // instance id or node name
  std::string from_state;
  std::string to_state;
  Cause cause = Cause::command;

  friend bool operator==(const LifecycleEvent&, const LifecycleEvent&) = default;
};

struct TransitionError {
  Phase phase;
  std::optional<Command> command;  // nullopt: step on a terminal instance
  std::string message() const {
    if (!command) return "instance is " + std::string(to_string(phase)) + "; stepping is not allowed";
    return "command '" + std::string(to_string(*command)) + "' is not allowed in phase " +
           std::string(to_string(phase));
  }
};

// ---------------------------------------------------------------------------
// Backend drivers.

struct VmRequest {
  std::string node;
  int cpu = 0;
  int ram_mb = 0;
  std::string host;
  std::uint64_t instance_seed = 0;
};

inline constexpr Tick kBaseCreateLatency = 5;
inline constexpr Tick kDestroyLatency = 2;

class BackendDriver {
 public:
  virtual ~BackendDriver() = default;
  // Starts creating a VM at `now`; `draw` is the index of the jitter value to
  // use. Returns the completion tick, or nullopt when the backend refuses.
  virtual std::optional<Tick> create_vm(const VmRequest& req, std::uint64_t draw, Tick now) = 0;
  virtual void destroy_vm(const VmRequest& req, Tick now) = 0;
  virtual VmState query_state(const VmRecord& vm, Tick now) const = 0;
};

// Deterministic simulator: latency = 5 + jitter, jitter = low 2 bits of the
// draw-th output of splitmix64 seeded with (instance seed XOR hash(node)).
class SimulatedBackend : public BackendDriver {
 public:
  SimulatedBackend() = default;
  explicit SimulatedBackend(std::set<std::string> failing_nodes) : failing_(std::move(failing_nodes)) {}

  static Tick jitter(std::uint64_t seed, std::string_view node, std::uint64_t draw) {
    return keyed_draw(seed, node, draw) & 0x3;
  }

  std::optional<Tick> create_vm(const VmRequest& req, std::uint64_t draw, Tick now) override {
    if (failing_.count(req.node)) return std::nullopt;
    return now + kBaseCreateLatency + jitter(req.instance_seed, req.node, draw);
  }
  void destroy_vm(const VmRequest&, Tick) override {}
  VmState query_state(const VmRecord& vm, Tick now) const override {
    if (vm.state == VmState::creating && vm.ready_at && *vm.ready_at <= now) return VmState::running;
    if ((vm.state == VmState::pending || vm.state == VmState::creating) && !vm.ready_at)
      return VmState::failed;
    return vm.state;
  }

 private:
  std::set<std::string> failing_;
};

// Stands where a libvirt/oVirt driver would go: records the commands a real
// backend would issue and takes its timing from the simulator.
class CommandLogBackend : public BackendDriver {
 public:
  std::optional<Tick> create_vm(const VmRequest& req, std::uint64_t draw, Tick now) override {
    commands_.push_back("vm create --name " + req.node + " --host " + req.host + " --cpus " +
                        std::to_string(req.cpu) + " --memory " + std::to_string(req.ram_mb) + "M");
    return sim_.create_vm(req, draw, now);
  }
  void destroy_vm(const VmRequest& req, Tick now) override {
    commands_.push_back("vm destroy --name " + req.node + " --host " + req.host);
    sim_.destroy_vm(req, now);
  }
  VmState query_state(const VmRecord& vm, Tick now) const override { return sim_.query_state(vm, now); }

  const std::vector<std::string>& commands() const { return commands_; }

 private:
  SimulatedBackend sim_;
  std::vector<std::string> commands_;
};

// ---------------------------------------------------------------------------
// Operations.

// A fresh instance in DEFINED with all VMs PENDING at tick 0. Placement
// failures are returned, not thrown; an invalid scenario is a caller error.
inline Result<InstanceState, Infeasible> instantiate(const Scenario& s, const ClusterSpec& cluster,
                                                     std::uint64_t seed, std::string id = {}) {
  auto placed = plan(vms_for(s), cluster);
  if (!placed) return placed.error();
  InstanceState st;
  st.id = std::move(id);
  st.scenario = s.name;
  st.seed = seed;
  st.plan = std::move(placed.value());
  for (const auto& n : s.nodes) st.vms.push_back(VmRecord{n.name, VmState::pending, std::nullopt, false, 0});
  return st;
}

namespace detail {

inline VmRequest request_for(const InstanceState& st, const VmRecord& vm, const Scenario* s) {
  VmRequest req;
  req.node = vm.node;
  req.instance_seed = st.seed;
  if (auto it = st.plan.assignments.find(vm.node); it != st.plan.assignments.end()) req.host = it->second;
  if (s)
    if (const NodeSpec* n = s->find_node(vm.node)) {
      req.cpu = n->cpu;
      req.ram_mb = n->ram_mb;
    }
  return req;
}

inline void request_creation(InstanceState& st, BackendDriver& backend, const Scenario* s) {
  for (auto& vm : st.vms) {
    vm.ready_at = backend.create_vm(request_for(st, vm, s), vm.draws, st.clock);
    ++vm.draws;
    vm.create_requested = true;
  }
}

inline LifecycleEvent phase_event(const InstanceState& st, Phase from, Phase to, Cause cause) {
  return {st.clock, st.id, std::string(to_string(from)), std::string(to_string(to)), cause};
}

}  // namespace detail

struct CommandOutcome {
  InstanceState state;
  LifecycleEvent event;
};

// Transition table:
//   DEFINED      --start-->   PROVISIONING
//   RUNNING      --pause-->   PAUSED
//   PAUSED       --resume-->  RUNNING
//   RUNNING|PAUSED --reset--> RESETTING
//   any phase except DESTROYING/DESTROYED --destroy--> DESTROYING
// Exactly one command-caused event per accepted command.
inline Result<CommandOutcome, TransitionError> apply_command(InstanceState st, Command cmd,
                                                             BackendDriver& backend,
                                                             const Scenario* scenario = nullptr) {
  const Phase from = st.phase;
  std::optional<Phase> to;
  switch (cmd) {
    case Command::start:
      if (from == Phase::defined) to = Phase::provisioning;
      break;
    case Command::pause:
      if (from == Phase::running) to = Phase::paused;
      break;
    case Command::resume:
      if (from == Phase::paused) to = Phase::running;
      break;
    case Command::reset:
      if (from == Phase::running || from == Phase::paused) to = Phase::resetting;
      break;
    case Command::destroy:
      if (from != Phase::destroying && from != Phase::destroyed) to = Phase::destroying;
      break;
  }
  if (!to) return TransitionError{from, cmd};

  st.phase = *to;
  if (cmd == Command::start || cmd == Command::reset) detail::request_creation(st, backend, scenario);
  if (cmd == Command::destroy) {
    st.destroy_at = st.clock + kDestroyLatency;
    for (auto& vm : st.vms) vm.create_requested = false;
  }
  auto ev = detail::phase_event(st, from, *to, Cause::command);
  return CommandOutcome{std::move(st), std::move(ev)};
}

inline Result<CommandOutcome, TransitionError> apply_command(InstanceState st, Command cmd) {
  SimulatedBackend sim;
  return apply_command(std::move(st), cmd, sim);
}

struct StepOutcome {
  InstanceState state;
  std::vector<LifecycleEvent> events;
};

// Advances lifecycle timers by exactly one tick (clock += 1, then due work).
inline void advance_one_tick(InstanceState& st, BackendDriver& backend,
                             std::vector<LifecycleEvent>& events, const Scenario* scenario = nullptr) {
  ++st.clock;
  auto vm_event = [&](VmRecord& vm, VmState to, Cause cause) {
    events.push_back({st.clock, vm.node, std::string(to_string(vm.state)), std::string(to_string(to)), cause});
    vm.state = to;
  };
  auto set_phase = [&](Phase to, Cause cause) {
    events.push_back(detail::phase_event(st, st.phase, to, cause));
    st.phase = to;
  };

  if (st.phase == Phase::provisioning || st.phase == Phase::resetting) {
    bool failed = false;
    for (auto& vm : st.vms) {
      if (vm.create_requested) {
        vm.create_requested = false;
        if (vm.state != VmState::creating) vm_event(vm, VmState::creating, Cause::timer);
      }
      if (vm.state != VmState::creating) continue;
      const VmState observed = backend.query_state(vm, st.clock);
      if (observed == VmState::running) vm_event(vm, VmState::running, Cause::timer);
      if (observed == VmState::failed) {
        vm_event(vm, VmState::failed, Cause::failure);
        failed = true;
      }
    }
    if (failed) set_phase(Phase::failed, Cause::failure);
    else if (st.all_vms(VmState::running)) set_phase(Phase::running, Cause::timer);
    return;
  }
  if (st.phase == Phase::destroying && st.destroy_at && st.clock >= *st.destroy_at) {
    for (auto& vm : st.vms) {
      if (vm.state == VmState::stopped) continue;
      backend.destroy_vm(detail::request_for(st, vm, scenario), st.clock);
      vm_event(vm, VmState::stopped, Cause::timer);
    }
    st.destroy_at.reset();
    set_phase(Phase::destroyed, Cause::timer);
  }
}

// Advances the virtual clock by `ticks`. Stops early once the instance
// reaches DESTROYED. Rejected on an already destroyed instance.
inline Result<StepOutcome, TransitionError> step(InstanceState st, Tick ticks, BackendDriver& backend,
                                                 const Scenario* scenario = nullptr) {
  if (st.terminal()) return TransitionError{st.phase, std::nullopt};
  StepOutcome out;
  for (Tick i = 0; i < ticks && !st.terminal(); ++i) advance_one_tick(st, backend, out.events, scenario);
  out.state = std::move(st);
  return out;
}

inline Result<StepOutcome, TransitionError> step(InstanceState st, Tick ticks) {
  SimulatedBackend sim;
  return step(std::move(st), ticks, sim);
}

}  // namespace rangeforge
