// Placement, lifecycle, detection, network simulation and injects.

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace rangeforge;

namespace {

// Frozen goldens; each is also recomputed by an oracle below.
constexpr Tick kScenario1Seed42Running = 7;
constexpr std::uint64_t kDdosSeed7Digest = 6948728238921567945ULL;

std::vector<VMSpec> uniform_vms(int n, int cpu, int ram, std::optional<std::string> group = {}) {
  std::vector<VMSpec> v;
  for (int i = 1; i <= n; ++i) v.push_back({"vm" + std::to_string(i), cpu, ram, group});
  return v;
}

FlowEvent flow_between(const TopologyGraph& g, const std::string& src, const std::string& dst, std::uint16_t port,
                       std::set<std::string> tags = {}, std::uint64_t id = 0, Tick tick = 1) {
  FlowEvent f;
  f.id = id;
  f.tick = tick;
  f.src_node = src;
  f.dst_node = dst;
  f.src_ip = *g.primary_address(src);
  f.dst_ip = *g.primary_address(dst);
  f.src_port = 40000;
  f.dst_port = port;
  f.payload_tags = std::move(tags);
  return f;
}

template <typename T>
std::vector<T> only(const std::vector<NetEvent>& evs) {
  std::vector<T> out;
  for (const auto& e : evs)
    if (auto* p = std::get_if<T>(&e)) out.push_back(*p);
  return out;
}

Ruleset rules_of(std::string_view text) {
  auto r = load_ruleset(text);
  EXPECT_TRUE(r);
  return r ? r.value() : Ruleset{};
}

}  // namespace

// ---- placement ------------------------------------------------------------------

TEST(Placement, FirstFitDecreasingOnTwoHosts) {
  const ClusterSpec cluster{{"H1", 8, 16384}, {"H2", 4, 8192}};
  const auto vms = uniform_vms(5, 2, 4096);
  auto p = plan(vms, cluster);
  ASSERT_TRUE(p);
  int on_h1 = 0;
  for (const auto& [vm, host] : p->assignments) on_h1 += host == "H1";
  EXPECT_EQ(on_h1, 4);
  EXPECT_EQ(p->assignments.at("vm5"), "H2");
  EXPECT_TRUE(verify_plan(*p, vms, cluster));
  EXPECT_TRUE(exhaustive_feasible(vms, cluster));
  EXPECT_TRUE(oracle::brute_force_feasible(vms, cluster));
  ASSERT_EQ(p->residuals.size(), 2u);
  EXPECT_EQ(p->residuals[0], (HostResidual{"H1", 0, 0}));
  EXPECT_EQ(p->residuals[1], (HostResidual{"H2", 2, 4096}));
}

TEST(Placement, CapacityInfeasible) {
  const ClusterSpec cluster{{"a", 8, 8192}, {"b", 8, 8192}};
  const auto vms = uniform_vms(3, 1, 8192);
  auto p = plan(vms, cluster);
  ASSERT_FALSE(p);
  EXPECT_EQ(p.error().binding, BindingConstraint::capacity);
  EXPECT_FALSE(exhaustive_feasible(vms, cluster));
  EXPECT_FALSE(oracle::brute_force_feasible(vms, cluster));
}

TEST(Placement, AntiAffinityInfeasible) {
  const ClusterSpec cluster{{"solo", 64, 65536}};
  auto p = plan(uniform_vms(2, 1, 1024, "g"), cluster);
  ASSERT_FALSE(p);
  EXPECT_EQ(p.error().binding, BindingConstraint::anti_affinity);
  EXPECT_EQ(to_string(p.error().binding), "anti-affinity");
}

TEST(Placement, VerifyPlanCatchesViolations) {
  const ClusterSpec cluster{{"H1", 8, 16384}, {"H2", 4, 8192}};
  const auto vms = uniform_vms(5, 2, 4096);
  auto p = plan(vms, cluster).value();
  auto moved = p;
  moved.assignments["vm5"] = "H1";
  EXPECT_FALSE(verify_plan(moved, vms, cluster));
  auto missing = p;
  missing.assignments.erase("vm3");
  EXPECT_FALSE(verify_plan(missing, vms, cluster));
  auto stale = p;
  stale.residuals[1].cpu = 4;
  EXPECT_FALSE(verify_plan(stale, vms, cluster));
  auto grouped = uniform_vms(2, 1, 1, "g");
  PlacementPlan together{{{"vm1", "H1"}, {"vm2", "H1"}}, {{"H1", 6, 16382}, {"H2", 4, 8192}}};
  EXPECT_FALSE(verify_plan(together, grouped, cluster));
  PlacementPlan empty{{}, {{"H1", 8, 16384}, {"H2", 4, 8192}}};
  EXPECT_TRUE(verify_plan(empty, {}, cluster));
  auto e = plan({}, cluster);
  ASSERT_TRUE(e);
  EXPECT_TRUE(verify_plan(*e, {}, cluster));
}

TEST(Placement, ExhaustiveOracleGuardsSize) {
  EXPECT_TRUE(exhaustive_feasible({}, {{"h", 1, 1}}));
  EXPECT_THROW(exhaustive_feasible(uniform_vms(13, 1, 1), {{"h", 64, 65536}}), OversizeInstance);
}

TEST(Placement, ExactFallbackFindsWhatFirstFitMisses) {
  // FFD puts 6 and 5 together... then 4,4,... a classic bin-packing trap.
  const ClusterSpec cluster{{"a", 16, 10}, {"b", 16, 10}};
  const std::vector<VMSpec> vms{{"p", 1, 6}, {"q", 1, 4}, {"r", 1, 3}, {"s", 1, 3}, {"t", 1, 4}};
  auto p = plan(vms, cluster);
  ASSERT_TRUE(p);
  EXPECT_TRUE(verify_plan(*p, vms, cluster));
}

TEST(Placement, RandomInstancesMatchBruteForce) {
  oracle::Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    ClusterSpec cluster;
    const int hosts = oracle::uniform(rng, 1, 4);
    for (int h = 0; h < hosts; ++h)
      cluster.push_back({"h" + std::to_string(h), oracle::uniform(rng, 2, 8), 1024 * oracle::uniform(rng, 2, 8)});
    std::vector<VMSpec> vms;
    const int n = oracle::uniform(rng, 0, 6);
    for (int k = 0; k < n; ++k) {
      std::optional<std::string> g;
      if (oracle::uniform(rng, 0, 2) == 0) g = "g" + std::to_string(oracle::uniform(rng, 0, 1));
      vms.push_back({"v" + std::to_string(k), oracle::uniform(rng, 1, 4), 512 * oracle::uniform(rng, 1, 8), g});
    }
    auto p = plan(vms, cluster);
    EXPECT_EQ(p.has_value(), oracle::brute_force_feasible(vms, cluster)) << i;
    EXPECT_EQ(p.has_value(), exhaustive_feasible(vms, cluster)) << i;
    if (p) {
      EXPECT_TRUE(verify_plan(*p, vms, cluster));
      EXPECT_EQ(*p, plan(vms, cluster).value());
    }
  }
}

TEST(Placement, ScenarioVmsCarryGroups) {
  auto s = scenario_1();
  s.constraints.push_back({{"ubuntu-srv", "win-srv"}});
  const auto vms = vms_for(s);
  ASSERT_EQ(vms.size(), 4u);
  EXPECT_EQ(vms[2].anti_affinity_group, "separate-0");
  EXPECT_EQ(vms[3].anti_affinity_group, "separate-0");
  EXPECT_FALSE(vms[0].anti_affinity_group);
}

// ---- lifecycle --------------------------------------------------------------------

namespace {
const ClusterSpec kOneHost{{"hv1", 16, 32768}};

InstanceState started(const Scenario& s, std::uint64_t seed) {
  auto st = instantiate(s, kOneHost, seed, "t").value();
  return apply_command(st, Command::start)->state;
}
}  // namespace

TEST(Lifecycle, InstantiateIsDefinedWithPendingVms) {
  auto st = instantiate(scenario_1(), kOneHost, 42, "a");
  ASSERT_TRUE(st);
  EXPECT_EQ(st->phase, Phase::defined);
  EXPECT_EQ(st->clock, 0u);
  ASSERT_EQ(st->vms.size(), 4u);
  for (const auto& v : st->vms) EXPECT_EQ(v.state, VmState::pending);
  EXPECT_EQ(st->plan.assignments.size(), 4u);
  auto other = instantiate(scenario_1(), kOneHost, 42, "b").value();
  other.id = "a";
  EXPECT_EQ(other, *st);
}

TEST(Lifecycle, TooSmallClusterIsInfeasible) {
  auto st = instantiate(scenario_3(), {{"tiny", 2, 2048}}, 1);
  ASSERT_FALSE(st);
  EXPECT_EQ(st.error().binding, BindingConstraint::capacity);
}

TEST(Lifecycle, TransitionTable) {
  const std::map<std::pair<Phase, Command>, Phase> table{
      {{Phase::defined, Command::start}, Phase::provisioning},
      {{Phase::running, Command::pause}, Phase::paused},
      {{Phase::paused, Command::resume}, Phase::running},
      {{Phase::running, Command::reset}, Phase::resetting},
      {{Phase::paused, Command::reset}, Phase::resetting},
  };
  const Phase phases[] = {Phase::defined, Phase::placing, Phase::provisioning, Phase::running, Phase::paused,
                          Phase::resetting, Phase::destroying, Phase::destroyed, Phase::failed};
  const Command cmds[] = {Command::start, Command::pause, Command::resume, Command::reset, Command::destroy};
  auto base = instantiate(scenario_1(), kOneHost, 1, "t").value();
  for (Phase p : phases)
    for (Command c : cmds) {
      auto st = base;
      st.phase = p;
      auto out = apply_command(st, c);
      std::optional<Phase> want;
      if (auto it = table.find({p, c}); it != table.end()) want = it->second;
      if (c == Command::destroy && p != Phase::destroying && p != Phase::destroyed) want = Phase::destroying;
      ASSERT_EQ(out.has_value(), want.has_value()) << to_string(p) << " " << to_string(c);
      if (!want) {
        EXPECT_EQ(out.error().phase, p);
        continue;
      }
      EXPECT_EQ(out->state.phase, *want);
      EXPECT_EQ(out->event.cause, Cause::command);
      EXPECT_EQ(out->event.from_state, to_string(p));
      EXPECT_EQ(out->event.to_state, to_string(*want));
    }
}

TEST(Lifecycle, ProvisioningReachesRunningAtGoldenTick) {
  auto st = started(scenario_1(), 42);
  auto out = step(st, 10);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->state.phase, Phase::running);
  std::optional<Tick> t_star;
  for (const auto& e : out->events)
    if (e.subject == "t" && e.to_state == "RUNNING") t_star = e.tick;
  ASSERT_TRUE(t_star);
  EXPECT_GE(*t_star, 5u);
  EXPECT_LE(*t_star, 8u);
  EXPECT_EQ(*t_star, oracle::time_to_running(scenario_1(), 42));
  EXPECT_EQ(*t_star, kScenario1Seed42Running);
}

TEST(Lifecycle, VmEventsFollowCreatingThenRunning) {
  auto out = step(started(scenario_1(), 42), 10).value();
  std::map<std::string, std::vector<std::string>> seq;
  for (const auto& e : out.events)
    if (e.subject != "t") {
      seq[e.subject].push_back(e.to_state);
      EXPECT_EQ(e.cause, Cause::timer);
    }
  for (const auto& n : scenario_1().nodes) {
    EXPECT_EQ(seq[n.name], (std::vector<std::string>{"CREATING", "RUNNING"})) << n.name;
  }
  for (const auto& e : out.events)
    if (e.to_state == "CREATING") { EXPECT_EQ(e.tick, 1u); }
}

TEST(Lifecycle, StepIsAdditive) {
  for (std::uint64_t seed : {1ULL, 42ULL, 99ULL}) {
    auto st = started(scenario_3(), seed);
    for (Tick k = 0; k <= 9; ++k) {
      auto whole = step(st, 12).value();
      auto a = step(st, k).value();
      auto b = step(a.state, 12 - k).value();
      EXPECT_EQ(whole.state, b.state);
      auto joined = a.events;
      joined.insert(joined.end(), b.events.begin(), b.events.end());
      ASSERT_EQ(joined.size(), whole.events.size());
      for (std::size_t i = 0; i < joined.size(); ++i) {
        EXPECT_EQ(joined[i].tick, whole.events[i].tick);
        EXPECT_EQ(joined[i].subject, whole.events[i].subject);
        EXPECT_EQ(joined[i].to_state, whole.events[i].to_state);
      }
    }
  }
}

TEST(Lifecycle, DestroyTakesTwoTicksThenRejectsEverything) {
  auto st = step(started(scenario_1(), 3), 10)->state;
  auto d = apply_command(st, Command::destroy);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->state.phase, Phase::destroying);
  auto one = step(d->state, 1).value();
  EXPECT_EQ(one.state.phase, Phase::destroying);
  auto two = step(one.state, 5).value();
  EXPECT_EQ(two.state.phase, Phase::destroyed);
  EXPECT_EQ(two.state.clock, d->state.clock + 2);  // stops early
  EXPECT_TRUE(two.state.all_vms(VmState::stopped));
  EXPECT_FALSE(step(two.state, 1));
  for (Command c : {Command::start, Command::pause, Command::resume, Command::reset, Command::destroy})
    EXPECT_FALSE(apply_command(two.state, c));
  EXPECT_FALSE(apply_command(d->state, Command::destroy));
}

TEST(Lifecycle, ResetDrawsFreshLatencies) {
  auto st = step(started(scenario_1(), 42), 10)->state;
  auto r = apply_command(st, Command::reset).value().state;
  EXPECT_EQ(r.phase, Phase::resetting);
  auto out = step(r, 10).value();
  EXPECT_EQ(out.state.phase, Phase::running);
  Tick worst = 0;
  for (const auto& n : scenario_1().nodes) {
    const auto draws = oracle::splitmix_stream(42 ^ oracle::fnv1a(n.name), 2);
    worst = std::max<Tick>(worst, 5 + draws[1] % 4);
    EXPECT_EQ(out.state.vm(n.name)->draws, 2u);
  }
  for (const auto& e : out.events)
    if (e.subject == "t" && e.to_state == "RUNNING") { EXPECT_EQ(e.tick, st.clock + worst); }
}

TEST(Lifecycle, BackendFailureFailsTheInstance) {
  SimulatedBackend broken(std::set<std::string>{"kali"});
  auto st = instantiate(scenario_1(), kOneHost, 5, "t").value();
  st = apply_command(st, Command::start, broken)->state;
  auto out = step(st, 3, broken).value();
  EXPECT_EQ(out.state.phase, Phase::failed);
  EXPECT_EQ(out.state.vm("kali")->state, VmState::failed);
  EXPECT_EQ(out.events.back().cause, Cause::failure);
  EXPECT_TRUE(apply_command(out.state, Command::destroy));
}

TEST(Lifecycle, CommandLogBackendRecordsWouldBeCommands) {
  CommandLogBackend log;
  const auto s = scenario_1();
  auto st = instantiate(s, kOneHost, 5, "t").value();
  st = apply_command(st, Command::start, log, &s)->state;
  ASSERT_EQ(log.commands().size(), 4u);
  EXPECT_EQ(log.commands()[0], "vm create --name pfsense-fw --host hv1 --cpus 1 --memory 1024M");
  auto sim = apply_command(instantiate(s, kOneHost, 5, "t").value(), Command::start)->state;
  EXPECT_EQ(st, sim);
}

TEST(Lifecycle, RandomInterleavingsKeepInvariants) {
  oracle::Rng rng(17);
  for (int run = 0; run < 200; ++run) {
    const auto templates = builtin_templates();
    const auto& s = templates[oracle::uniform(rng, 0, 2)];
    auto st = instantiate(s, kOneHost, rng(), "t").value();
    Tick last_clock = 0;
    Tick provisioning_since = 0;
    bool provisioning = false;
    for (int op = 0; op < 40 && !st.terminal(); ++op) {
      if (oracle::uniform(rng, 0, 2) == 0) {
        auto out = apply_command(st, static_cast<Command>(oracle::uniform(rng, 0, 4)));
        if (out) st = out->state;
      } else {
        auto out = step(st, static_cast<Tick>(oracle::uniform(rng, 1, 4)));
        ASSERT_TRUE(out);
        st = out->state;
      }
      if (st.phase == Phase::running) {
        EXPECT_TRUE(st.all_vms(VmState::running));
      }
      if (st.phase == Phase::provisioning || st.phase == Phase::resetting) {
        if (!provisioning) provisioning_since = st.clock;
        provisioning = true;
        EXPECT_LE(st.clock - provisioning_since, 8u);
      } else {
        provisioning = false;
      }
      EXPECT_GE(st.clock, last_clock);
      last_clock = st.clock;
    }
  }
}

// ---- detection ----------------------------------------------------------------------

TEST(Rules, ParsesTheDocumentedExamples) {
  auto r = parse_rule(R"(alert tcp any any -> 10.10.1.0/24 22 (msg:"ssh brute"; sid:100; tag:"ssh-bruteforce";))");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->action, RuleAction::alert);
  EXPECT_EQ(r->dst_port, PortMatch::single(22));
  EXPECT_EQ(r->tag, "ssh-bruteforce");
  EXPECT_EQ(r->sid, 100u);
  auto d = parse_rule(R"(drop tcp any any -> any 80 (msg:"sqli"; sid:200; tag:"sql-injection";))");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->action, RuleAction::drop);
  auto m = parse_rule(R"(alert tcp any any -> any 22 (msg:"x";))");
  ASSERT_FALSE(m);
  EXPECT_EQ(m.error().code, "E_MISSING_SID");
}

TEST(Rules, RejectsMalformedRulesWithPositions) {
  const std::map<std::string, std::string> cases{
      {R"(pass tcp any any -> any 22 (sid:1;))", "E_BAD_ACTION"},
      {R"(alert sctp any any -> any 22 (sid:1;))", "E_BAD_PROTO"},
      {R"(alert tcp 10.0.0.1/8 any -> any 22 (sid:1;))", "E_BAD_ADDR"},
      {R"(alert tcp any any -> any 70000 (sid:1;))", "E_BAD_PORT"},
      {R"(alert tcp any any any 22 (sid:1;))", "E_SYNTAX"},
      {R"(alert tcp any any -> any 22 (msg:"open; sid:1;))", "E_UNTERMINATED"},
      {R"(alert tcp any any -> any 22 (sid:1; sid:2;))", "E_DUP_OPTION"},
      {R"(alert tcp any any -> any 22 (sid:0;))", "E_BAD_SID"},
      {R"(alert tcp any any -> any 22 (sid:1; rate:0,5;))", "E_BAD_RATE"},
      {R"(alert tcp any any -> any 22 (sid:1; content:"x";))", "E_UNKNOWN_OPTION"},
  };
  for (const auto& [text, code] : cases) {
    auto r = parse_rule(text);
    ASSERT_FALSE(r) << text;
    EXPECT_EQ(r.error().code, code) << text;
    EXPECT_GE(r.error().span.column, 1);
    EXPECT_LE(r.error().span.column + r.error().span.length - 1, static_cast<int>(text.size())) << text;
  }
}

TEST(Rules, RulesetReportsEveryBadLineAndDuplicateSids) {
  auto rs = load_ruleset("alert tcp any any -> any 22 (sid:1;)\n# note\n\nbogus\nalert tcp any any -> any 23 (sid:1;)\n");
  ASSERT_FALSE(rs);
  ASSERT_EQ(rs.error().size(), 2u);
  EXPECT_EQ(rs.error()[0].span.line, 4);
  EXPECT_EQ(rs.error()[1].code, "E_DUP_SID");
  EXPECT_EQ(rs.error()[1].span.line, 5);
}

TEST(Rules, FormatParseRoundTrip) {
  oracle::Rng rng(2);
  for (const auto& r : oracle::random_rules(rng, 200)) {
    auto back = parse_rule(format_rule(r));
    ASSERT_TRUE(back) << format_rule(r);
    EXPECT_EQ(*back, r);
  }
  auto rate = parse_rule(R"(alert tcp any any -> any 22 (msg:"q\"d"; sid:9; rate:10,5;))").value();
  EXPECT_EQ(parse_rule(format_rule(rate)).value(), rate);
  EXPECT_EQ(rate.rate->window_ticks(), 50u);
}

TEST(Match, DocumentedExamples) {
  auto r = parse_rule(R"(alert tcp any any -> 10.10.1.0/24 22 (msg:"ssh brute"; sid:100; tag:"ssh-bruteforce";))").value();
  FlowEvent f;
  f.proto = Proto::tcp;
  f.dst_ip = Ipv4(10, 10, 1, 11);
  f.dst_port = 22;
  f.src_port = 50000;
  f.payload_tags = {"ssh-bruteforce"};
  EXPECT_TRUE(match_flow(r, f));
  auto untagged = f;
  untagged.payload_tags.clear();
  EXPECT_FALSE(match_flow(r, untagged));
  auto icmp = f;
  icmp.proto = Proto::icmp;
  icmp.src_port = icmp.dst_port = 0;
  EXPECT_FALSE(match_flow(r, icmp));
  auto rated = r;
  rated.rate = RateLimit{1, 1};
  EXPECT_FALSE(match_flow(rated, f));
}

TEST(Evaluate, InlineIpsDropsTapIdsDowngrades) {
  auto rules = rules_of(R"(drop tcp any any -> any 80 (msg:"sqli"; sid:200; tag:"sql-injection";))");
  FlowEvent f;
  f.dst_port = 80;
  f.src_port = 1234;
  f.payload_tags = {"sql-injection"};
  auto ips = evaluate({"fw", SensorMode::ips, true}, rules, f, 3);
  ASSERT_EQ(ips.alerts.size(), 1u);
  EXPECT_TRUE(ips.drop);
  EXPECT_EQ(ips.alerts[0].action_taken, ActionTaken::drop);
  auto ids = evaluate({"fw", SensorMode::ids, false}, rules, f, 3);
  ASSERT_EQ(ids.alerts.size(), 1u);
  EXPECT_FALSE(ids.drop);
  EXPECT_EQ(ids.alerts[0].action_taken, ActionTaken::downgraded_pass);
  auto inline_ids = evaluate({"fw", SensorMode::ids, true}, rules, f, 3);
  EXPECT_FALSE(inline_ids.drop);
}

TEST(Evaluate, AlertsAreOrderedBySid) {
  auto rules = rules_of("alert tcp any any -> any any (msg:\"b\"; sid:200;)\nalert tcp any any -> any any (msg:\"a\"; sid:100;)\n");
  FlowEvent f;
  f.dst_port = 1;
  auto v = evaluate({"s", SensorMode::ids, false}, rules, f, 0);
  ASSERT_EQ(v.alerts.size(), 2u);
  EXPECT_EQ(v.alerts[0].sid, 100u);
  EXPECT_EQ(v.alerts[1].sid, 200u);
  EXPECT_FALSE(v.drop);
}

TEST(Evaluate, MatchesTheNaiveOracle) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Ruleset rs{oracle::random_rules(rng, oracle::uniform(rng, 0, 20))};
    std::vector<FlowEvent> flows;
    for (int i = 0; i < oracle::uniform(rng, 0, 200); ++i) flows.push_back(oracle::random_flow(rng, i));
    const bool can_drop = trial % 2;
    std::vector<oracle::NaiveAlert> got;
    for (const auto& f : flows)
      for (const auto& a : evaluate({"s", can_drop ? SensorMode::ips : SensorMode::ids, can_drop}, rs, f, 0).alerts)
        got.push_back({a.flow_id, a.sid, std::string(to_string(a.action_taken))});
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, oracle::naive_alerts(rs.rules, flows, can_drop));
  }
}

namespace {
FlowEvent at(Tick t, std::uint16_t port = 80) {
  FlowEvent f;
  f.tick = t;
  f.dst_ip = Ipv4(10, 10, 1, 11);
  f.dst_port = port;
  return f;
}

int anomalies(const std::vector<FlowEvent>& flows, MonitorState st = {}) {
  int n = 0;
  for (const auto& f : flows) {
    auto [next, ev] = evaluate_window(std::move(st), f);
    st = std::move(next);
    if (ev) {
      ++n;
      EXPECT_GE(ev->observed_rate, ev->threshold);
    }
  }
  return n;
}
}  // namespace

TEST(Window, ThresholdCrossingWithinOneWindow) {
  std::vector<FlowEvent> flows;
  for (int i = 0; i < 150; ++i) flows.push_back(at(static_cast<Tick>(i / 2)));
  EXPECT_EQ(anomalies(flows), 1);
  flows.resize(99);
  EXPECT_EQ(anomalies(flows), 0);
  std::vector<FlowEvent> spread;
  for (int i = 0; i < 75; ++i) spread.push_back(at(0));
  for (int i = 0; i < 75; ++i) spread.push_back(at(100));
  EXPECT_EQ(anomalies(spread), 0);
}

TEST(Window, StatePassesThroughUnchangedOnOtherInputs) {
  MonitorState st;
  auto [a, ev] = evaluate_window(st, at(1));
  EXPECT_FALSE(ev);
  EXPECT_EQ(st, MonitorState{});  // old state is not touched
  EXPECT_NE(a, st);
}

TEST(Window, MatchesBruteForceRecount) {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    MonitorState st;
    st.threshold = static_cast<std::uint64_t>(oracle::uniform(rng, 1, 12));
    st.window = static_cast<Tick>(oracle::uniform(rng, 1, 20));
    std::vector<std::pair<EndpointKey, Tick>> log;
    std::vector<std::pair<std::size_t, std::uint64_t>> got;
    Tick t = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      t += static_cast<Tick>(oracle::uniform(rng, 0, 2));
      auto f = at(t, static_cast<std::uint16_t>(oracle::uniform(rng, 80, 82)));
      log.push_back({{f.dst_ip.value, f.dst_port}, t});
      auto [next, ev] = evaluate_window(std::move(st), f);
      st = std::move(next);
      if (ev) got.push_back({i, ev->observed_rate});
    }
    EXPECT_EQ(got, oracle::recount_window(log, st.window, st.threshold)) << trial;
  }
}

TEST(Window, RateRulesFireThroughTheirWindow) {
  auto rules = rules_of(R"(alert tcp any any -> any 22 (msg:"burst"; sid:7; tag:"ssh-bruteforce"; rate:10,5;))");
  SensorWindows w;
  std::vector<std::pair<RateKey, Tick>> log;
  std::vector<std::pair<std::size_t, std::uint64_t>> fired;
  for (std::size_t i = 0; i < 60; ++i) {
    auto f = at(static_cast<Tick>(i * 2), 22);
    f.payload_tags = {"ssh-bruteforce"};
    log.push_back({{7u, f.dst_ip.value, 22}, f.tick});
    auto [next, v] = evaluate({"s", SensorMode::ids, false}, rules, f, f.tick, std::move(w));
    w = std::move(next);
    if (!v.alerts.empty()) fired.push_back({i, 0});
  }
  auto want = oracle::recount_window(log, 50, 10);
  ASSERT_EQ(fired.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(fired[i].first, want[i].first);
  EXPECT_GE(fired.size(), 1u);
}

// ---- network simulation -------------------------------------------------------------

TEST(Route, ScenarioOneKaliToUbuntu) {
  const auto g = compile_topology(scenario_1());
  auto p = route_flow(g, "kali", "ubuntu-srv");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->vertices, (std::vector<std::string>{"kali", "sw:external", "pfsense-fw", "sw:internal", "ubuntu-srv"}));
  EXPECT_EQ(p->traversed_firewalls, std::vector<std::string>{"pfsense-fw"});
  EXPECT_EQ(p->vertices, *oracle::best_path(g, "kali", "ubuntu-srv"));
}

TEST(Route, TrivialAndFailingCases) {
  const auto g = compile_topology(scenario_1());
  auto self = route_flow(g, "kali", "kali");
  ASSERT_TRUE(self);
  EXPECT_EQ(self->vertices, std::vector<std::string>{"kali"});
  EXPECT_TRUE(self->traversed_firewalls.empty());
  EXPECT_EQ(route_flow(g, "kali", "ghost").error(), RouteFailure::unknown_node);

  auto s = scenario_1();
  s.networks.push_back({"island", false});
  s.nodes.push_back(detail::make_node("hermit", Role::target, "ubuntu", {{"eth0", "island", {}}}));
  const auto g2 = compile_topology(s);
  EXPECT_EQ(route_flow(g2, "kali", "hermit").error(), RouteFailure::unreachable);
  // Endpoints do not forward: a dual-homed target is not a bridge.
  s = scenario_1();
  s.nodes[2].interfaces.push_back({"eth1", "external", {}});
  const auto g3 = compile_topology(s);
  EXPECT_EQ(route_flow(g3, "kali", "win-srv")->vertices,
            (std::vector<std::string>{"kali", "sw:external", "pfsense-fw", "sw:internal", "win-srv"}));
}

TEST(Route, AgreesWithPathEnumerationEverywhere) {
  oracle::Rng rng(12);
  std::vector<Scenario> all = builtin_templates();
  for (int i = 0; i < 150; ++i) all.push_back(oracle::random_scenario(rng));
  for (const auto& s : all) {
    const auto g = compile_topology(s);
    for (const auto& a : s.nodes)
      for (const auto& b : s.nodes) {
        auto got = route_flow(g, a.name, b.name);
        auto want = oracle::best_path(g, a.name, b.name);
        ASSERT_EQ(got.has_value(), want.has_value()) << s.name << " " << a.name << "->" << b.name;
        if (got) { EXPECT_EQ(got->vertices, *want); }
      }
  }
}

TEST(Filter, DefaultPolicyAndFirstMatch) {
  const auto g = compile_topology(scenario_1());
  const auto f = flow_between(g, "kali", "ubuntu-srv", 80);
  const auto path = route_flow(g, f).value();
  FilterRulesets none{{"pfsense-fw", {}}};
  EXPECT_EQ(apply_filters(g, path, f, none), FilterVerdict(Filtered{"pfsense-fw", std::nullopt}));

  const FilterRule allow{FilterAction::allow, ProtoMatch{Proto::tcp}, {}, {}, *AddrMatch::parse("10.10.1.0/24"),
                         PortMatch::single(80)};
  const FilterRule deny{FilterAction::deny, ProtoMatch{Proto::tcp}, {}, {}, {}, PortMatch::single(80)};
  EXPECT_EQ(apply_filters(g, path, f, {{"pfsense-fw", {allow}}}), FilterVerdict(Delivered{}));
  EXPECT_EQ(apply_filters(g, path, f, {{"pfsense-fw", {deny, allow}}}), FilterVerdict(Filtered{"pfsense-fw", 0}));
  // Internal-side ingress defaults to allow.
  const auto back = flow_between(g, "ubuntu-srv", "kali", 5000);
  EXPECT_EQ(apply_filters(g, route_flow(g, back).value(), back, none), FilterVerdict(Delivered{}));
}

TEST(Filter, AppendingRulesNeverChangesEarlierDecisions) {
  oracle::Rng rng(31);
  const auto g = compile_topology(scenario_1());
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FilterRule> rules;
    for (int i = 0; i < oracle::uniform(rng, 1, 6); ++i)
      rules.push_back({oracle::uniform(rng, 0, 1) ? FilterAction::allow : FilterAction::deny, oracle::random_proto(rng),
                       oracle::random_addr(rng), oracle::random_port(rng), oracle::random_addr(rng),
                       oracle::random_port(rng)});
    auto f = flow_between(g, "kali", oracle::uniform(rng, 0, 1) ? "ubuntu-srv" : "win-srv",
                          static_cast<std::uint16_t>(oracle::uniform(rng, 1, 100)));
    f.proto = static_cast<Proto>(oracle::uniform(rng, 0, 1));
    const auto path = route_flow(g, f).value();
    const auto before = apply_filters(g, path, f, {{"pfsense-fw", rules}});
    auto* filtered = std::get_if<Filtered>(&before);
    bool decided_by_rule = filtered ? filtered->rule_index.has_value() : false;
    if (!filtered)
      for (const auto& r : rules) decided_by_rule |= filter_matches(r, f);
    auto more = rules;
    more.push_back({FilterAction::deny, {}, {}, {}, {}, {}});
    more.push_back({FilterAction::allow, {}, {}, {}, {}, {}});
    if (decided_by_rule) { EXPECT_EQ(apply_filters(g, path, f, {{"pfsense-fw", more}}), before); }
  }
}

TEST(Fabric, InlineIpsDropsAfterAlertTapDelivers) {
  auto fab2 = Fabric::from_scenario(scenario_2(), rules_of(kScenario2Rules));
  FabricState st2;
  auto f = flow_between(fab2.graph, "parrot", "metasploitable", 80, {"sql-injection"});
  auto ev = tick_network(Phase::running, fab2, st2, {f}, 1).value();
  ASSERT_EQ(ev.size(), 2u);
  ASSERT_TRUE(std::holds_alternative<AlertEvent>(ev[0]));
  EXPECT_EQ(std::get<AlertEvent>(ev[0]).sid, 2000003u);
  EXPECT_EQ(std::get<AlertEvent>(ev[0]).action_taken, ActionTaken::drop);
  ASSERT_TRUE(std::holds_alternative<DropEvent>(ev[1]));
  EXPECT_EQ(std::get<DropEvent>(ev[1]).stage, DropStage::ips);
  EXPECT_EQ(std::get<DropEvent>(ev[1]).sids, std::vector<std::uint32_t>{2000003});

  auto fab1 = Fabric::from_scenario(scenario_1(), rules_of(kScenario1Rules));
  FabricState st1;
  auto f1 = flow_between(fab1.graph, "kali", "ubuntu-srv", 80, {"sql-injection"});
  auto ev1 = tick_network(Phase::running, fab1, st1, {f1}, 1).value();
  ASSERT_EQ(ev1.size(), 2u);
  EXPECT_EQ(std::get<AlertEvent>(ev1[0]).action_taken, ActionTaken::downgraded_pass);
  EXPECT_TRUE(std::holds_alternative<DeliveryEvent>(ev1[1]));
}

TEST(Fabric, RejectsTrafficWhenNotRunning) {
  auto fab = Fabric::from_scenario(scenario_1(), {});
  FabricState st;
  for (Phase p : {Phase::defined, Phase::provisioning, Phase::paused, Phase::destroyed}) {
    auto r = tick_network(p, fab, st, {}, 1);
    ASSERT_FALSE(r);
    EXPECT_EQ(r.error().code, "E_NOT_RUNNING");
  }
}

TEST(Fabric, TapsObserveWithoutAffectingDelivery) {
  oracle::Rng rng(14);
  auto with = Fabric::from_scenario(scenario_1(), rules_of(kScenario1Rules));
  auto without = with;
  without.sensors.clear();
  std::vector<FlowEvent> flows;
  static const char* tags[] = {"port-scan", "ssh-bruteforce", "sql-injection", "ddos", "phishing"};
  const char* targets[] = {"ubuntu-srv", "win-srv"};
  for (int i = 0; i < 300; ++i)
    flows.push_back(flow_between(with.graph, "kali", targets[i % 2], static_cast<std::uint16_t>(oracle::uniform(rng, 1, 4000)),
                                 {tags[oracle::uniform(rng, 0, 4)]}, i, 1 + i / 10));
  FabricState a, b;
  auto ea = tick_network(Phase::running, with, a, flows, 1).value();
  auto eb = tick_network(Phase::running, without, b, flows, 1).value();
  auto delivered = [](const std::vector<NetEvent>& evs) {
    std::vector<std::uint64_t> ids;
    for (const auto& d : only<DeliveryEvent>(evs)) ids.push_back(d.flow_id);
    return ids;
  };
  EXPECT_EQ(delivered(ea), delivered(eb));
  EXPECT_FALSE(only<AlertEvent>(ea).empty());
  EXPECT_TRUE(only<AlertEvent>(eb).empty());
  // Determinism of the whole pipeline.
  FabricState c;
  EXPECT_EQ(tick_network(Phase::running, with, c, flows, 1).value(), ea);
}

TEST(Fabric, EveryDeliveryFollowsAnAllowedRoute) {
  auto fab = Fabric::from_scenario(scenario_2(), rules_of(kScenario2Rules));
  FabricState st;
  std::vector<FlowEvent> flows;
  for (std::uint16_t port = 1; port <= 200; ++port)
    flows.push_back(flow_between(fab.graph, "parrot", port % 2 ? "oracle-srv" : "metasploitable", port, {}, port));
  auto ev = tick_network(Phase::running, fab, st, flows, 1).value();
  for (const auto& d : only<DeliveryEvent>(ev)) {
    const auto& f = flows[d.flow_id - 1];
    const auto path = route_flow(fab.graph, f).value();
    EXPECT_EQ(d.path, path.vertices);
    EXPECT_EQ(apply_filters(fab.graph, path, f, fab.filters), FilterVerdict(Delivered{}));
  }
  EXPECT_EQ(only<DeliveryEvent>(ev).size(), 4u);  // 22, 25, 80, 143
  for (const auto& d : only<DropEvent>(ev)) EXPECT_EQ(d.stage, DropStage::filter);
}

// ---- injects --------------------------------------------------------------------------

TEST(Inject, CatalogIsTheClosedSetOfFive) {
  const auto& c = list_injects();
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(catalog_entry(InjectKind::ddos_flood).param("count")->default_value, 500);
  EXPECT_EQ(catalog_entry(InjectKind::sql_injection).service, ServiceKind::http);
  for (const auto& e : c) EXPECT_EQ(parse_inject_kind(to_string(e.kind)), e.kind);
}

TEST(Inject, PortScanIsOneFlowPerPort) {
  const auto s = scenario_1();
  const auto g = compile_topology(s);
  InjectSpec spec{InjectKind::port_scan, "kali", "ubuntu-srv", {{"port_from", 1}, {"port_to", 1024}}, 0};
  auto r = generate(spec, s, g, 10);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->flows.size(), 1024u);
  for (std::size_t i = 0; i < r->flows.size(); ++i) {
    const auto& f = r->flows[i];
    EXPECT_EQ(f.payload_tags, std::set<std::string>{"port-scan"});
    EXPECT_EQ(f.dst_port, i + 1);
    EXPECT_EQ(f.dst_ip.to_string(), "10.10.1.11");
    EXPECT_EQ(f.src_ip.to_string(), "203.0.113.11");
    EXPECT_EQ(f.tick, 10 + i / 16);
    EXPECT_TRUE(f.well_formed());
  }
  EXPECT_EQ(r->summary.at("port-scan"), 1024u);
}

TEST(Inject, PreconditionsAreCoded) {
  const auto s = scenario_1();
  const auto g = compile_topology(s);
  auto no_ssh = generate({InjectKind::ssh_bruteforce, "kali", "win-srv", {}, 0}, s, g, 0);
  ASSERT_FALSE(no_ssh);
  EXPECT_EQ(no_ssh.error().code, "E_NO_SERVICE");
  auto bad_src = generate({InjectKind::sql_injection, "ubuntu-srv", "ubuntu-srv", {}, 0}, s, g, 0);
  EXPECT_EQ(bad_src.error().code, "E_BAD_SOURCE");
  auto ghost = generate({InjectKind::sql_injection, "kali", "ghost", {}, 0}, s, g, 0);
  EXPECT_EQ(ghost.error().code, "E_UNKNOWN_NODE");
  auto zero = generate({InjectKind::ddos_flood, "kali", "ubuntu-srv", {{"count", 0}}, 0}, s, g, 0);
  EXPECT_EQ(zero.error().code, "E_BAD_PARAM");
  auto unknown = generate({InjectKind::ddos_flood, "kali", "ubuntu-srv", {{"size", 3}}, 0}, s, g, 0);
  EXPECT_EQ(unknown.error().code, "E_BAD_PARAM");
  const auto s3 = scenario_3();
  auto phish_from_operator = generate({InjectKind::phishing_mail, "operator-pc", "freebsd-srv", {}, 0}, s3,
                                      compile_topology(s3), 0);
  EXPECT_EQ(phish_from_operator.error().code, "E_NO_SERVICE");  // source is fine, target has no smtp
}

TEST(Inject, DdosSpoofedSourcesArePinnedBySeed) {
  const auto s = scenario_1();
  const auto g = compile_topology(s);
  InjectSpec spec{InjectKind::ddos_flood, "kali", "ubuntu-srv", {{"count", 500}}, 7};
  auto r = generate(spec, s, g, 0).value();
  ASSERT_EQ(r.flows.size(), 500u);
  std::vector<std::string> ips, want;
  for (const auto& f : r.flows) {
    ips.push_back(f.src_ip.to_string());
    EXPECT_TRUE(kSpoofRange.contains(f.src_ip));
    EXPECT_EQ(f.payload_tags, std::set<std::string>{"ddos"});
    EXPECT_EQ(f.dst_port, 80);
  }
  for (std::uint64_t v : oracle::splitmix_stream(7 ^ oracle::fnv1a("kali"), 500))
    want.push_back("198.51.100." + std::to_string(1 + v % 254));
  std::sort(ips.begin(), ips.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(ips, want);
  std::string joined;
  for (const auto& ip : ips) joined += ip + "\n";
  EXPECT_EQ(oracle::fnv1a(joined), kDdosSeed7Digest);
  EXPECT_EQ(r.flows.back().tick, 49u);  // 10 flows per tick
  EXPECT_EQ(generate(spec, s, g, 0).value().flows, r.flows);
  spec.seed = 8;
  EXPECT_NE(generate(spec, s, g, 0).value().flows, r.flows);
}

TEST(Inject, DefaultsPickTheFirstMatchingNodes) {
  auto spec = fill_defaults({InjectKind::phishing_mail, "", "", {}, 0}, scenario_2());
  EXPECT_EQ(spec.source_node, "parrot");
  EXPECT_EQ(spec.target_node, "oracle-srv");
  spec = fill_defaults({InjectKind::ssh_bruteforce, "", "", {}, 0}, scenario_3());
  EXPECT_EQ(spec.source_node, "kali");
  EXPECT_EQ(spec.target_node, "metasploitable");
}
