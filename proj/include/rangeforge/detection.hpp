#pragma once

// Signature/threshold rule engine.
//
// Rule grammar (the complete supported subset):
//
//   ACTION PROTO SRC SPORT -> DST DPORT ( key:value; ... )
//
//   ACTION  alert | drop
//   PROTO   tcp | udp | icmp | any
//   SRC/DST CIDR | a.b.c.d | any
//   PORT    N | lo:hi | any
//   options msg:"text"; sid:N; tag:"token"; rate:COUNT,SECONDS;
//
// sid is required and unique per ruleset. tag matches a flow payload tag.
// A rule with rate fires when COUNT matching flows towards one (dst ip, dst
// port) fall inside a sliding window of SECONDS, at most once per window.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "rangeforge/core/diagnostics.hpp"
#include "rangeforge/core/net.hpp"
#include "rangeforge/core/result.hpp"
#include "rangeforge/flow.hpp"
#include "rangeforge/scenario.hpp"

namespace rangeforge {

enum class RuleAction { alert, drop };

inline std::string_view to_string(RuleAction a) { return a == RuleAction::alert ? "alert" : "drop"; }

struct RateLimit {
  int count = 1;
  int seconds = 1;

  Tick window_ticks() const { return static_cast<Tick>(seconds) * (1000 / kTickMillis); }
  friend bool operator==(const RateLimit&, const RateLimit&) = default;
};

struct DetectionRule {
  RuleAction action = RuleAction::alert;
  ProtoMatch proto;
  AddrMatch src;
  PortMatch src_port;
  AddrMatch dst;
  PortMatch dst_port;
  std::string msg;
  std::uint32_t sid = 0;
  std::optional<std::string> tag;
  std::optional<RateLimit> rate;

  friend bool operator==(const DetectionRule&, const DetectionRule&) = default;
};

struct Ruleset {
  std::vector<DetectionRule> rules;  // load order

  const DetectionRule* find(std::uint32_t sid) const {
    for (const auto& r : rules)
      if (r.sid == sid) return &r;
    return nullptr;
  }
  std::set<std::string> tags() const {
    std::set<std::string> out;
    for (const auto& r : rules)
      if (r.tag) out.insert(*r.tag);
    return out;
  }
  friend bool operator==(const Ruleset&, const Ruleset&) = default;
};

// Canonical single-line text of a rule; parse_rule(format_rule(r)) == r.
inline std::string format_rule(const DetectionRule& r) {
  auto quote = [](std::string_view s) {
    std::string o = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') o += '\\';
      o += c;
    }
    return o + '"';
  };
  std::string out = std::string(to_string(r.action)) + ' ' + r.proto.to_string() + ' ' +
                    r.src.to_string() + ' ' + r.src_port.to_string() + " -> " + r.dst.to_string() +
                    ' ' + r.dst_port.to_string() + " (msg:" + quote(r.msg) +
                    "; sid:" + std::to_string(r.sid) + ';';
  if (r.tag) out += " tag:" + quote(*r.tag) + ';';
  if (r.rate) out += " rate:" + std::to_string(r.rate->count) + ',' + std::to_string(r.rate->seconds) + ';';
  return out + ')';
}

namespace detail {

class RuleScanner {
 public:
  RuleScanner(std::string_view text, int line) : s_(text), line_(line) {}

  Result<DetectionRule, ParseError> run() {
    DetectionRule r;
    auto word = header_word("action");
    if (!word) return err_;
    if (word->text == "alert") r.action = RuleAction::alert;
    else if (word->text == "drop") r.action = RuleAction::drop;
    else return fail(word->col, word->text.size(), "E_BAD_ACTION", "action must be alert or drop");

    if (!(word = header_word("protocol"))) return err_;
    if (auto p = ProtoMatch::parse(word->text)) r.proto = *p;
    else return fail(word->col, word->text.size(), "E_BAD_PROTO", "unknown protocol '" + word->text + "'");

    if (!addr_port(r.src, r.src_port)) return err_;
    if (!(word = header_word("'->'"))) return err_;
    if (word->text != "->") return fail(word->col, word->text.size(), "E_SYNTAX", "expected '->'");
    if (!addr_port(r.dst, r.dst_port)) return err_;

    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '(')
      return fail(col(), 1, "E_SYNTAX", "expected '(' opening the option list");
    const int open_col = col();
    ++pos_;
    std::set<std::string> seen;
    bool have_sid = false;
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) return fail(open_col, 1, "E_SYNTAX", "option list is not closed");
      if (s_[pos_] == ')') {
        ++pos_;
        break;
      }
      const int key_col = col();
      std::string key;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        key += s_[pos_++];
      if (key.empty()) return fail(key_col, 1, "E_SYNTAX", "expected an option name");
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ':')
        return fail(col(), 1, "E_SYNTAX", "expected ':' after '" + key + "'");
      ++pos_;
      skip_ws();
      const int val_col = col();
      std::string value;
      bool quoted = false;
      if (pos_ < s_.size() && s_[pos_] == '"') {
        quoted = true;
        ++pos_;
        bool closed = false;
        while (pos_ < s_.size()) {
          char c = s_[pos_++];
          if (c == '\\' && pos_ < s_.size()) {
            value += s_[pos_++];
            continue;
          }
          if (c == '"') {
            closed = true;
            break;
          }
          value += c;
        }
        if (!closed) return fail(val_col, 1, "E_UNTERMINATED", "unterminated string");
      } else {
        while (pos_ < s_.size() && s_[pos_] != ';' && s_[pos_] != ')') value += s_[pos_++];
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
      }
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ';') ++pos_;
      else if (pos_ >= s_.size() || s_[pos_] != ')')
        return fail(col(), 1, "E_SYNTAX", "expected ';' after option value");

      if (!seen.insert(key).second)
        return fail(key_col, key.size(), "E_DUP_OPTION", "option '" + key + "' given twice");
      const std::size_t vlen = std::max<std::size_t>(value.size(), 1);
      if (key == "msg") {
        r.msg = value;
      } else if (key == "sid") {
        unsigned long v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (quoted || value.empty() || ec != std::errc{} || p != value.data() + value.size() || v == 0 ||
            v > 0xffffffffUL)
          return fail(val_col, vlen, "E_BAD_SID", "sid must be a positive integer");
        r.sid = static_cast<std::uint32_t>(v);
        have_sid = true;
      } else if (key == "tag") {
        if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) {
              return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
            }))
          return fail(val_col, vlen, "E_SYNTAX", "tag must be a lowercase token");
        r.tag = value;
      } else if (key == "rate") {
        auto comma = value.find(',');
        int n = 0, secs = 0;
        bool ok = comma != std::string::npos;
        if (ok) {
          auto a = std::from_chars(value.data(), value.data() + comma, n);
          auto b = std::from_chars(value.data() + comma + 1, value.data() + value.size(), secs);
          ok = a.ec == std::errc{} && a.ptr == value.data() + comma && b.ec == std::errc{} &&
               b.ptr == value.data() + value.size() && n >= 1 && secs >= 1 && secs <= 86400;
        }
        if (!ok) return fail(val_col, vlen, "E_BAD_RATE", "rate must be COUNT,SECONDS with both >= 1");
        r.rate = RateLimit{n, secs};
      } else {
        return fail(key_col, key.size(), "E_UNKNOWN_OPTION", "unknown option '" + key + "'");
      }
    }
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] != '#')
      return fail(col(), 1, "E_SYNTAX", "unexpected text after the option list");
    if (!have_sid) return fail(1, s_.size(), "E_MISSING_SID", "rule has no sid option");
    return r;
  }

 private:
  struct Word {
    std::string text;
    int col;
  };

  int col() const { return static_cast<int>(pos_) + 1; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  std::optional<Word> header_word(const char* what) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] == '(') {
      fail(col(), 1, "E_SYNTAX", std::string("expected ") + what);
      return std::nullopt;
    }
    Word w{{}, col()};
    while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '(' && s_[pos_] != '\r')
      w.text += s_[pos_++];
    return w;
  }

  bool addr_port(AddrMatch& a, PortMatch& p) {
    auto w = header_word("address");
    if (!w) return false;
    auto am = AddrMatch::parse(w->text);
    if (!am) {
      fail(w->col, w->text.size(), "E_BAD_ADDR", "expected CIDR, address or any, got '" + w->text + "'");
      return false;
    }
    a = *am;
    if (!(w = header_word("port"))) return false;
    auto pm = PortMatch::parse(w->text);
    if (!pm) {
      fail(w->col, w->text.size(), "E_BAD_PORT", "expected port, lo:hi or any, got '" + w->text + "'");
      return false;
    }
    p = *pm;
    return true;
  }

  ParseError fail(int column, std::size_t len, std::string code, std::string msg) {
    err_ = ParseError{{line_, column, static_cast<int>(std::max<std::size_t>(len, 1))}, std::move(code),
                      std::move(msg)};
    return err_;
  }

  std::string_view s_;
  int line_;
  std::size_t pos_ = 0;
  ParseError err_;
};

}  // namespace detail

inline Result<DetectionRule, ParseError> parse_rule(std::string_view text, int line = 1) {
  return detail::RuleScanner(text, line).run();
}

// One rule per line; blank lines and '#' comments ignored. Reports every
// bad line, plus duplicate sids.
inline Result<Ruleset, std::vector<ParseError>> load_ruleset(std::string_view text) {
  Ruleset rs;
  std::vector<ParseError> errors;
  std::map<std::uint32_t, int> sid_line;
  int line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view l = text.substr(start, end - start);
    ++line;
    start = end + 1;
    std::size_t first = l.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || l[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto r = parse_rule(l, line);
    if (!r) {
      errors.push_back(r.error());
    } else if (auto [it, fresh] = sid_line.emplace(r->sid, line); !fresh) {
      errors.push_back({{line, 1, static_cast<int>(l.size())}, "E_DUP_SID",
                        "sid " + std::to_string(r->sid) + " already defined on line " +
                            std::to_string(it->second)});
    } else {
      rs.rules.push_back(std::move(r.value()));
    }
    if (end == text.size()) break;
  }
  if (!errors.empty()) return errors;
  return rs;
}

// Header and tag match, ignoring any rate option.
inline bool match_header(const DetectionRule& r, const FlowEvent& f) {
  return r.proto.matches(f.proto) && r.src.matches(f.src_ip) && r.dst.matches(f.dst_ip) &&
         r.src_port.matches(f.src_port) && r.dst_port.matches(f.dst_port) &&
         (!r.tag || f.payload_tags.count(*r.tag) > 0);
}

// Stateless match. Rate-bearing rules never match here; they fire only
// through the windowed evaluation.
inline bool match_flow(const DetectionRule& r, const FlowEvent& f) {
  return !r.rate && match_header(r, f);
}

// ---------------------------------------------------------------------------
// Sliding windows.

// Counts hits per key over the window (t - W, t]. Fires when the count
// reaches the threshold, then stays quiet for W ticks for that key.
template <typename Key>
struct SlidingWindow {
  std::map<Key, std::deque<Tick>> hits;
  std::map<Key, Tick> last_fired;

  friend bool operator==(const SlidingWindow&, const SlidingWindow&) = default;

  // Records a hit; returns the in-window count when it fires.
  std::optional<std::uint64_t> observe(const Key& key, Tick t, Tick window, std::uint64_t threshold) {
    auto& q = hits[key];
    q.push_back(t);
    while (!q.empty() && q.front() + window <= t) q.pop_front();
    const std::uint64_t count = q.size();
    if (count < threshold) return std::nullopt;
    if (auto it = last_fired.find(key); it != last_fired.end() && it->second + window > t)
      return std::nullopt;
    last_fired[key] = t;
    return count;
  }
};

using EndpointKey = std::pair<std::uint32_t, std::uint16_t>;                   // (dst ip, dst port)
using RateKey = std::tuple<std::uint32_t, std::uint32_t, std::uint16_t>;        // (sid, dst ip, dst port)

// ---------------------------------------------------------------------------
// Sensor evaluation.

enum class ActionTaken { pass, drop, downgraded_pass };

inline std::string_view to_string(ActionTaken a) {
  switch (a) {
    case ActionTaken::pass: return "pass";
    case ActionTaken::drop: return "drop";
    case ActionTaken::downgraded_pass: return "downgraded-pass";
  }
  return "pass";
}

struct SensorRef {
  std::string id;  // host node
  SensorMode mode = SensorMode::ids;
  bool inline_attached = false;

  bool can_drop() const { return inline_attached && mode == SensorMode::ips; }
};

struct AlertEvent {
  Tick tick = 0;
  std::uint32_t sid = 0;
  std::string msg;
  std::uint64_t flow_id = 0;
  std::string sensor;
  ActionTaken action_taken = ActionTaken::pass;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

struct Verdict {
  std::vector<AlertEvent> alerts;  // ascending sid
  bool drop = false;
};

struct SensorWindows {
  SlidingWindow<RateKey> rate;
  friend bool operator==(const SensorWindows&, const SensorWindows&) = default;
};

namespace detail {

inline AlertEvent make_alert(const SensorRef& sensor, const DetectionRule& r, const FlowEvent& f,
                             Tick tick) {
  ActionTaken taken = ActionTaken::pass;
  if (r.action == RuleAction::drop) taken = sensor.can_drop() ? ActionTaken::drop : ActionTaken::downgraded_pass;
  return {tick, r.sid, r.msg, f.id, sensor.id, taken};
}

inline Verdict finish(std::vector<AlertEvent> alerts) {
  std::sort(alerts.begin(), alerts.end(), [](const auto& a, const auto& b) { return a.sid < b.sid; });
  Verdict v;
  v.drop = std::any_of(alerts.begin(), alerts.end(),
                       [](const auto& a) { return a.action_taken == ActionTaken::drop; });
  v.alerts = std::move(alerts);
  return v;
}

}  // namespace detail

// Stateless evaluation over the non-rate rules.
inline Verdict evaluate(const SensorRef& sensor, const Ruleset& rules, const FlowEvent& f, Tick tick) {
  std::vector<AlertEvent> alerts;
  for (const auto& r : rules.rules)
    if (match_flow(r, f)) alerts.push_back(detail::make_alert(sensor, r, f, tick));
  return detail::finish(std::move(alerts));
}

// Full evaluation, including rate rules tracked in the sensor's windows.
inline std::pair<SensorWindows, Verdict> evaluate(const SensorRef& sensor, const Ruleset& rules,
                                                  const FlowEvent& f, Tick tick, SensorWindows windows) {
  std::vector<AlertEvent> alerts;
  for (const auto& r : rules.rules) {
    if (!match_header(r, f)) continue;
    if (r.rate) {
      const RateKey key{r.sid, f.dst_ip.value, f.dst_port};
      if (!windows.rate.observe(key, f.tick, r.rate->window_ticks(), static_cast<std::uint64_t>(r.rate->count)))
        continue;
    }
    alerts.push_back(detail::make_alert(sensor, r, f, tick));
  }
  return {std::move(windows), detail::finish(std::move(alerts))};
}

// ---------------------------------------------------------------------------
// Traffic-volume anomaly monitor.

inline constexpr std::uint64_t kDefaultAnomalyThreshold = 100;
inline constexpr Tick kDefaultAnomalyWindow = 100;

struct AnomalyEvent {
  Tick tick = 0;
  Ipv4 dst_ip;
  std::uint16_t dst_port = 0;
  std::uint64_t observed_rate = 0;  // flows in the window
  std::uint64_t threshold = 0;
  Tick window = 0;

  friend bool operator==(const AnomalyEvent&, const AnomalyEvent&) = default;
};

struct MonitorState {
  std::uint64_t threshold = kDefaultAnomalyThreshold;
  Tick window = kDefaultAnomalyWindow;
  SlidingWindow<EndpointKey> counts;

  friend bool operator==(const MonitorState&, const MonitorState&) = default;
};

// Counts the flow towards (dst ip, dst port); emits one anomaly per key per window.
inline std::pair<MonitorState, std::optional<AnomalyEvent>> evaluate_window(MonitorState state,
                                                                            const FlowEvent& f) {
  std::optional<AnomalyEvent> out;
  if (auto n = state.counts.observe({f.dst_ip.value, f.dst_port}, f.tick, state.window, state.threshold))
    out = AnomalyEvent{f.tick, f.dst_ip, f.dst_port, *n, state.threshold, state.window};
  return {std::move(state), out};
}

}  // namespace rangeforge
