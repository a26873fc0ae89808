#pragma once

// Scenario text format (.scn):
//
//   scenario "name" {
//     network lan
//     network wan external
//     node fw {
//       role = firewall
//       os = pfsense
//       cpu = 1
//       ram_mb = 1024
//       iface em0 net = wan
//       iface em1 net = lan ip = 10.10.1.1
//       service ssh port = 22
//       sensor engine = suricata mode = ids monitor = wan      (or: inline)
//       rule allow tcp any any -> 10.10.1.0/24 80
//     }
//     constraint separate(a, b)
//   }
//
// '#' starts a comment. ';' may separate statements. CRLF is accepted.

#include <charconv>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/core/diagnostics.hpp"
#include "rangeforge/core/result.hpp"
#include "rangeforge/scenario.hpp"

namespace rangeforge::dsl {

enum class TokKind { word, string, lbrace, rbrace, lparen, rparen, comma, equals, semicolon, arrow, eof };

struct Token {
  TokKind kind = TokKind::eof;
  std::string text;  // word text or unescaped string contents
  SourceSpan span;
};

inline constexpr std::size_t kMaxErrors = 100;

namespace detail {

inline bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.' || c == ':' || c == '/' || c == '-';
}

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<ParseError>& errors) : src_(src), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    out.reserve(src_.size() / 4 + 1);
    while (pos_ < src_.size()) {
      if (errors_.size() >= kMaxErrors) break;
      const unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if (c == '\n') {
        advance();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      const SourceSpan start{line_, col_, 1};
      switch (c) {
        case '{': out.push_back(single(TokKind::lbrace, start)); continue;
        case '}': out.push_back(single(TokKind::rbrace, start)); continue;
        case '(': out.push_back(single(TokKind::lparen, start)); continue;
        case ')': out.push_back(single(TokKind::rparen, start)); continue;
        case ',': out.push_back(single(TokKind::comma, start)); continue;
        case '=': out.push_back(single(TokKind::equals, start)); continue;
        case ';': out.push_back(single(TokKind::semicolon, start)); continue;
        default: break;
      }
      if (c == '-' && peek(1) == '>') {
        advance();
        advance();
        out.push_back({TokKind::arrow, "->", {start.line, start.column, 2}});
        continue;
      }
      if (c == '"') {
        lex_string(out, start);
        continue;
      }
      if (is_word_char(c)) {
        // Word bytes are ASCII and never newlines, so columns advance 1:1.
        std::size_t end = pos_;
        while (end < src_.size() && is_word_char(static_cast<unsigned char>(src_[end])) &&
               !(src_[end] == '-' && end + 1 < src_.size() && src_[end + 1] == '>'))
          ++end;
        const int len = static_cast<int>(end - pos_);
        out.push_back({TokKind::word, std::string(src_.substr(pos_, end - pos_)), {start.line, start.column, len}});
        pos_ = end;
        col_ += len;
        continue;
      }
      // Unexpected byte(s): report one error for the whole run.
      int len = 0;
      while (pos_ < src_.size()) {
        const unsigned char d = static_cast<unsigned char>(src_[pos_]);
        if (d == '\n' || d == ' ' || d == '\t' || d == '\r' || d == '"' || d == '#' ||
            is_word_char(d) || d == '{' || d == '}' || d == '(' || d == ')' || d == ',' ||
            d == '=' || d == ';')
          break;
        if ((d & 0xc0) != 0x80) ++len;
        advance();
      }
      errors_.push_back({{start.line, start.column, std::max(len, 1)}, "E_LEX",
                         "unexpected character(s)"});
    }
    out.push_back({TokKind::eof, "", {line_, col_, 0}});
    return out;
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    const unsigned char c = static_cast<unsigned char>(src_[pos_++]);
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((c & 0xc0) != 0x80) {
      ++col_;
    }
  }

  Token single(TokKind k, SourceSpan sp) {
    std::string t(1, src_[pos_]);
    advance();
    return {k, std::move(t), sp};
  }

  void lex_string(std::vector<Token>& out, SourceSpan start) {
    advance();  // opening quote
    std::string text;
    int len = 1;
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      const char ch = src_[pos_];
      if (ch == '"') {
        advance();
        ++len;
        out.push_back({TokKind::string, std::move(text), {start.line, start.column, len}});
        return;
      }
      if (ch == '\\' && (peek(1) == '"' || peek(1) == '\\')) {
        text += peek(1);
        advance();
        advance();
        len += 2;
        continue;
      }
      if ((static_cast<unsigned char>(ch) & 0xc0) != 0x80) ++len;
      text += ch;
      advance();
    }
    errors_.push_back({{start.line, start.column, len}, "E_UNTERMINATED", "unterminated string"});
  }

  std::string_view src_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Spans recorded while parsing, used to position reference errors.
struct SpanIndex {
  SourceSpan scenario_name;
  std::vector<SourceSpan> networks;
  std::vector<SourceSpan> nodes;
  std::map<std::pair<int, int>, SourceSpan> iface_net;   // (node, iface) -> net token
  std::map<std::pair<int, int>, SourceSpan> iface_name;
  std::map<std::pair<int, int>, SourceSpan> iface_ip;
  std::map<std::pair<int, int>, SourceSpan> services;
  std::map<int, SourceSpan> sensors;
  std::map<int, SourceSpan> rules;
  std::vector<std::vector<SourceSpan>> members;
  std::vector<SourceSpan> constraints;

  SourceSpan locate(const Location& loc) const {
    auto get = [](const auto& m, const auto& k, SourceSpan fallback) {
      auto it = m.find(k);
      return it == m.end() ? fallback : it->second;
    };
    if (loc.network >= 0 && loc.network < static_cast<int>(networks.size()))
      return networks[loc.network];
    if (loc.constraint >= 0 && loc.constraint < static_cast<int>(constraints.size())) {
      const auto& ms = members[loc.constraint];
      if (loc.element == "member" && loc.index >= 0 && loc.index < static_cast<int>(ms.size()))
        return ms[loc.index];
      return constraints[loc.constraint];
    }
    if (loc.node >= 0 && loc.node < static_cast<int>(nodes.size())) {
      const SourceSpan node_span = nodes[loc.node];
      if (loc.element == "interface") return get(iface_net, std::pair{loc.node, loc.index}, node_span);
      if (loc.element == "service") return get(services, std::pair{loc.node, loc.index}, node_span);
      if (loc.element == "sensor") return get(sensors, loc.node, node_span);
      return node_span;
    }
    return scenario_name;
  }
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<ParseError>& errors)
      : toks_(std::move(toks)), errors_(errors) {}

  Scenario run(SpanIndex& spans) {
    spans_ = &spans;
    Scenario s;
    if (!expect_word("scenario")) {
      sync_top();
    } else {
      const Token& name = cur();
      if (name.kind != TokKind::string) {
        error(name, "E_SYNTAX", "expected scenario name string");
      } else {
        s.name = name.text;
        spans.scenario_name = name.span;
        next();
      }
      if (!expect(TokKind::lbrace, "'{'")) sync_top();
    }
    parse_items(s);
    if (cur().kind == TokKind::rbrace) next();
    else if (!too_many()) error(cur(), "E_SYNTAX", "expected '}' closing the scenario");
    if (cur().kind != TokKind::eof && !too_many())
      error(cur(), "E_SYNTAX", "unexpected input after scenario block");
    return s;
  }

 private:
  const Token& cur() const { return toks_[i_]; }
  const Token& next() {
    if (i_ + 1 < toks_.size()) ++i_;
    return toks_[i_];
  }
  bool at_word(std::string_view w) const { return cur().kind == TokKind::word && cur().text == w; }
  bool too_many() const { return errors_.size() >= kMaxErrors; }

  void error(const Token& t, std::string code, std::string msg) {
    if (too_many()) return;
    if (errors_.size() + 1 == kMaxErrors) {
      errors_.push_back({t.span, "E_TOO_MANY_ERRORS", "too many errors; giving up"});
      return;
    }
    errors_.push_back({t.span, std::move(code), std::move(msg)});
  }

  bool expect(TokKind k, const char* what) {
    if (cur().kind == k) {
      next();
      return true;
    }
    error(cur(), "E_SYNTAX", std::string("expected ") + what);
    return false;
  }
  bool expect_word(std::string_view w) {
    if (at_word(w)) {
      next();
      return true;
    }
    error(cur(), "E_SYNTAX", "expected '" + std::string(w) + "'");
    return false;
  }
  std::optional<Token> take_word(const char* what) {
    if (cur().kind == TokKind::word) {
      Token t = cur();
      next();
      return t;
    }
    error(cur(), "E_SYNTAX", std::string("expected ") + what);
    return std::nullopt;
  }
  // WORD or STRING
  std::optional<Token> take_text(const char* what) {
    if (cur().kind == TokKind::word || cur().kind == TokKind::string) {
      Token t = cur();
      next();
      return t;
    }
    error(cur(), "E_SYNTAX", std::string("expected ") + what);
    return std::nullopt;
  }
  bool take_equals() { return expect(TokKind::equals, "'='"); }

  static bool is_top_keyword(const Token& t) {
    return t.kind == TokKind::word &&
           (t.text == "network" || t.text == "node" || t.text == "constraint");
  }
  static bool is_attr_keyword(const Token& t) {
    static const char* kw[] = {"role", "os", "cpu", "ram_mb", "iface", "service", "sensor", "rule"};
    if (t.kind != TokKind::word) return false;
    for (const char* k : kw)
      if (t.text == k) return true;
    return false;
  }

  // Skip to the next top-level item or the closing brace of the scenario.
  void sync_top() {
    int depth = 0;
    while (cur().kind != TokKind::eof) {
      if (depth == 0 && is_top_keyword(cur())) return;
      if (cur().kind == TokKind::lbrace) ++depth;
      if (cur().kind == TokKind::rbrace) {
        if (depth == 0) return;
        --depth;
      }
      next();
    }
  }
  // Skip to the next node attribute or the node's closing brace.
  void sync_attr() {
    while (cur().kind != TokKind::eof && cur().kind != TokKind::rbrace && !is_attr_keyword(cur()))
      next();
  }

  void parse_items(Scenario& s) {
    while (cur().kind != TokKind::eof && cur().kind != TokKind::rbrace && !too_many()) {
      if (cur().kind == TokKind::semicolon) {
        next();
      } else if (at_word("network")) {
        parse_network(s);
      } else if (at_word("node")) {
        parse_node(s);
      } else if (at_word("constraint")) {
        parse_constraint(s);
      } else {
        error(cur(), "E_SYNTAX", "expected 'network', 'node' or 'constraint'");
        next();
        sync_top();
      }
    }
  }

  void parse_network(Scenario& s) {
    next();
    auto name = take_word("network name");
    if (!name) return sync_top();
    NetworkSpec net{name->text, false};
    if (at_word("external")) {
      net.external = true;
      next();
    }
    s.networks.push_back(std::move(net));
    spans_->networks.push_back(name->span);
  }

  void parse_constraint(Scenario& s) {
    const Token kw = cur();
    next();
    if (!expect_word("separate") || !expect(TokKind::lparen, "'('")) return sync_top();
    AntiAffinityConstraint c;
    std::vector<SourceSpan> spans;
    while (true) {
      auto m = take_word("node name");
      if (!m) return sync_top();
      c.members.push_back(m->text);
      spans.push_back(m->span);
      if (cur().kind == TokKind::comma) {
        next();
        continue;
      }
      if (cur().kind == TokKind::rparen) {
        next();
        break;
      }
      error(cur(), "E_SYNTAX", "expected ',' or ')'");
      return sync_top();
    }
    if (c.members.size() < 2) error(kw, "E_SYNTAX", "separate() needs at least two members");
    s.constraints.push_back(std::move(c));
    spans_->members.push_back(std::move(spans));
    spans_->constraints.push_back(kw.span);
  }

  std::optional<int> take_int(const char* what, long lo, long hi) {
    auto t = take_word(what);
    if (!t) return std::nullopt;
    long v = 0;
    const auto& s = t->text;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < lo || v > hi) {
      error(*t, "E_BAD_INT", std::string("expected ") + what + " in " + std::to_string(lo) + ".." +
                                 std::to_string(hi));
      return std::nullopt;
    }
    return static_cast<int>(v);
  }

  void parse_node(Scenario& s) {
    next();
    auto name = take_word("node name");
    if (!name) return sync_top();
    if (!expect(TokKind::lbrace, "'{'")) return sync_top();
    const int nidx = static_cast<int>(s.nodes.size());
    NodeSpec node;
    node.name = name->text;
    spans_->nodes.push_back(name->span);
    std::optional<Role> role;
    std::optional<int> cpu, ram;
    std::set<std::string> seen;

    auto once = [&](const Token& kw) {
      if (!seen.insert(kw.text).second) {
        error(kw, "E_DUP_ATTR", "attribute '" + kw.text + "' given twice");
        return false;
      }
      return true;
    };

    while (cur().kind != TokKind::rbrace && cur().kind != TokKind::eof && !too_many()) {
      const Token kw = cur();
      if (kw.kind == TokKind::semicolon) {
        next();
        continue;
      }
      if (!is_attr_keyword(kw)) {
        error(kw, "E_SYNTAX", "expected a node attribute");
        next();
        sync_attr();
        continue;
      }
      next();
      bool ok = true;
      if (kw.text == "role") {
        ok = take_equals();
        if (ok) {
          auto v = take_word("role");
          if (!v) ok = false;
          else if (auto r = parse_role(v->text)) {
            if (once(kw)) role = r;
          } else {
            seen.insert("role");
            error(*v, "E_BAD_ROLE", "unknown role '" + v->text + "'");
          }
        }
      } else if (kw.text == "os") {
        ok = take_equals();
        if (ok) {
          auto v = take_text("os label");
          if (!v) ok = false;
          else if (once(kw)) node.os = v->text;
        }
      } else if (kw.text == "cpu" || kw.text == "ram_mb") {
        ok = take_equals();
        if (ok) {
          auto v = take_int(kw.text == "cpu" ? "cpu cores" : "ram_mb", 1, 1 << 30);
          if (!v) ok = false;
          else if (once(kw)) (kw.text == "cpu" ? cpu : ram) = *v;
        }
      } else if (kw.text == "iface") {
        ok = parse_iface(node, nidx);
      } else if (kw.text == "service") {
        ok = parse_service(node, nidx);
      } else if (kw.text == "sensor") {
        if (node.sensor) error(kw, "E_DUP_ATTR", "at most one sensor per node");
        ok = parse_sensor(node, nidx, kw);
      } else if (kw.text == "rule") {
        ok = parse_rule(node, nidx, kw);
      }
      if (!ok) sync_attr();
    }
    if (cur().kind == TokKind::rbrace) next();
    else error(cur(), "E_SYNTAX", "expected '}' closing node '" + node.name + "'");

    if (!role) {
      if (!seen.count("role")) error(*name, "E_MISSING_ROLE", "node '" + node.name + "' has no role");
      role = Role::target;
    }
    node.role = *role;
    const auto res = default_resources(node.os, node.role);
    node.cpu = cpu.value_or(res.cpu);
    node.ram_mb = ram.value_or(res.ram_mb);
    s.nodes.push_back(std::move(node));
  }

  bool parse_iface(NodeSpec& node, int nidx) {
    auto name = take_word("interface name");
    if (!name) return false;
    if (!expect_word("net") || !take_equals()) return false;
    auto net = take_word("network name");
    if (!net) return false;
    InterfaceSpec ifc{name->text, net->text, std::nullopt};
    const std::pair key{nidx, static_cast<int>(node.interfaces.size())};
    spans_->iface_name[key] = name->span;
    spans_->iface_net[key] = net->span;
    if (at_word("ip")) {
      next();
      if (!take_equals()) return false;
      auto ip = take_word("IPv4 address");
      if (!ip) return false;
      auto parsed = Ipv4::parse(ip->text);
      if (!parsed) {
        error(*ip, "E_BAD_IP", "invalid IPv4 address '" + ip->text + "'");
      } else {
        ifc.ip = parsed;
        spans_->iface_ip[key] = ip->span;
      }
    }
    node.interfaces.push_back(std::move(ifc));
    return true;
  }

  bool parse_service(NodeSpec& node, int nidx) {
    auto kind = take_word("service kind");
    if (!kind) return false;
    auto k = parse_service_kind(kind->text);
    if (!k) {
      error(*kind, "E_BAD_SERVICE", "unknown service kind '" + kind->text + "'");
      if (at_word("port")) {
        next();
        if (cur().kind == TokKind::equals) next();
        if (cur().kind == TokKind::word) next();
      }
      return true;
    }
    ServiceSpec svc{*k, default_port(*k)};
    if (at_word("port")) {
      next();
      if (!take_equals()) return false;
      const Token pt = cur();
      auto p = take_int("port", 1, 65535);
      if (!p) {
        if (!errors_.empty() && errors_.back().code == "E_BAD_INT") errors_.back().code = "E_BAD_PORT";
        return pt.kind == TokKind::word;
      }
      svc.port = static_cast<std::uint16_t>(*p);
    }
    spans_->services[{nidx, static_cast<int>(node.services.size())}] = kind->span;
    node.services.push_back(svc);
    return true;
  }

  bool parse_sensor(NodeSpec& node, int nidx, const Token& kw) {
    std::optional<std::string> engine;
    std::optional<SensorMode> mode;
    std::optional<std::optional<std::string>> attach;  // outer: given; inner nullopt = inline
    SourceSpan attach_span = kw.span;
    while (cur().kind == TokKind::word) {
      const Token key = cur();
      if (key.text == "inline") {
        next();
        attach = std::optional<std::string>{};
        attach_span = key.span;
        continue;
      }
      if (key.text != "engine" && key.text != "mode" && key.text != "monitor") break;
      next();
      if (!take_equals()) return false;
      if (key.text == "engine") {
        auto v = take_text("engine label");
        if (!v) return false;
        engine = v->text;
      } else if (key.text == "mode") {
        auto v = take_word("ids or ips");
        if (!v) return false;
        if (v->text == "ids") mode = SensorMode::ids;
        else if (v->text == "ips") mode = SensorMode::ips;
        else error(*v, "E_BAD_MODE", "sensor mode must be ids or ips");
      } else {
        auto v = take_word("network name");
        if (!v) return false;
        attach = std::optional<std::string>{v->text};
        attach_span = v->span;
      }
    }
    if (!engine || !mode || !attach) {
      if (!(errors_.size() && errors_.back().code == "E_BAD_MODE"))
        error(kw, "E_INCOMPLETE_SENSOR",
              "sensor needs engine=, mode= and either monitor=NET or inline");
      return true;
    }
    if (!node.sensor) {
      node.sensor = SensorSpec{*engine, *mode, *attach};
      spans_->sensors[nidx] = attach_span;
    }
    return true;
  }

  bool parse_rule(NodeSpec& node, int nidx, const Token& kw) {
    FilterRule r;
    auto action = take_word("allow or deny");
    if (!action) return false;
    if (action->text == "allow") r.action = FilterAction::allow;
    else if (action->text == "deny") r.action = FilterAction::deny;
    else {
      error(*action, "E_BAD_ACTION", "rule action must be allow or deny");
      return false;
    }
    auto proto = take_word("protocol");
    if (!proto) return false;
    if (auto p = ProtoMatch::parse(proto->text)) r.proto = *p;
    else {
      error(*proto, "E_BAD_PROTO", "unknown protocol '" + proto->text + "'");
      return false;
    }
    auto addr_port = [&](AddrMatch& a, PortMatch& p) {
      auto at = take_word("address");
      if (!at) return false;
      auto am = AddrMatch::parse(at->text);
      if (!am) {
        error(*at, "E_BAD_ADDR", "expected CIDR or any, got '" + at->text + "'");
        return false;
      }
      a = *am;
      auto pt = take_word("port");
      if (!pt) return false;
      auto pm = PortMatch::parse(pt->text);
      if (!pm) {
        error(*pt, "E_BAD_PORT", "expected port, lo:hi or any, got '" + pt->text + "'");
        return false;
      }
      p = *pm;
      return true;
    };
    if (!addr_port(r.src, r.src_port)) return false;
    if (!expect(TokKind::arrow, "'->'")) return false;
    if (!addr_port(r.dst, r.dst_port)) return false;
    spans_->rules[nidx] = kw.span;
    node.fw_rules.push_back(r);
    return true;
  }

  std::vector<Token> toks_;
  std::vector<ParseError>& errors_;
  std::size_t i_ = 0;
  SpanIndex* spans_ = nullptr;
};

inline bool is_reference_code(std::string_view code) {
  return code == "E_UNKNOWN_NET" || code == "E_TAP_UNKNOWN_NET" || code == "E_UNKNOWN_NODE" ||
         code == "E_DUP_IP" || code == "E_DUP_NODE" || code == "E_DUP_NETWORK" ||
         code == "E_DUP_IFACE";
}

inline bool is_bare_word(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_word_char(static_cast<unsigned char>(s[i]))) return false;
    if (s[i] == '-' && i + 1 < s.size() && s[i + 1] == '>') return false;
  }
  return true;
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

// Parses scenario text. Reports every lexical, syntactic and reference error
// found in one pass.
inline Result<Scenario, std::vector<ParseError>> parse(std::string_view text) {
  std::vector<ParseError> errors;
  auto toks = detail::Lexer(text, errors).run();
  detail::SpanIndex spans;
  Scenario s = detail::Parser(std::move(toks), errors).run(spans);
  if (errors.size() < kMaxErrors) {
    for (const auto& f : validate_scenario(s).findings) {
      if (f.severity != Severity::error || !detail::is_reference_code(f.code)) continue;
      std::string code = f.code == "E_TAP_UNKNOWN_NET" ? "E_UNKNOWN_NET" : f.code;
      errors.push_back({spans.locate(f.where), std::move(code), f.message});
      if (errors.size() >= kMaxErrors) break;
    }
  }
  if (!errors.empty()) return errors;
  return s;
}

// Full check for editors and the validate endpoint: syntax errors plus every
// semantic finding, each positioned in the source.
struct CheckReport {
  std::optional<Scenario> scenario;  // set when there are no errors
  std::vector<ParseError> errors;
  std::vector<ParseError> warnings;
};

inline CheckReport check(std::string_view text) {
  CheckReport rep;
  auto toks = detail::Lexer(text, rep.errors).run();
  detail::SpanIndex spans;
  Scenario s = detail::Parser(std::move(toks), rep.errors).run(spans);
  if (rep.errors.size() < kMaxErrors) {
    // After a syntax error the partial tree only supports reference checks.
    const bool clean = rep.errors.empty();
    for (const auto& f : validate_scenario(s).findings) {
      if (!clean && !detail::is_reference_code(f.code)) continue;
      std::string code = f.code == "E_TAP_UNKNOWN_NET" ? "E_UNKNOWN_NET" : f.code;
      auto& sink = f.severity == Severity::error ? rep.errors : rep.warnings;
      sink.push_back({spans.locate(f.where), std::move(code), f.message});
    }
  }
  if (rep.errors.empty()) rep.scenario = std::move(s);
  return rep;
}

// Canonical text form: fixed attribute order, two-space indentation, LF.
inline std::string serialize(const Scenario& s) {
  using detail::is_bare_word;
  using detail::quote;
  std::string out = "scenario " + quote(s.name) + " {\n";
  for (const auto& n : s.networks) {
    out += "  network " + n.name;
    if (n.external) out += " external";
    out += '\n';
  }
  for (const auto& n : s.nodes) {
    out += "  node " + n.name + " {\n";
    out += "    role = " + std::string(to_string(n.role)) + '\n';
    if (!n.os.empty()) out += "    os = " + (is_bare_word(n.os) ? n.os : quote(n.os)) + '\n';
    out += "    cpu = " + std::to_string(n.cpu) + '\n';
    out += "    ram_mb = " + std::to_string(n.ram_mb) + '\n';
    for (const auto& i : n.interfaces) {
      out += "    iface " + i.name + " net = " + i.network;
      if (i.ip) out += " ip = " + i.ip->to_string();
      out += '\n';
    }
    for (const auto& svc : n.services)
      out += "    service " + std::string(to_string(svc.kind)) + " port = " + std::to_string(svc.port) +
             '\n';
    if (n.sensor) {
      const auto& sen = *n.sensor;
      out += "    sensor engine = " + (is_bare_word(sen.engine) ? sen.engine : quote(sen.engine)) +
             " mode = " + std::string(to_string(sen.mode));
      out += sen.tap_network ? " monitor = " + *sen.tap_network : std::string(" inline");
      out += '\n';
    }
    for (const auto& r : n.fw_rules)
      out += "    rule " + std::string(to_string(r.action)) + ' ' + r.proto.to_string() + ' ' +
             r.src.to_string() + ' ' + r.src_port.to_string() + " -> " + r.dst.to_string() + ' ' +
             r.dst_port.to_string() + '\n';
    out += "  }\n";
  }
  for (const auto& c : s.constraints) {
    out += "  constraint separate(";
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      if (i) out += ", ";
      out += c.members[i];
    }
    out += ")\n";
  }
  out += "}\n";
  return out;
}

}  // namespace rangeforge::dsl
