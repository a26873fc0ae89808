#pragma once

#include <string>

namespace rangeforge {

// 1-based position of a token in source text. Columns count code points.
struct SourceSpan {
  int line = 1;
  int column = 1;
  int length = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

// Error codes used by the scenario and rule parsers (closed set):
//   E_LEX               unexpected character
//   E_UNTERMINATED      string literal runs to end of line
//   E_SYNTAX            unexpected token
//   E_TOO_MANY_ERRORS   error limit reached; parsing stopped
//   E_BAD_ROLE, E_BAD_SERVICE, E_BAD_MODE, E_BAD_ACTION, E_BAD_PROTO
//   E_BAD_INT, E_BAD_PORT, E_BAD_IP, E_BAD_ADDR
//   E_DUP_ATTR, E_MISSING_ROLE, E_INCOMPLETE_SENSOR
//   E_UNKNOWN_NET, E_UNKNOWN_NODE, E_DUP_IP, E_DUP_NODE, E_DUP_NETWORK, E_DUP_IFACE
//   E_UNKNOWN_OPTION, E_DUP_OPTION, E_MISSING_SID, E_BAD_SID, E_BAD_RATE, E_DUP_SID
struct ParseError {
  SourceSpan span;
  std::string code;
  std::string message;
};

inline std::string format_error(const ParseError& e) {
  return std::to_string(e.span.line) + ":" + std::to_string(e.span.column) + ": " + e.code + ": " +
         e.message;
}

}  // namespace rangeforge
