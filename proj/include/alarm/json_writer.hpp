#pragma once

// Minimal deterministic JSON emitter for report/stats files.
//
// Reports must be byte-identical run to run, so serialization is pinned:
// keys appear in insertion order, floating-point values are printed with
// %.6g (6 significant digits), and non-finite values are a hard error —
// they never silently become null.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

inline std::string format_g6(double v) {
  if (!std::isfinite(v))
    fail(ErrorCode::NonFinite, "attempted to serialize a non-finite number");
  if (v == 0.0) v = 0.0;  // collapse -0 to 0 so output is sign-stable
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Streaming writer with two-space indentation. Usage:
//   JsonWriter w;
//   w.begin_object();
//   w.key("name"); w.value("x");
//   w.end_object();
//   std::string text = w.str();
class JsonWriter {
 public:
  void begin_object() { open('{'); }
  void end_object() { close('}'); }
  void begin_array() { open('['); }
  void end_array() { close(']'); }

  void key(const std::string& k) {
    separate();
    indent();
    out_ += '"';
    out_ += json_escape(k);
    out_ += "\": ";
    pending_key_ = true;
  }

  void value(const std::string& v) { raw('"' + json_escape(v) + '"'); }
  void value(const char* v) { value(std::string(v)); }
  void value(double v) { raw(format_g6(v)); }
  void value(std::int64_t v) { raw(std::to_string(v)); }
  void value(int v) { raw(std::to_string(static_cast<std::int64_t>(v))); }
  void value(bool v) { raw(v ? "true" : "false"); }
  void null() { raw("null"); }

  // Convenience for small fixed arrays on one line: [a, b, c]
  void value(const std::vector<double>& xs) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      s += format_g6(xs[i]);
    }
    s += "]";
    raw(s);
  }

  const std::string& str() const { return out_; }

 private:
  void open(char c) {
    if (!pending_key_) {
      separate();
      indent();
    }
    pending_key_ = false;
    out_ += c;
    out_ += '\n';
    need_comma_.push_back(false);
  }

  void close(char c) {
    out_ += '\n';
    need_comma_.pop_back();
    indent();
    out_ += c;
    if (!need_comma_.empty()) need_comma_.back() = true;
    if (need_comma_.empty()) out_ += '\n';
  }

  void raw(const std::string& s) {
    if (!pending_key_) {
      separate();
      indent();
    }
    pending_key_ = false;
    out_ += s;
    if (!need_comma_.empty()) need_comma_.back() = true;
  }

  void separate() {
    if (!need_comma_.empty() && need_comma_.back()) out_ += ",\n";
    if (!need_comma_.empty()) need_comma_.back() = false;
  }

  void indent() {
    for (std::size_t i = 0; i < need_comma_.size(); ++i) out_ += "  ";
  }

  std::string out_;
  std::vector<bool> need_comma_;
  bool pending_key_ = false;
};

}  // namespace alarmkit
