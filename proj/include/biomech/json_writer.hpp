#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace biomech {

// Locale-independent number formatting, 9 significant digits. All file
// formats in this project are canonical: fixed key order, fixed float
// formatting, no whitespace, so identical data produces identical bytes.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize non-finite value");
  if (v == 0.0) return "0";  // normalizes -0.0
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

// shortest representation that parses back to the same double; used for
// model parameters where reload fidelity matters
inline std::string format_number_exact(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize non-finite value");
  if (v == 0.0) return "0";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) { return std::to_string(v); }

// Minimal canonical JSON emitter. Callers emit keys in sorted order; the
// writer only handles separators, escaping and number formatting.
class JsonWriter {
 public:
  void begin_object() { sep(); out_ += '{'; fresh_ = true; }
  void end_object() { out_ += '}'; fresh_ = false; }
  void begin_array() { sep(); out_ += '['; fresh_ = true; }
  void end_array() { out_ += ']'; fresh_ = false; }

  void key(const std::string& k) {
    sep();
    out_ += '"';
    escape(k);
    out_ += "\":";
    fresh_ = true;
  }

  void value(double v) { sep(); out_ += format_number(v); }
  void value_exact(double v) { sep(); out_ += format_number_exact(v); }
  void value_int(long long v) { sep(); out_ += format_int(v); }
  void value(const std::string& s) {
    sep();
    out_ += '"';
    escape(s);
    out_ += '"';
  }
  void value_bool(bool b) { sep(); out_ += b ? "true" : "false"; }
  void value_null() { sep(); out_ += "null"; }

  // splice in already-canonical JSON text
  void raw(const std::string& json_text) { sep(); out_ += json_text; }

  const std::string& str() const { return out_; }

 private:
  void sep() {
    if (!fresh_) out_ += ',';
    fresh_ = false;
  }
  void escape(const std::string& s) {
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        case '\r': out_ += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
  }

  std::string out_;
  bool fresh_ = true;
};

}  // namespace biomech
