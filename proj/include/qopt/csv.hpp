#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>

#include "qopt/errors.hpp"

namespace qopt::csv {

// Shortest decimal string that round-trips to the same double, so output
// files are byte-identical across runs and platforms with to_chars support.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) {
    throw NumericalFailureError("failed to format a floating-point value");
  }
  return std::string(buf, res.ptr);
}

inline void append_field(std::string& line, double v) {
  line += format_double(v);
}
inline void append_field(std::string& line, const std::string& v) {
  line += v;
}
inline void append_field(std::string& line, const char* v) { line += v; }
template <typename T>
  requires std::is_integral_v<T>
inline void append_field(std::string& line, T v) {
  line += std::to_string(v);
}

// Semicolon-separated writer with a fixed header row.
class Writer {
 public:
  Writer(const std::string& path, const std::string& header) : out_(path) {
    if (!out_) {
      throw InvalidArgumentError("cannot open output file " + path);
    }
    out_ << header << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::string line;
    bool first = true;
    auto add = [&](const auto& f) {
      if (!first) line += ';';
      first = false;
      append_field(line, f);
    };
    (add(fields), ...);
    out_ << line << '\n';
  }

  // For rows assembled piecewise (variable column counts).
  void raw_row(const std::string& line) { out_ << line << '\n'; }

 private:
  std::ofstream out_;
};

}  // namespace qopt::csv
