// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace burstlr {

// Shortest-safe round-trip text form of a double ("%.17g").
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Comma-separated row writer; fields are never quoted, so callers must not
// pass text containing commas or newlines.
class CsvRow {
 public:
  explicit CsvRow(std::ostream& os) : os_(os) {}
  ~CsvRow() { os_ << '\n'; }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(std::string_view s) {
    sep();
    os_ << s;
    return *this;
  }
  CsvRow& operator<<(const char* s) { return *this << std::string_view(s); }
  CsvRow& operator<<(const std::string& s) { return *this << std::string_view(s); }
  CsvRow& operator<<(double v) {
    sep();
    os_ << format_real(v);
    return *this;
  }
  CsvRow& operator<<(std::size_t v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvRow& operator<<(int v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvRow& operator<<(bool v) {
    sep();
    os_ << (v ? 1 : 0);
    return *this;
  }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }

  std::ostream& os_;
  bool first_ = true;
};

}  // namespace burstlr
