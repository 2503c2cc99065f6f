// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "burstlr/binning.hpp"
#include "burstlr/csv.hpp"
#include "burstlr/error.hpp"

namespace burstlr {

enum class EventFormat { Csv, JsonLines };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view field, std::size_t line, std::string_view name) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, "field '" + std::string(name) + "' is not a number: '" +
                               std::string(field) + "'");
  }
  return v;
}

inline void strip_bom(std::string& s) {
  if (s.size() >= 3 && s.compare(0, 3, "\xEF\xBB\xBF") == 0) s.erase(0, 3);
}

}  // namespace detail

// CSV with header `t,x`, one observation per row. Blank lines are ignored.
inline std::vector<TimedObservation> read_events_csv(std::istream& in) {
  std::vector<TimedObservation> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) detail::strip_bom(line);
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(lineno, "expected two comma-separated fields");
    }
    const auto first = detail::trim(row.substr(0, comma));
    const auto second = detail::trim(row.substr(comma + 1));
    if (!header) {
      if (first != "t" || second != "x") throw ParseError(lineno, "expected header 't,x'");
      header = true;
      continue;
    }
    out.push_back({detail::parse_real(first, lineno, "t"), detail::parse_real(second, lineno, "x")});
  }
  if (!header) throw ParseError(0, "no observations");
  return out;
}

// JSON lines: one {"t": <real>, "x": <real>} object per line.
inline std::vector<TimedObservation> read_events_jsonl(std::istream& in) {
  std::vector<TimedObservation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) detail::strip_bom(line);
    if (detail::trim(line).empty()) continue;
    const auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) throw ParseError(lineno, "invalid JSON object");
    for (const char* key : {"t", "x"}) {
      if (!rec.contains(key) || !rec[key].is_number()) {
        throw ParseError(lineno, std::string("missing numeric field '") + key + "'");
      }
    }
    out.push_back({rec["t"].get<double>(), rec["x"].get<double>()});
  }
  return out;
}

inline std::vector<TimedObservation> read_events(std::istream& in, EventFormat format) {
  return format == EventFormat::Csv ? read_events_csv(in) : read_events_jsonl(in);
}

// Format from the extension (.jsonl / .json / .ndjson), otherwise from the
// first non-blank character.
inline std::vector<TimedObservation> read_events_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input file '" + path.string() + "'");
  const auto ext = path.extension().string();
  EventFormat format = EventFormat::Csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") {
    format = EventFormat::JsonLines;
  } else if (ext != ".csv") {
    char c = 0;
    while (in.get(c) && (c == ' ' || c == '\n' || c == '\r' || c == '\t')) {
    }
    if (c == '{') format = EventFormat::JsonLines;
    in.clear();
    in.seekg(0);
  }
  auto events = read_events(in, format);
  if (events.empty()) throw ParseError(0, "no observations");
  return events;
}

inline void write_events_csv(std::ostream& os, std::span<const TimedObservation> events) {
  os << "t,x\n";
  for (const auto& e : events) CsvRow(os) << e.t << e.x;
}

}  // namespace burstlr
