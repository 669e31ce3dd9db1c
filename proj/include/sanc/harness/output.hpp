#pragma once

// CSV trajectories and key-value run reports.

#include <charconv>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "sanc/sde.hpp"

namespace sanc {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Column order: t, x1..xn, u, then the record's named channels.
inline std::vector<std::string> csv_header(const TrajectoryRecord& rec, int order) {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= order; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("u");
  for (const auto& name : rec.channel_names) cols.push_back(name);
  return cols;
}

inline void write_csv(const TrajectoryRecord& rec, int order, std::ostream& out) {
  const auto cols = csv_header(rec, order);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (std::size_t k = 0; k < rec.size(); ++k) {
    out << format_double(rec.times[k]);
    for (int i = 0; i < order; ++i) out << ',' << format_double(rec.states[k][i]);
    out << ',' << format_double(rec.controls[k]);
    for (const auto& ch : rec.channels) out << ',' << format_double(ch[k]);
    out << '\n';
  }
}

inline std::string csv_text(const TrajectoryRecord& rec, int order) {
  std::ostringstream ss;
  write_csv(rec, order, ss);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline std::uint64_t emit_csv(const TrajectoryRecord& rec, int order, const std::string& path) {
  const auto text = csv_text(rec, order);
  write_file(path, text);
  return fnv1a64(text);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw std::out_of_range("no CSV column '" + name + "'");
  }
};

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{}) throw std::runtime_error("bad CSV number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size()) throw std::runtime_error("CSV row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Ordered key = value report.
class Report {
 public:
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_double(value)); }
  void add(std::string key, long long value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw std::out_of_range("no report key '" + key + "'");
  }

  std::string body() const {
    std::string s;
    for (const auto& [k, v] : entries_) s += k + " = " + v + "\n";
    return s;
  }

  std::uint64_t digest() const { return fnv1a64(body()); }

  /// Body followed by its own digest line.
  std::string text() const { return body() + "report_digest = " + hex64(digest()) + "\n"; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void emit_report(const Report& report, const std::string& path) { write_file(path, report.text()); }

}  // namespace sanc
