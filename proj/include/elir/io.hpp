// Copyright 2026 The elir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ELIR_IO_HPP
#define ELIR_IO_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "elir/error.hpp"
#include "elir/hierarchy.hpp"

// Plain-text readers and writers for trial tables and sample columns.
// Blank lines and lines starting with '#' are skipped.

namespace elir {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

inline bool skippable(std::string_view line) { return line.empty() || line.front() == '#'; }

[[noreturn]] inline void fail_at(const std::string& source, std::size_t line, const std::string& what) {
  fail(ErrorCode::parse_error, source + ":" + std::to_string(line) + ": " + what);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse_error, "cannot open " + path.string());
  return in;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace detail

/// Reads `label,r,n` rows. A header row naming those columns is optional.
inline std::vector<TrialRecord> read_trials(std::istream& in, const std::string& source = "<input>") {
  std::vector<TrialRecord> out;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (detail::skippable(line)) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != 3) detail::fail_at(source, line_no, "expected 3 fields label,r,n, got " + std::to_string(f.size()));
    if (first && detail::iequals(f[0], "label") && detail::iequals(f[1], "r") && detail::iequals(f[2], "n")) {
      first = false;
      continue;
    }
    first = false;
    TrialRecord t{std::string(f[0]), 0, 0};
    if (!detail::parse_number(f[1], t.responders)) detail::fail_at(source, line_no, "r is not an integer");
    if (!detail::parse_number(f[2], t.size)) detail::fail_at(source, line_no, "n is not an integer");
    if (t.size < 1 || t.responders < 0 || t.responders > t.size) {
      detail::fail_at(source, line_no, "need 0 <= r <= n and n >= 1");
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) detail::fail(ErrorCode::parse_error, source + ": no trial rows");
  return out;
}

inline std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_trials(in, path.string());
}

inline void write_trials(std::ostream& os, const std::vector<TrialRecord>& trials) {
  os << "label,r,n\n";
  for (const auto& t : trials) os << t.label << ',' << t.responders << ',' << t.size << '\n';
}

/// Reads one value per line; an optional non-numeric first line is a header.
/// Extra comma-separated columns are ignored.
inline std::vector<double> read_samples(std::istream& in, const std::string& source = "<input>") {
  std::vector<double> out;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (detail::skippable(line)) continue;
    const std::string_view field = detail::split_fields(line).front();
    double v = 0.0;
    if (!detail::parse_number(field, v)) {
      if (first) {
        first = false;
        continue;
      }
      detail::fail_at(source, line_no, "not a number: '" + std::string(field) + "'");
    }
    first = false;
    if (!std::isfinite(v)) detail::fail_at(source, line_no, "value is not finite");
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> read_samples(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_samples(in, path.string());
}

inline void write_samples(std::ostream& os, std::span<const double> x, std::string_view header = "value") {
  os << header << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const double v : x) os << v << '\n';
}

}  // namespace elir

#endif  // ELIR_IO_HPP
