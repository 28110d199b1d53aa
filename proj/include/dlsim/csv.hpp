#pragma once

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dlsim/errors.hpp"
#include "dlsim/observables.hpp"
#include "dlsim/version.hpp"

namespace dlsim {

/// Fixed leading columns; population and current channels follow.
inline const std::vector<std::string>& csv_leading_columns() {
  static const std::vector<std::string> cols = {"t_fs", "A_au", "E_au"};
  return cols;
}

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

/// CSV text for a series. Layout: the version line, one `# key = value` line
/// per metadata entry, the column header, then one row per time. Channels
/// named A_au and E_au are placed right after t_fs.
inline std::string format_csv(const ObservableSeries& series) {
  std::string out = "# driven-lattice-sim v" + std::string(kVersion) + "\n";
  for (const auto& [key, value] : series.metadata) out += "# " + key + " = " + value + "\n";

  std::vector<std::string> columns;
  for (const std::string& c : {std::string("A_au"), std::string("E_au")})
    if (series.has_channel(c)) columns.push_back(c);
  for (const std::string& c : series.channel_names())
    if (c != "A_au" && c != "E_au") columns.push_back(c);

  out += "t_fs";
  for (const std::string& c : columns) out += "," + c;
  out += "\n";

  std::vector<const std::vector<double>*> data;
  for (const std::string& c : columns) data.push_back(&series.channel(c));
  for (std::size_t i = 0; i < series.size(); ++i) {
    detail::append_number(out, series.times()[i]);
    for (const auto* col : data) {
      out += ',';
      detail::append_number(out, (*col)[i]);
    }
    out += '\n';
  }
  return out;
}

/// Writes through a temporary file and renames, so a failed write leaves no
/// partial output behind.
inline void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + tmp + ": " + std::strerror(errno));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    f.flush();
    if (!f) {
      f.close();
      std::remove(tmp.c_str());
      throw Error(ErrorCode::IoError, "write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::IoError, "cannot move output into place at " + path + ": " + std::strerror(errno));
  }
}

inline void write_csv(const ObservableSeries& series, const std::string& path) {
  write_text_file(path, format_csv(series));
}

/// Parses text produced by format_csv. Values come back bit-exact.
inline ObservableSeries parse_csv(const std::string& text) {
  ObservableSeries series;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos && line.size() > 2) series.metadata[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!header_seen) {
      if (fields.empty() || fields[0] != "t_fs")
        throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": expected t_fs header");
      for (std::size_t c = 1; c < fields.size(); ++c) series.add_channel(fields[c]);
      header_seen = true;
      row.resize(fields.size() - 1);
      continue;
    }
    if (fields.size() != row.size() + 1)
      throw Error(ErrorCode::LengthMismatch, "line " + std::to_string(line_no) + ": wrong column count");
    auto number = [&](const std::string& s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
      return v;
    };
    const double t = number(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) row[c - 1] = number(fields[c]);
    series.append(t, row);
  }
  return series;
}

inline ObservableSeries read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace dlsim
