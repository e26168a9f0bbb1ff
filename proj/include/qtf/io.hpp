#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtf/lattice.hpp"
#include "qtf/quantile_lasso.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Round-trip-safe text form of a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& token, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse '" + token + "' as a number");
  }
  if (pos != token.size()) {
    throw std::runtime_error(where + ": trailing characters in '" + token + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(strip(cur));
  return out;
}

}  // namespace detail

/// Read a signal: one float per line with optional '#' comments, or a
/// single-column CSV whose header is `value`.
inline Signal read_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open signal file '" + path + "'");
  std::vector<double> values;
  std::string line;
  bool first_content = true;
  while (std::getline(in, line)) {
    const std::string s = detail::strip(line);
    if (s.empty() || s[0] == '#') continue;
    if (first_content && s == "value") {
      first_content = false;
      continue;  // CSV header
    }
    first_content = false;
    values.push_back(detail::parse_double(s, path));
  }
  if (values.empty()) throw std::runtime_error("signal file '" + path + "' is empty");
  return Signal(std::move(values));
}

inline void write_signal(const std::string& path, const Signal& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write signal file '" + path + "'");
  for (double v : s) out << format_double(v) << "\n";
}

/// Read a lattice: either an m x m CSV (d = 2), or a general-d file whose
/// first line is `shape: m,...,m` followed by flattened row-major values.
inline LatticeSignal read_lattice(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lattice file '" + path + "'");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    const std::string s = detail::strip(line);
    if (s.empty() || s[0] == '#') continue;
    lines.push_back(s);
  }
  if (lines.empty()) throw std::runtime_error("lattice file '" + path + "' is empty");

  if (lines[0].rfind("shape:", 0) == 0) {
    const auto dims_tokens = detail::split_csv(lines[0].substr(6));
    if (dims_tokens.empty()) throw std::runtime_error(path + ": empty shape line");
    std::size_t side = 0;
    for (std::size_t i = 0; i < dims_tokens.size(); ++i) {
      const double v = detail::parse_double(dims_tokens[i], path);
      const auto s = static_cast<std::size_t>(v);
      if (static_cast<double>(s) != v || s < 1) {
        throw std::runtime_error(path + ": shape entries must be positive integers");
      }
      if (i == 0) {
        side = s;
      } else if (s != side) {
        throw std::runtime_error(path + ": all sides must be equal");
      }
    }
    std::vector<double> values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      for (const std::string& tok : detail::split_csv(lines[i])) {
        values.push_back(detail::parse_double(tok, path));
      }
    }
    return LatticeSignal(std::move(values), side, dims_tokens.size());
  }

  // plain m x m CSV
  std::vector<double> values;
  const std::size_t side = detail::split_csv(lines[0]).size();
  if (lines.size() != side) {
    throw std::runtime_error(path + ": expected a square CSV grid, got " +
                             std::to_string(lines.size()) + " rows x " +
                             std::to_string(side) + " columns");
  }
  for (const std::string& row : lines) {
    const auto toks = detail::split_csv(row);
    if (toks.size() != side) throw std::runtime_error(path + ": ragged CSV grid");
    for (const std::string& tok : toks) {
      values.push_back(detail::parse_double(tok, path));
    }
  }
  return LatticeSignal(std::move(values), side, 2);
}

inline void write_lattice(const std::string& path, const LatticeSignal& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lattice file '" + path + "'");
  if (g.dims() == 2) {
    for (std::size_t i = 0; i < g.side(); ++i) {
      for (std::size_t j = 0; j < g.side(); ++j) {
        if (j) out << ",";
        out << format_double(g.at(i, j));
      }
      out << "\n";
    }
    return;
  }
  out << "shape: ";
  for (std::size_t d = 0; d < g.dims(); ++d) {
    if (d) out << ",";
    out << g.side();
  }
  out << "\n";
  for (double v : g.values()) out << format_double(v) << "\n";
}

/// Read a design matrix CSV: a header row of column names, then n rows of
/// p floats.
inline DesignMatrix read_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open design file '" + path + "'");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    const std::string s = detail::strip(line);
    if (s.empty() || s[0] == '#') continue;
    lines.push_back(s);
  }
  if (lines.size() < 2) throw std::runtime_error(path + ": needs a header and data rows");
  const std::size_t p = detail::split_csv(lines[0]).size();
  const std::size_t n = lines.size() - 1;
  std::vector<double> values;
  values.reserve(n * p);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto toks = detail::split_csv(lines[i]);
    if (toks.size() != p) throw std::runtime_error(path + ": ragged design row");
    for (const std::string& tok : toks) {
      values.push_back(detail::parse_double(tok, path));
    }
  }
  return DesignMatrix(n, p, std::move(values));
}

}  // namespace qtf
