#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lexifair/core.hpp"
#include "lexifair/oracle.hpp"

namespace lexifair {

/// Malformed input file; the message carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(std::string_view field, std::size_t line, const char* what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  return v;
}

inline int parse_int(std::string_view field, std::size_t line, const char* what) {
  int v = 0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end)
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  return v;
}

inline void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace detail

/// Reads `f0,...,f{d-1},label,groups` with 1-based `;`-separated groups.
/// K is the largest group index seen unless `num_groups` is given.
inline GroupedDataset read_dataset(std::istream& in, int num_groups = 0,
                                   GroupedDataset::EmptyGroups empty = GroupedDataset::EmptyGroups::kReject) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  detail::strip_cr(line);
  const auto header = detail::split(line, ',');
  if (header.size() < 3) throw ParseError(1, "header needs at least one feature, label and groups");
  const std::size_t d = header.size() - 2;
  for (std::size_t f = 0; f < d; ++f)
    if (header[f] != "f" + std::to_string(f)) throw ParseError(1, "expected column f" + std::to_string(f));
  if (header[d] != "label" || header[d + 1] != "groups") throw ParseError(1, "last columns must be label,groups");

  std::vector<std::vector<double>> features;
  std::vector<double> labels;
  std::vector<std::vector<int>> groups;
  int max_group = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) {
      // Only trailing blank lines are allowed.
      std::string rest;
      while (std::getline(in, rest)) {
        ++lineno;
        detail::strip_cr(rest);
        if (!rest.empty()) throw ParseError(lineno, "data after a blank line");
      }
      break;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != d + 2)
      throw ParseError(lineno, "expected " + std::to_string(d + 2) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> x(d);
    for (std::size_t f = 0; f < d; ++f) x[f] = detail::parse_double(fields[f], lineno, "feature");
    const double y = detail::parse_double(fields[d], lineno, "label");
    std::vector<int> g;
    for (auto tok : detail::split(fields[d + 1], ';')) {
      const int k = detail::parse_int(tok, lineno, "group index");
      if (k < 1) throw ParseError(lineno, "group indices are 1-based");
      if (num_groups > 0 && k > num_groups)
        throw ParseError(lineno, "group index " + std::to_string(k) + " exceeds K = " + std::to_string(num_groups));
      max_group = std::max(max_group, k);
      g.push_back(k - 1);
    }
    features.push_back(std::move(x));
    labels.push_back(y);
    groups.push_back(std::move(g));
  }
  if (features.empty()) throw ParseError(lineno, "no data rows");
  const int K = num_groups > 0 ? num_groups : max_group;
  try {
    return GroupedDataset(std::move(features), std::move(labels), std::move(groups), K, empty);
  } catch (const InvariantViolation& e) {
    throw ParseError(lineno, e.what());
  }
}

inline GroupedDataset read_dataset_file(const std::string& path, int num_groups = 0,
                                        GroupedDataset::EmptyGroups empty = GroupedDataset::EmptyGroups::kReject) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_dataset(in, num_groups, empty);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_dataset(std::ostream& out, const GroupedDataset& data) {
  for (std::size_t f = 0; f < data.dim(); ++f) out << 'f' << f << ',';
  out << "label,groups\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features(i)) out << format_double(v) << ',';
    out << format_double(data.label(i)) << ',';
    bool first = true;
    for (int g : data.memberships(i)) {
      if (!first) out << ';';
      out << g + 1;
      first = false;
    }
    out << '\n';
  }
}

/// K rows of comma-separated non-negative reals, one column per hypothesis.
inline LossMatrix read_loss_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto tok : detail::split(line, ',')) {
      const double v = detail::parse_double(tok, lineno, "loss entry");
      if (v < 0.0) throw ParseError(lineno, "loss entries must be non-negative");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(lineno, "row has " + std::to_string(row.size()) + " columns, expected " +
                                   std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(lineno, "empty loss matrix");
  return LossMatrix::from_rows(rows);
}

inline LossMatrix read_loss_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_loss_matrix(in);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_loss_matrix(std::ostream& out, const LossMatrix& m) {
  for (int k = 0; k < m.rows(); ++k) {
    for (std::size_t h = 0; h < m.cols(); ++h) {
      if (h) out << ',';
      out << format_double(m(k, h));
    }
    out << '\n';
  }
}

}  // namespace lexifair
