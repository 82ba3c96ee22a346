#pragma once

// CSV form of a market panel: header `market_id,y1,y2,x1,...,xK,z1,z2`.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rigame/model.hpp"

namespace rigame {

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    out.push_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_cell(std::string_view cell, std::size_t line, const std::string& column) {
  T value{};
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last)
    throw ParseError(line, "column " + column + ": cannot parse '" + std::string(cell) + "'");
  return value;
}

inline void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline std::vector<std::string> dataset_header(std::size_t x_dim) {
  std::vector<std::string> h{"market_id", "y1", "y2"};
  for (std::size_t k = 1; k <= x_dim; ++k) h.push_back("x" + std::to_string(k));
  h.push_back("z1");
  h.push_back("z2");
  return h;
}

// Reads a panel. Each column named in `scale` is multiplied by its factor
// after parsing; the factors are kept on the dataset.
inline MarketDataset read_dataset(std::istream& in, const std::map<std::string, double>& scale = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (auto cell : detail::split_csv(line)) header.emplace_back(cell);
    break;
  }
  if (header.empty()) throw ParseError(lineno, "missing header");
  if (header.size() < 5) throw ParseError(lineno, "header needs market_id,y1,y2,[x...],z1,z2");
  const std::size_t k = header.size() - 5;
  const auto expected = dataset_header(k);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] != expected[c])
      throw ParseError(lineno, "header column " + std::to_string(c + 1) + " is '" + header[c] +
                                   "', expected '" + expected[c] + "'");
  for (const auto& [name, factor] : scale) {
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw ValidationError("scale factor given for unknown column '" + name + "'");
    if (name == "market_id" || name == "y1" || name == "y2")
      throw ValidationError("column '" + name + "' cannot be rescaled");
    if (!std::isfinite(factor) || factor == 0.0)
      throw ValidationError("scale factor for '" + name + "' must be finite and nonzero");
  }
  std::vector<double> factors(header.size(), 1.0);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (auto it = scale.find(header[c]); it != scale.end()) factors[c] = it->second;

  MarketDataset data;
  data.column_scale = scale;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    MarketRow r;
    r.market_id = detail::parse_cell<std::int64_t>(cells[0], lineno, header[0]);
    r.y1 = detail::parse_cell<int>(cells[1], lineno, header[1]);
    r.y2 = detail::parse_cell<int>(cells[2], lineno, header[2]);
    if ((r.y1 != 0 && r.y1 != 1) || (r.y2 != 0 && r.y2 != 1))
      throw ValidationError("line " + std::to_string(lineno) + ": actions must be 0 or 1");
    r.x.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double v = detail::parse_cell<double>(cells[3 + j], lineno, header[3 + j]);
      if (!std::isfinite(v)) throw ParseError(lineno, "column " + header[3 + j] + " is not finite");
      r.x[j] = v * factors[3 + j];
    }
    r.z1 = detail::parse_cell<double>(cells[3 + k], lineno, "z1") * factors[3 + k];
    r.z2 = detail::parse_cell<double>(cells[4 + k], lineno, "z2") * factors[4 + k];
    if (!std::isfinite(r.z1) || !std::isfinite(r.z2))
      throw ParseError(lineno, "covariates must be finite");
    data.rows.push_back(std::move(r));
  }
  data.validate();
  return data;
}

inline MarketDataset read_dataset(const std::string& path,
                                  const std::map<std::string, double>& scale = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_dataset(in, scale);
}

// Shortest round-trip representation of every real.
inline void write_dataset(const MarketDataset& data, std::ostream& out) {
  data.validate();
  const auto header = dataset_header(data.x_dim());
  std::string buf;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) buf += ',';
    buf += header[c];
  }
  buf += '\n';
  for (const auto& r : data.rows) {
    buf += std::to_string(r.market_id);
    buf += ',';
    buf += static_cast<char>('0' + r.y1);
    buf += ',';
    buf += static_cast<char>('0' + r.y2);
    for (double v : r.x) {
      buf += ',';
      detail::append_double(buf, v);
    }
    buf += ',';
    detail::append_double(buf, r.z1);
    buf += ',';
    detail::append_double(buf, r.z2);
    buf += '\n';
  }
  out << buf;
}

inline void write_dataset(const MarketDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_dataset(data, out);
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

}  // namespace rigame
