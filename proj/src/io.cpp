#include "mmls/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "mmls/errors.hpp"

namespace mmls {

namespace {

bool blank(const std::string& s) {
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

void chomp(std::string& s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
}

// header form: `# n=<n> d=<d>`, both fields optional after the first
bool parse_header(const std::string& line, std::optional<Index>& n,
                  std::optional<Index>& d) {
  if (line.empty() || line[0] != '#') return false;
  std::size_t i = 1;
  auto skip_ws = [&] { while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i; };
  skip_ws();
  while (i < line.size()) {
    const char key = line[i];
    if ((key != 'n' && key != 'd') || i + 1 >= line.size() || line[i + 1] != '=')
      return false;
    i += 2;
    char* end = nullptr;
    const long v = std::strtol(line.c_str() + i, &end, 10);
    if (end == line.c_str() + i || v < 1) return false;
    (key == 'n' ? n : d) = static_cast<Index>(v);
    i = static_cast<std::size_t>(end - line.c_str());
    skip_ws();
  }
  return true;
}

std::vector<double> parse_row(const std::string& line, long row) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::string tok = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == s || (end && *end != '\0'))
      throw ParseError("row " + std::to_string(row) + ": unreadable number '" + tok + "'",
                       row);
    if (!std::isfinite(v))
      throw ParseError("row " + std::to_string(row) + ": non-finite value", row);
    vals.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return vals;
}

}  // namespace

PointCloud read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);

  std::vector<std::vector<double>> rows;
  std::optional<Index> header_n, header_d;
  std::string line;
  long lineno = 0;
  bool saw_any = false;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (blank(line)) continue;
    if (!saw_any && line[0] == '#') {
      saw_any = true;
      if (!parse_header(line, header_n, header_d))
        throw ParseError("row 1: malformed header line", 1);
      continue;
    }
    saw_any = true;
    if (line[0] == '#')
      throw ParseError("row " + std::to_string(lineno) + ": stray comment line", lineno);
    auto vals = parse_row(line, lineno);
    if (!rows.empty() && vals.size() != rows.front().size())
      throw ParseError("row " + std::to_string(lineno) + ": expected " +
                           std::to_string(rows.front().size()) + " columns, got " +
                           std::to_string(vals.size()),
                       lineno);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("no data rows in '" + path + "'", lineno);
  if (header_n && static_cast<std::size_t>(*header_n) != rows.front().size())
    throw ParseError("header says n=" + std::to_string(*header_n) + " but rows have " +
                         std::to_string(rows.front().size()) + " columns",
                     1);

  PointCloud cloud;
  cloud.points.resize(static_cast<Index>(rows.front().size()),
                      static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      cloud.points(static_cast<Index>(k), static_cast<Index>(i)) = rows[i][k];
  return cloud;
}

std::optional<Index> read_cloud_header_d(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::string line;
  while (std::getline(in, line)) {
    chomp(line);
    if (blank(line)) continue;
    std::optional<Index> n, d;
    if (line[0] == '#' && parse_header(line, n, d)) return d;
    return std::nullopt;
  }
  return std::nullopt;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud,
                     std::optional<Index> d) {
  if (!cloud.points.allFinite())
    throw DomainError("refusing to write non-finite points");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << "# n=" << cloud.ambient_dim();
  if (d) out << " d=" << *d;
  out << "\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index k = 0; k < cloud.ambient_dim(); ++k) {
      if (k) out << ",";
      out << format_g17(cloud.points(k, i));
    }
    out << "\n";
  }
  if (!out) throw DomainError("short write to '" + path + "'");
}

}  // namespace mmls
