#pragma once

// File formats shared by the experiment drivers: the per-trial eigenvalue
// table as CSV, run summaries as JSON, and a spectrum scatter as standalone
// SVG.  Everything here renders to strings first so tests can compare bytes
// without touching the filesystem; the thin write_* wrappers add io_error
// reporting on top.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "outlab/errors.hpp"
#include "outlab/matrix.hpp"

namespace outlab {

// One row of the eigenvalue table.  kind is "bulk" or "outlier";
// multiplicity is 1 for rows coming from a dense solve (each computed
// eigenvalue gets its own row) and the detected multiplicity for rows coming
// from the determinant zero finder.
struct EigenRow {
  long trial = 0;
  double re = 0.0;
  double im = 0.0;
  std::string kind = "bulk";
  int multiplicity = 1;
};

// 17 significant digits round-trip every finite double exactly.
inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kEigenCsvHeader = "trial,re,im,kind,multiplicity";

inline std::string render_eigen_csv(const std::vector<EigenRow>& rows) {
  std::string out = kEigenCsvHeader;
  out += '\n';
  for (const EigenRow& r : rows) {
    out += std::to_string(r.trial);
    out += ',';
    out += format_full(r.re);
    out += ',';
    out += format_full(r.im);
    out += ',';
    out += r.kind;
    out += ',';
    out += std::to_string(r.multiplicity);
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_double_field(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw io_error("eigenvalue table: bad numeric field '" + s + "' on line " +
                   std::to_string(line_no));
  return v;
}

inline long parse_long_field(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw io_error("eigenvalue table: bad integer field '" + s + "' on line " +
                   std::to_string(line_no));
  return v;
}

}  // namespace detail

inline std::vector<EigenRow> parse_eigen_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw io_error("eigenvalue table: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEigenCsvHeader)
    throw io_error("eigenvalue table: unexpected header '" + line + "'");
  std::vector<EigenRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = detail::split_fields(line);
    if (f.size() != 5)
      throw io_error("eigenvalue table: expected 5 fields on line " + std::to_string(line_no));
    EigenRow r;
    r.trial = detail::parse_long_field(f[0], line_no);
    r.re = detail::parse_double_field(f[1], line_no);
    r.im = detail::parse_double_field(f[2], line_no);
    r.kind = f[3];
    if (r.kind != "bulk" && r.kind != "outlier")
      throw io_error("eigenvalue table: unknown kind '" + r.kind + "' on line " +
                     std::to_string(line_no));
    r.multiplicity = static_cast<int>(detail::parse_long_field(f[4], line_no));
    if (r.multiplicity < 1)
      throw io_error("eigenvalue table: multiplicity must be positive on line " +
                     std::to_string(line_no));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw io_error("read from '" + path + "' failed");
  return buf.str();
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

// Fixed 6-significant-digit rendering for SVG coordinates: plenty for a plot
// and stable across platforms.
inline std::string svg_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

// Scatter plot of one run: the unit circle for the bulk boundary, bulk
// eigenvalues as small dots, outliers as larger marked dots, and an optional
// circle of radius n^{-1/4} around each predicted outlier location.
inline std::string render_scatter_svg(const std::vector<EigenRow>& rows,
                                      const std::vector<Complex>& predictions, std::size_t n) {
  const double pred_radius =
      n > 0 ? std::pow(static_cast<double>(n), -0.25) : 0.0;
  double extent = 1.6;
  for (const EigenRow& r : rows)
    extent = std::max(extent, 1.1 * std::hypot(r.re, r.im));
  for (Complex z : predictions) extent = std::max(extent, 1.1 * (std::abs(z) + pred_radius));

  const double size = 640.0, margin = 20.0;
  const double scale = (size / 2.0 - margin) / extent;
  auto px = [&](double x) { return size / 2.0 + scale * x; };
  auto py = [&](double y) { return size / 2.0 - scale * y; };  // SVG y grows downward

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_num(size) +
       "\" height=\"" + detail::svg_num(size) + "\" viewBox=\"0 0 " + detail::svg_num(size) +
       " " + detail::svg_num(size) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<line x1=\"0\" y1=\"" + detail::svg_num(py(0)) + "\" x2=\"" + detail::svg_num(size) +
       "\" y2=\"" + detail::svg_num(py(0)) + "\" stroke=\"#dddddd\"/>\n";
  s += "<line x1=\"" + detail::svg_num(px(0)) + "\" y1=\"0\" x2=\"" + detail::svg_num(px(0)) +
       "\" y2=\"" + detail::svg_num(size) + "\" stroke=\"#dddddd\"/>\n";
  s += "<circle cx=\"" + detail::svg_num(px(0)) + "\" cy=\"" + detail::svg_num(py(0)) +
       "\" r=\"" + detail::svg_num(scale) +
       "\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
  for (Complex z : predictions) {
    s += "<circle class=\"prediction\" cx=\"" + detail::svg_num(px(z.real())) + "\" cy=\"" +
         detail::svg_num(py(z.imag())) + "\" r=\"" + detail::svg_num(scale * pred_radius) +
         "\" fill=\"none\" stroke=\"#cc8800\" stroke-width=\"1.5\"/>\n";
  }
  for (const EigenRow& r : rows) {
    if (r.kind == "outlier") continue;
    s += "<circle class=\"bulk\" cx=\"" + detail::svg_num(px(r.re)) + "\" cy=\"" +
         detail::svg_num(py(r.im)) + "\" r=\"1.8\" fill=\"#3b6ea5\" fill-opacity=\"0.6\"/>\n";
  }
  for (const EigenRow& r : rows) {
    if (r.kind != "outlier") continue;
    s += "<circle class=\"outlier\" cx=\"" + detail::svg_num(px(r.re)) + "\" cy=\"" +
         detail::svg_num(py(r.im)) + "\" r=\"3.5\" fill=\"#c0392b\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace outlab
