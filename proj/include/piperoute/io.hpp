#pragma once

// Plain-text document helpers: locale-independent 17-digit number
// formatting, a small CSV reader, and the polyline / profile documents.

#include <piperoute/errors.hpp>
#include <piperoute/frenet.hpp>
#include <piperoute/profile.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace piperoute {

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw parse_error("not a number: '" + std::string(text) + "'");
  }
  return v;
}

/// Comment lines ('#' prefixed) carrying provenance, e.g. {"seed=1", "config={...}"}.
using Provenance = std::vector<std::string>;

inline void write_provenance(std::ostream& os, const Provenance& prov) {
  for (const auto& line : prov) os << "# " << line << '\n';
}

/// Header + numeric rows; '#' lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  }

  std::size_t require(std::string_view name) const {
    const auto c = column(name);
    if (c < 0) throw parse_error("missing CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(c);
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    out.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw parse_error("CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(parse_double(c));
      } catch (const parse_error& e) {
        throw parse_error("CSV line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw parse_error("CSV document has no header row");
  return table;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

// --- polyline document ------------------------------------------------------

inline constexpr const char* kPolylineHeader =
    "s_mm,x_mm,y_mm,z_mm,Tx,Ty,Tz,Nx,Ny,Nz,Bx,By,Bz,kappa_per_mm,tau_per_mm,extension";

inline std::string polyline_to_csv(const Polyline& line, const Provenance& prov = {}) {
  std::ostringstream os;
  write_provenance(os, prov);
  os << kPolylineHeader << '\n';
  for (const auto& p : line.points) {
    os << format_double(p.s);
    for (const Vec3* v : {&p.r, &p.frame.T, &p.frame.N, &p.frame.B}) {
      for (int i = 0; i < 3; ++i) os << ',' << format_double((*v)[i]);
    }
    os << ',' << format_double(p.kappa) << ',' << format_double(p.tau) << ',' << (p.extension ? 1 : 0)
       << '\n';
  }
  return os.str();
}

inline Polyline polyline_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  static const char* names[] = {"s_mm", "x_mm", "y_mm", "z_mm", "Tx", "Ty", "Tz", "Nx",
                                "Ny",   "Nz",   "Bx",   "By",   "Bz", "kappa_per_mm", "tau_per_mm", "extension"};
  std::size_t col[16];
  for (int i = 0; i < 16; ++i) col[i] = t.require(names[i]);
  Polyline line;
  line.points.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    PathSample p;
    p.s = row[col[0]];
    p.r = Vec3(row[col[1]], row[col[2]], row[col[3]]);
    p.frame.T = Vec3(row[col[4]], row[col[5]], row[col[6]]);
    p.frame.N = Vec3(row[col[7]], row[col[8]], row[col[9]]);
    p.frame.B = Vec3(row[col[10]], row[col[11]], row[col[12]]);
    p.kappa = row[col[13]];
    p.tau = row[col[14]];
    p.extension = row[col[15]] != 0.0;
    line.points.push_back(p);
  }
  if (line.empty()) throw parse_error("polyline document has no samples");
  return line;
}

// --- curvature/torsion profile document --------------------------------------

struct ProfileSample {
  double s = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
};

/// Samples the profile on s_begin, s_begin+ds, ..., s_end (last sample exact).
inline std::vector<ProfileSample> sample_profile(const GeoProfile& profile, double ds = 1.0) {
  if (!(ds > 0.0)) throw domain_error("sample_profile: ds must be positive");
  std::vector<ProfileSample> out;
  const double s0 = profile.s_begin();
  const double s1 = profile.s_end();
  for (std::size_t k = 0;; ++k) {
    double s = s0 + static_cast<double>(k) * ds;
    const bool last = s >= s1 - 1e-9;
    if (last) s = s1;
    const auto v = profile.eval(s);
    out.push_back({s, v.kappa, v.tau});
    if (last) break;
  }
  return out;
}

inline std::string profile_to_csv(const std::vector<ProfileSample>& samples, const Provenance& prov = {}) {
  std::ostringstream os;
  write_provenance(os, prov);
  os << "s_mm,kappa_per_mm,tau_per_mm\n";
  for (const auto& p : samples) {
    os << format_double(p.s) << ',' << format_double(p.kappa) << ',' << format_double(p.tau) << '\n';
  }
  return os.str();
}

inline std::vector<ProfileSample> profile_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const auto cs = t.require("s_mm");
  const auto ck = t.require("kappa_per_mm");
  const auto ct = t.require("tau_per_mm");
  std::vector<ProfileSample> out;
  for (const auto& row : t.rows) out.push_back({row[cs], row[ck], row[ct]});
  if (out.empty()) throw parse_error("profile document has no samples");
  return out;
}

}  // namespace piperoute
