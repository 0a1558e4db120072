#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "lrmr/bench.hpp"
#include "lrmr/errors.hpp"

namespace lrmr {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ArgumentError("csv line " + std::to_string(line) + ": not a number: " + s);
  }
  return v;
}

bool parse_bool(const std::string& s, std::size_t line) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ArgumentError("csv line " + std::to_string(line) + ": not a boolean: " + s);
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Point {
  double x, lo, mid, hi;
};

}  // namespace

std::string csv_row(const BenchRecord& r) {
  std::string row;
  row += std::to_string(r.trial) + ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2) + ',' +
         std::to_string(r.m) + ',' + std::to_string(r.rank) + ',' + fmt(r.sigma) + ',' + r.solver +
         ',' + fmt(r.err_fro_sq) + ',' + fmt(r.ideal_risk) + ',' + fmt(r.minimax_ref) + ',' +
         fmt(r.ratio_ideal) + ',' + fmt(r.ratio_minimax) + ',' + fmt(r.dual_norm) + ',' +
         std::to_string(r.iterations) + ',' + (r.converged ? "true" : "false") + ',' +
         fmt(r.wall_ms);
  return row;
}

void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << csv_row(r) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<BenchRecord> parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ArgumentError("csv " + path.string() + ": unexpected header");
  }
  std::vector<BenchRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 16) {
      throw ArgumentError("csv line " + std::to_string(lineno) + ": expected 16 columns, got " +
                          std::to_string(c.size()));
    }
    BenchRecord r;
    r.trial = static_cast<int>(parse_double(c[0], lineno));
    r.n1 = static_cast<std::size_t>(parse_double(c[1], lineno));
    r.n2 = static_cast<std::size_t>(parse_double(c[2], lineno));
    r.m = static_cast<std::size_t>(parse_double(c[3], lineno));
    r.rank = static_cast<std::size_t>(parse_double(c[4], lineno));
    r.sigma = parse_double(c[5], lineno);
    r.solver = c[6];
    r.err_fro_sq = parse_double(c[7], lineno);
    r.ideal_risk = parse_double(c[8], lineno);
    r.minimax_ref = parse_double(c[9], lineno);
    r.ratio_ideal = parse_double(c[10], lineno);
    r.ratio_minimax = parse_double(c[11], lineno);
    r.dual_norm = parse_double(c[12], lineno);
    r.iterations = static_cast<int>(parse_double(c[13], lineno));
    r.converged = parse_bool(c[14], lineno);
    r.wall_ms = parse_double(c[15], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

double column_value(const BenchRecord& r, std::string_view c) {
  if (c == "trial") return r.trial;
  if (c == "n1") return static_cast<double>(r.n1);
  if (c == "n2") return static_cast<double>(r.n2);
  if (c == "m") return static_cast<double>(r.m);
  if (c == "rank") return static_cast<double>(r.rank);
  if (c == "sigma") return r.sigma;
  if (c == "err_fro_sq") return r.err_fro_sq;
  if (c == "ideal_risk") return r.ideal_risk;
  if (c == "minimax_ref") return r.minimax_ref;
  if (c == "ratio_ideal") return r.ratio_ideal;
  if (c == "ratio_minimax") return r.ratio_minimax;
  if (c == "dual_norm") return r.dual_norm;
  if (c == "iterations") return r.iterations;
  if (c == "converged") return r.converged ? 1.0 : 0.0;
  if (c == "wall_ms") return r.wall_ms;
  if (c == "solver") throw ArgumentError("column solver is not numeric");
  throw ArgumentError("unknown column: " + std::string(c));
}

std::string column_label(const BenchRecord& r, std::string_view c) {
  if (c == "solver") return r.solver;
  if (c == "converged") return r.converged ? "true" : "false";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", column_value(r, c));
  return buf;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("loglog_slope: length mismatch");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || !(std::abs(den) > 0.0)) throw ArgumentError("loglog_slope: need two distinct positive x values");
  return (n * sxy - sx * sy) / den;
}

std::string svg_plot(const std::vector<BenchRecord>& records, std::string_view x_axis,
                     std::string_view y_axis, std::string_view group_by) {
  BenchRecord probe;
  column_value(probe, x_axis);
  column_value(probe, y_axis);
  column_label(probe, group_by);

  std::map<std::string, std::map<double, std::vector<double>>> groups;
  for (const auto& r : records) {
    const double x = column_value(r, x_axis);
    const double y = column_value(r, y_axis);
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) continue;
    groups[column_label(r, group_by)][x].push_back(y);
  }
  std::map<std::string, std::vector<Point>> series;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (auto& [label, cells] : groups) {
    for (auto& [x, ys] : cells) {
      std::sort(ys.begin(), ys.end());
      const std::size_t h = ys.size() / 2;
      const double mid = ys.size() % 2 == 1 ? ys[h] : 0.5 * (ys[h - 1] + ys[h]);
      series[label].push_back({std::log10(x), std::log10(ys.front()), std::log10(mid), std::log10(ys.back())});
      x0 = std::min(x0, std::log10(x));
      x1 = std::max(x1, std::log10(x));
      y0 = std::min(y0, std::log10(ys.front()));
      y1 = std::max(y1, std::log10(ys.back()));
    }
  }
  if (series.empty()) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  auto widen = [](double& lo, double& hi) {
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  };
  widen(x0, x1);
  widen(y0, y1);

  constexpr double W = 640, H = 440, L = 80, R = 150, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * pw; };
  auto py = [&](double ly) { return T + (1.0 - (ly - y0) / (y1 - y0)) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt_fixed(L + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(y_axis) << " vs " << xml_escape(x_axis) << " (log-log)</text>\n";
  s << "<rect x=\"" << fmt_fixed(L) << "\" y=\"" << fmt_fixed(T) << "\" width=\"" << fmt_fixed(pw)
    << "\" height=\"" << fmt_fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto ticks = [](double lo, double hi) {
    std::vector<double> t;
    for (double d = std::ceil(lo); d <= std::floor(hi); d += 1.0) t.push_back(d);
    if (t.empty()) t = {lo, hi};
    return t;
  };
  auto tick_label = [](double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::pow(10.0, d));
    return std::string(buf);
  };
  for (double d : ticks(x0, x1)) {
    s << "<line x1=\"" << fmt_fixed(px(d)) << "\" y1=\"" << fmt_fixed(T + ph) << "\" x2=\"" << fmt_fixed(px(d))
      << "\" y2=\"" << fmt_fixed(T + ph + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt_fixed(px(d)) << "\" y=\"" << fmt_fixed(T + ph + 20)
      << "\" text-anchor=\"middle\">" << tick_label(d) << "</text>\n";
  }
  for (double d : ticks(y0, y1)) {
    s << "<line x1=\"" << fmt_fixed(L - 5) << "\" y1=\"" << fmt_fixed(py(d)) << "\" x2=\"" << fmt_fixed(L)
      << "\" y2=\"" << fmt_fixed(py(d)) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt_fixed(L - 8) << "\" y=\"" << fmt_fixed(py(d) + 4)
      << "\" text-anchor=\"end\">" << tick_label(d) << "</text>\n";
  }
  s << "<text x=\"" << fmt_fixed(L + pw / 2) << "\" y=\"" << fmt_fixed(H - 15)
    << "\" text-anchor=\"middle\">" << xml_escape(x_axis) << "</text>\n";
  s << "<text x=\"18\" y=\"" << fmt_fixed(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fmt_fixed(T + ph / 2) << ")\">" << xml_escape(y_axis) << "</text>\n";

  std::size_t g = 0;
  for (const auto& [label, pts] : series) {
    const char* color = kPalette[g % std::size(kPalette)];
    if (pts.size() > 1) {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        s << (i ? " " : "") << fmt_fixed(px(pts[i].x)) << ',' << fmt_fixed(py(pts[i].mid));
      }
      s << "\"/>\n";
    }
    for (const auto& p : pts) {
      s << "<line x1=\"" << fmt_fixed(px(p.x)) << "\" y1=\"" << fmt_fixed(py(p.lo)) << "\" x2=\""
        << fmt_fixed(px(p.x)) << "\" y2=\"" << fmt_fixed(py(p.hi)) << "\" stroke=\"" << color << "\"/>\n";
      s << "<circle cx=\"" << fmt_fixed(px(p.x)) << "\" cy=\"" << fmt_fixed(py(p.mid))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 10 + 18.0 * static_cast<double>(g);
    s << "<line x1=\"" << fmt_fixed(L + pw + 12) << "\" y1=\"" << fmt_fixed(ly) << "\" x2=\""
      << fmt_fixed(L + pw + 32) << "\" y2=\"" << fmt_fixed(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << fmt_fixed(L + pw + 38) << "\" y=\"" << fmt_fixed(ly + 4) << "\">"
      << xml_escape(group_by) << '=' << xml_escape(label) << "</text>\n";
    ++g;
  }
  s << "</svg>\n";
  return s.str();
}

void emit_svg_plot(const std::vector<BenchRecord>& records, std::string_view x_axis,
                   std::string_view y_axis, std::string_view group_by,
                   const std::filesystem::path& path) {
  const std::string svg = svg_plot(records, x_axis, y_axis, group_by);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << svg;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lrmr
