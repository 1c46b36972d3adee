#include "binsreg/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "binsreg/csv.hpp"
#include "binsreg/errors.hpp"

namespace binsreg {

namespace {

const std::vector<std::string> kSymbols = {"circle", "square", "triangle", "diamond", "cross"};
const std::vector<std::string> kPatterns = {"solid", "dash", "dot", "dashdot"};

std::ofstream open_for_write(const std::filesystem::path& path, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path)) {
    throw ConfigError("file exists (use --replace to overwrite): " + path.string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path.string());
  return out;
}

int bin_label(const EvalGrid& grid, std::size_t i) { return grid.is_knot[i] ? 0 : grid.bin[i] + 1; }

Series from_grid(SeriesKind kind, const EvalGrid& grid, const std::vector<double>& y,
                 const std::vector<double>* lower, const std::vector<double>* upper) {
  Series s;
  s.kind = kind;
  s.points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SeriesPoint p;
    p.x = grid.points[i];
    p.y = y[i];
    if (lower) p.lower = (*lower)[i];
    if (upper) p.upper = (*upper)[i];
    p.bin = bin_label(grid, i);
    p.is_knot = grid.is_knot[i];
    s.points.push_back(p);
  }
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

std::string dash_attr(const std::string& pattern) {
  if (pattern == "dash") return " stroke-dasharray=\"6,4\"";
  if (pattern == "dot") return " stroke-dasharray=\"2,3\"";
  if (pattern == "dashdot") return " stroke-dasharray=\"6,3,2,3\"";
  return "";
}

std::string marker(const std::string& symbol, double cx, double cy, const std::string& color,
                   const std::string& cls) {
  constexpr double r = 4.0;
  std::ostringstream o;
  if (symbol == "square") {
    o << "<rect class=\"" << cls << "\" x=\"" << num(cx - r) << "\" y=\"" << num(cy - r) << "\" width=\""
      << num(2 * r) << "\" height=\"" << num(2 * r) << "\" fill=\"" << color << "\"/>";
  } else if (symbol == "triangle") {
    o << "<polygon class=\"" << cls << "\" points=\"" << num(cx) << ',' << num(cy - r) << ' ' << num(cx + r)
      << ',' << num(cy + r) << ' ' << num(cx - r) << ',' << num(cy + r) << "\" fill=\"" << color << "\"/>";
  } else if (symbol == "diamond") {
    o << "<polygon class=\"" << cls << "\" points=\"" << num(cx) << ',' << num(cy - r) << ' ' << num(cx + r)
      << ',' << num(cy) << ' ' << num(cx) << ',' << num(cy + r) << ' ' << num(cx - r) << ',' << num(cy)
      << "\" fill=\"" << color << "\"/>";
  } else if (symbol == "cross") {
    o << "<path class=\"" << cls << "\" d=\"M" << num(cx - r) << ' ' << num(cy - r) << 'L' << num(cx + r) << ' '
      << num(cy + r) << 'M' << num(cx - r) << ' ' << num(cy + r) << 'L' << num(cx + r) << ' ' << num(cy - r)
      << "\" stroke=\"" << color << "\" stroke-width=\"1.5\" fill=\"none\"/>";
  } else {
    o << "<circle class=\"" << cls << "\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
      << "\" fill=\"" << color << "\"/>";
  }
  return o.str();
}

// Round step of 1, 2 or 5 times a power of ten giving about `target` ticks.
double tick_step(double range, int target) {
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    const double span = hi > lo ? hi - lo : std::max(1.0, std::abs(lo));
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

}  // namespace

std::string to_string(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::dots: return "dots";
    case SeriesKind::line: return "line";
    case SeriesKind::ci: return "ci";
    case SeriesKind::cb: return "cb";
    case SeriesKind::polyreg: return "polyreg";
    case SeriesKind::polyregci: return "polyregci";
  }
  return "dots";
}

SeriesKind series_kind_from_string(const std::string& name) {
  for (auto k : {SeriesKind::dots, SeriesKind::line, SeriesKind::ci, SeriesKind::cb, SeriesKind::polyreg,
                 SeriesKind::polyregci}) {
    if (to_string(k) == name) return k;
  }
  throw DataError("unknown series: " + name);
}

Series make_series(SeriesKind kind, const GridEstimate& est) {
  return from_grid(kind, est.grid, est.estimate, nullptr, nullptr);
}

Series make_series(SeriesKind kind, const IntervalSeries& ci) {
  return from_grid(kind, ci.estimate.grid, ci.estimate.estimate, &ci.lower, &ci.upper);
}

Series make_series(SeriesKind kind, const BandResult& band) {
  return from_grid(kind, band.estimate.grid, band.estimate.estimate, &band.lower, &band.upper);
}

void validate(const StyleOptions& style) {
  if (style.colors.empty() || style.symbols.empty() || style.patterns.empty()) {
    throw ConfigError("style lists must not be empty");
  }
  for (const auto& s : style.symbols) {
    if (std::find(kSymbols.begin(), kSymbols.end(), s) == kSymbols.end()) throw ConfigError("unknown symbol: " + s);
  }
  for (const auto& p : style.patterns) {
    if (std::find(kPatterns.begin(), kPatterns.end(), p) == kPatterns.end()) {
      throw ConfigError("unknown line pattern: " + p);
    }
  }
}

const Series* PlotGroup::find(SeriesKind kind) const {
  for (const auto& s : series) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

PlotBundle assemble(std::vector<GroupResults> groups, const StyleOptions& style, std::string x_label,
                    std::string y_label, std::string title) {
  validate(style);
  PlotBundle bundle;
  bundle.x_label = std::move(x_label);
  bundle.y_label = std::move(y_label);
  bundle.title = std::move(title);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& in = groups[g];
    const double tol = 1e-12 * std::max(1.0, std::abs(in.support_upper - in.support_lower));
    for (const auto& s : in.series) {
      for (const auto& p : s.points) {
        if (p.x < in.support_lower - tol || p.x > in.support_upper + tol) {
          throw DataError("series " + to_string(s.kind) + " of group " + in.label + " leaves the support of x");
        }
        if (p.lower > p.upper) {
          throw DataError("series " + to_string(s.kind) + " of group " + in.label + " has lower > upper");
        }
      }
    }
    PlotGroup out;
    out.label = std::move(in.label);
    out.style = {style.colors[g % style.colors.size()], style.symbols[g % style.symbols.size()],
                 style.patterns[g % style.patterns.size()]};
    out.support_lower = in.support_lower;
    out.support_upper = in.support_upper;
    out.series = std::move(in.series);
    bundle.groups.push_back(std::move(out));
  }
  return bundle;
}

void write_savedata(const PlotBundle& bundle, const std::filesystem::path& path, bool overwrite) {
  std::ofstream out = open_for_write(path, overwrite);
  out << "group,series,x,y,y_lower,y_upper,bin,is_knot\n";
  for (const auto& g : bundle.groups) {
    for (const auto& s : g.series) {
      for (const auto& p : s.points) {
        out << csv::escape(g.label) << ',' << to_string(s.kind) << ',' << csv::format_double(p.x) << ','
            << csv::format_double(p.y) << ',' << csv::format_double(p.lower) << ','
            << csv::format_double(p.upper) << ',' << (p.bin >= 0 ? std::to_string(p.bin) : "") << ','
            << (p.is_knot ? 1 : 0) << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

PlotBundle read_savedata(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::vector<std::string> expected = {"group", "series", "x", "y", "y_lower", "y_upper", "bin", "is_knot"};
  if (t.header != expected) throw DataError("not a savedata file: " + path.string());
  PlotBundle bundle;
  auto nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : t.rows) {
    if (bundle.groups.empty() || bundle.groups.back().label != row[0]) {
      bundle.groups.push_back({});
      bundle.groups.back().label = row[0];
    }
    auto& g = bundle.groups.back();
    const SeriesKind kind = series_kind_from_string(row[1]);
    if (g.series.empty() || g.series.back().kind != kind) g.series.push_back({kind, {}});
    SeriesPoint p;
    p.x = csv::parse_double(row[2]).value_or(nan);
    p.y = csv::parse_double(row[3]).value_or(nan);
    p.lower = csv::parse_double(row[4]).value_or(nan);
    p.upper = csv::parse_double(row[5]).value_or(nan);
    p.bin = row[6].empty() ? -1 : std::stoi(row[6]);
    p.is_knot = row[7] == "1";
    g.series.back().points.push_back(p);
  }
  for (auto& g : bundle.groups) {
    Range r;
    for (const auto& s : g.series) {
      for (const auto& p : s.points) r.add(p.x);
    }
    g.support_lower = r.lo;
    g.support_upper = r.hi;
  }
  return bundle;
}

void write_savegrid(const EvalGrid& grid, const std::vector<std::string>& covariate_names,
                    const std::string& x_name, const std::filesystem::path& path, bool overwrite) {
  std::ofstream out = open_for_write(path, overwrite);
  out << csv::escape(x_name);
  for (const auto& c : covariate_names) out << ',' << csv::escape(c);
  out << ",binsreg_isknot,binsreg_bin\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << csv::format_double(grid.points[i]);
    for (std::size_t c = 0; c < covariate_names.size(); ++c) out << ",0";
    out << ',' << (grid.is_knot[i] ? 1 : 0) << ',' << bin_label(grid, i) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::string svg_string(const PlotBundle& bundle, int width, int height) {
  if (bundle.groups.empty()) throw DataError("nothing to plot");
  Range xr, yr;
  for (const auto& g : bundle.groups) {
    for (const auto& s : g.series) {
      for (const auto& p : s.points) {
        xr.add(p.x);
        yr.add(p.y);
        yr.add(p.lower);
        yr.add(p.upper);
      }
    }
  }
  xr.pad();
  yr.pad();

  const double left = 70, right = 20, top = bundle.title.empty() ? 20 : 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (!bundle.title.empty()) {
    o << "<text x=\"" << num(width / 2.0) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << xml_escape(bundle.title) << "</text>\n";
  }
  o << "<rect class=\"frame\" x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  const double xs = tick_step(xr.hi - xr.lo, 6), ys = tick_step(yr.hi - yr.lo, 6);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi; t += xs) {
    o << "<line class=\"tick\" x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t))
      << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#444\"/>"
      << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(t) << "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi; t += ys) {
    o << "<line class=\"tick\" x1=\"" << num(left - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left)
      << "\" y2=\"" << num(py(t)) << "\" stroke=\"#444\"/>"
      << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(t) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12.0)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(bundle.x_label)
    << "</text>\n"
    << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 16 " << num(top + ph / 2) << ")\">" << xml_escape(bundle.y_label)
    << "</text>\n";

  // Layers: bands, interval segments, curves, markers.
  for (const auto& g : bundle.groups) {
    if (const Series* s = g.find(SeriesKind::cb); s && !s->points.empty()) {
      o << "<polygon class=\"band\" fill=\"" << g.style.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const auto& p : s->points) o << num(px(p.x)) << ',' << num(py(p.upper)) << ' ';
      for (auto it = s->points.rbegin(); it != s->points.rend(); ++it) {
        o << num(px(it->x)) << ',' << num(py(it->lower)) << (it + 1 == s->points.rend() ? "" : " ");
      }
      o << "\"/>\n";
    }
  }
  for (const auto& g : bundle.groups) {
    for (SeriesKind kind : {SeriesKind::ci, SeriesKind::polyregci}) {
      const Series* s = g.find(kind);
      if (!s) continue;
      for (const auto& p : s->points) {
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper)) continue;
        o << "<line class=\"" << to_string(kind) << "\" x1=\"" << num(px(p.x)) << "\" y1=\"" << num(py(p.lower))
          << "\" x2=\"" << num(px(p.x)) << "\" y2=\"" << num(py(p.upper)) << "\" stroke=\"" << g.style.color
          << "\" stroke-width=\"1.2\"/>\n";
      }
    }
  }
  for (const auto& g : bundle.groups) {
    for (SeriesKind kind : {SeriesKind::line, SeriesKind::polyreg}) {
      const Series* s = g.find(kind);
      if (!s || s->points.empty()) continue;
      o << "<polyline class=\"" << to_string(kind) << "\" fill=\"none\" stroke=\"" << g.style.color
        << "\" stroke-width=\"1.5\"" << dash_attr(kind == SeriesKind::line ? g.style.pattern : "dash")
        << " points=\"";
      for (std::size_t i = 0; i < s->points.size(); ++i) {
        o << (i ? " " : "") << num(px(s->points[i].x)) << ',' << num(py(s->points[i].y));
      }
      o << "\"/>\n";
    }
  }
  for (const auto& g : bundle.groups) {
    if (const Series* s = g.find(SeriesKind::dots)) {
      for (const auto& p : s->points) {
        if (!std::isfinite(p.y)) continue;
        o << marker(g.style.symbol, px(p.x), py(p.y), g.style.color, "marker") << '\n';
      }
    }
  }

  o << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < bundle.groups.size(); ++i) {
    const auto& g = bundle.groups[i];
    const double ly = top + 14 + 18.0 * static_cast<double>(i);
    const double lx = left + pw - 120;
    o << marker(g.style.symbol, lx, ly, g.style.color, "legend-swatch") << "<text x=\"" << num(lx + 10)
      << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(g.label) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

void render_svg(const PlotBundle& bundle, const std::filesystem::path& path, int width, int height) {
  const std::string text = svg_string(bundle, width, height);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace binsreg
