#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "binsreg/inference.hpp"

namespace binsreg {

enum class SeriesKind { dots, line, ci, cb, polyreg, polyregci };

std::string to_string(SeriesKind kind);
/// Throws DataError for an unknown name.
SeriesKind series_kind_from_string(const std::string& name);

/// Missing bounds are NaN; `bin` is 1-based, 0 for knot points and -1 when
/// the series has no bin structure (global polynomial).
struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  int bin = -1;
  bool is_knot = false;
};

struct Series {
  SeriesKind kind = SeriesKind::dots;
  std::vector<SeriesPoint> points;
};

Series make_series(SeriesKind kind, const GridEstimate& est);
Series make_series(SeriesKind kind, const IntervalSeries& ci);
Series make_series(SeriesKind kind, const BandResult& band);

struct GroupStyle {
  std::string color;
  std::string symbol;   // circle | square | triangle | diamond | cross
  std::string pattern;  // solid | dash | dot | dashdot
};

struct StyleOptions {
  std::vector<std::string> colors = {"#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#17818a"};
  std::vector<std::string> symbols = {"circle", "square", "triangle", "diamond", "cross"};
  std::vector<std::string> patterns = {"solid", "dash", "dot", "dashdot"};
};

/// Throws ConfigError for unknown symbols/patterns or empty lists.
void validate(const StyleOptions& style);

/// Per-group input to assemble(). Absent series are simply not requested.
struct GroupResults {
  std::string label;
  double support_lower = 0.0;
  double support_upper = 0.0;
  std::vector<Series> series;
};

struct PlotGroup {
  std::string label;
  GroupStyle style;
  double support_lower = 0.0;
  double support_upper = 0.0;
  std::vector<Series> series;

  const Series* find(SeriesKind kind) const;
};

struct PlotBundle {
  std::vector<PlotGroup> groups;
  std::string x_label;
  std::string y_label;
  std::string title;
};

/// Styles cycle over the groups in the order given, which callers keep in
/// group sort order. Throws DataError on a point outside its group's support
/// or a bound pair with lower > upper.
PlotBundle assemble(std::vector<GroupResults> groups, const StyleOptions& style, std::string x_label,
                    std::string y_label, std::string title = "");

/// CSV: group, series, x, y, y_lower, y_upper, bin, is_knot.
void write_savedata(const PlotBundle& bundle, const std::filesystem::path& path, bool overwrite);
/// Groups and series in file order; styles and labels are not stored.
PlotBundle read_savedata(const std::filesystem::path& path);

/// CSV: x_name, one zero column per covariate, binsreg_isknot, binsreg_bin.
void write_savegrid(const EvalGrid& grid, const std::vector<std::string>& covariate_names,
                    const std::string& x_name, const std::filesystem::path& path, bool overwrite);

std::string svg_string(const PlotBundle& bundle, int width = 720, int height = 480);
void render_svg(const PlotBundle& bundle, const std::filesystem::path& path, int width = 720,
                int height = 480);

}  // namespace binsreg
