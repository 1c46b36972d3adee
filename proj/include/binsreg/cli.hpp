#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "binsreg/binselect.hpp"
#include "binsreg/dataset.hpp"
#include "binsreg/estimator.hpp"
#include "binsreg/inference.hpp"
#include "binsreg/output.hpp"
#include "binsreg/partition.hpp"

namespace binsreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitGated = 4;

inline constexpr int kReportVersion = 1;

enum class Command { fit, test, select };

std::string to_string(Command command);

struct DegreePair {
  int p = 0;
  int s = 0;

  friend bool operator==(const DegreePair&, const DegreePair&) = default;
};

/// Parses "p,s". Throws ConfigError.
DegreePair parse_pair(const std::string& text, const std::string& option);

struct RunConfig {
  Command command = Command::fit;
  std::filesystem::path input;
  ColumnSpec columns;
  int deriv = 0;

  DegreePair dots{0, 0};
  std::optional<DegreePair> line;
  std::optional<DegreePair> ci;
  std::optional<DegreePair> cb;
  int dotsngrid = 1;
  int linengrid = 20;
  int cingrid = 1;
  int cbngrid = 20;
  std::optional<int> polyreg;
  int polyregngrid = 20;
  int polyregcingrid = 0;

  DegreePair testmodel{3, 3};
  std::optional<int> testmodelpoly;
  std::optional<std::filesystem::path> testmodelparfit;
  DegreePair testshape{3, 3};
  std::vector<double> testshapel;
  std::vector<double> testshaper;
  std::vector<double> testshape2;

  /// Degree pair used for selecting J in `test` and `select`; `fit` selects
  /// with `dots`.
  DegreePair bins{0, 0};
  std::optional<int> nbins;
  Placement binspos = Placement::quantile;
  std::vector<double> manual_knots;
  SelectMethod binsmethod = SelectMethod::dpi;
  std::optional<int> nbinsrot;
  bool samebinsby = false;

  int nsims = kDefaultDraws;
  int simsngrid = kDefaultSimsGrid;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;  // 0: hardware concurrency

  VceType vce = VceType::robust;
  double level = 95.0;
  bool nomassadj = false;
  std::int64_t N1 = kDefaultN1;
  std::int64_t N2 = kDefaultN2;

  std::optional<std::filesystem::path> savedata;
  std::optional<std::filesystem::path> savegrid;
  bool replace = false;
  bool noplot = false;
  std::filesystem::path svg = "binsreg.svg";
  int svg_width = 720;
  int svg_height = 480;
  std::string title;
  StyleOptions style;

  bool tests_requested() const;
  /// The pair J is selected for: dots in `fit`, bins otherwise.
  DegreePair selection_pair() const;
  /// Throws ConfigError on any invalid combination.
  void validate() const;
};

struct ParseResult {
  std::optional<RunConfig> config;
  int exit_code = kExitOk;  // meaningful when config is empty (help or error)
  std::string message;
};

/// argv[0] is the program name.
ParseResult parse_args(const std::vector<std::string>& args);

int run_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_test(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_select(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parse, dispatch, and map errors onto exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace binsreg::cli
