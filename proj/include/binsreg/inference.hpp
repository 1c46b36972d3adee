#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "binsreg/basis.hpp"
#include "binsreg/estimator.hpp"

namespace binsreg {

/// Evaluation points inside the support, sorted. `bin` is the 0-based bin of
/// each point under the right-open membership rule.
struct EvalGrid {
  std::vector<double> points;
  std::vector<int> bin;
  std::vector<bool> is_knot;

  std::size_t size() const { return points.size(); }
};

/// `ngrid` evenly spaced interior points per bin, a + k (b - a) / (ngrid + 1)
/// for k = 1..ngrid; the inner knots are added and flagged when requested.
EvalGrid build_grid(const Partition& partition, int ngrid, bool include_knots);

/// Grid from arbitrary points (e.g. read from a file). Throws DataError for
/// points outside the support.
EvalGrid grid_from_points(const Partition& partition, const std::vector<double>& points);

inline constexpr int kDefaultDraws = 500;
inline constexpr int kDefaultSimsGrid = 20;
inline constexpr std::uint64_t kDefaultSeed = 20190814;

struct SimulationOptions {
  int draws = kDefaultDraws;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
};

/// Point estimates and standard errors sqrt(Omega/n) of mu^(v) on a grid.
struct GridEstimate {
  EvalGrid grid;
  int v = 0;
  std::vector<double> estimate;
  std::vector<double> se;
};

GridEstimate evaluate_on_grid(const FitResult& fit, const ConstrainedBasis& basis,
                              const EvalGrid& grid, int v);

/// Per-draw extrema of Z(x) = b^(v)(x)' Q^-1 Sigma^{1/2} N_K / sqrt(Omega(x))
/// over the grid. Z has unit variance at every point.
struct ExtremaDraws {
  std::vector<double> sup_abs;
  std::vector<double> sup;
  std::vector<double> inf;
  std::uint64_t seed = 0;

  int draws() const { return static_cast<int>(sup_abs.size()); }
};

ExtremaDraws sup_process_draws(const FitResult& fit, const ConstrainedBasis& basis,
                               const EvalGrid& grid, int v, const SimulationOptions& sim);

/// Smallest c with at least (1 - alpha) of the draws <= c.
double empirical_quantile(std::vector<double> draws, double level);

/// Phi^-1(p).
double normal_quantile(double p);

struct IntervalSeries {
  GridEstimate estimate;
  std::vector<double> lower;
  std::vector<double> upper;
  double multiplier = 0.0;
  double level = 0.95;
};

/// mu^(v)(x) +- Phi^-1(1 - alpha/2) sqrt(Omega(x)/n).
IntervalSeries confidence_intervals(const FitResult& fit, const ConstrainedBasis& basis,
                                    const EvalGrid& grid, int v, double alpha);

struct BandResult {
  GridEstimate estimate;
  std::vector<double> lower;
  std::vector<double> upper;
  double critical_value = 0.0;
  double level = 0.95;
  int draws = 0;
  std::uint64_t seed = 0;
};

/// mu^(v)(x) +- c sqrt(Omega(x)/n), c the simulated (1 - alpha) quantile of
/// sup |Z|.
BandResult confidence_band(const FitResult& fit, const ConstrainedBasis& basis,
                           const EvalGrid& grid, int v, double alpha, const SimulationOptions& sim);

enum class Side { left, right, two };

std::string to_string(Side side);

struct TestResult {
  std::string null_hypothesis;
  double statistic = 0.0;
  double p_value = 1.0;
  Side side = Side::two;
  int draws = 0;
  std::uint64_t seed = 0;
};

/// sup |mu_hat^(v) - m^(v)| / se against the sup |Z| draws.
TestResult spec_test(const GridEstimate& est, std::span<const double> parametric, const ExtremaDraws& draws);
TestResult spec_test(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                     std::span<const double> parametric, const SimulationOptions& sim);

/// left:  H0 sup mu^(v) <= a, statistic sup t, p-value from sup Z draws.
/// right: H0 inf mu^(v) >= a, statistic inf t, p-value from inf Z draws.
/// two:   H0 mu^(v) == a,     statistic sup |t|.
TestResult shape_test(const GridEstimate& est, double a, Side side, const ExtremaDraws& draws);
TestResult shape_test(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                      double a, Side side, const SimulationOptions& sim);

/// Global polynomial of degree P (plus covariates), fitted on the centered and
/// scaled regressor for conditioning.
struct PolynomialFit {
  int degree = 0;
  double center = 0.0;
  double scale = 1.0;
  FitResult fit;

  Eigen::VectorXd row(double x0, int v) const;
  double value(double x0, int v) const { return fit.predict(row(x0, v)); }
  double standard_error(double x0, int v) const;
};

/// Throws DataError unless P + 1 < N (distinct x values).
PolynomialFit fit_polynomial(const Dataset& data, int P, VceType vce);

TestResult spec_test_poly(const Dataset& data, int P, const FitResult& fit, const ConstrainedBasis& basis,
                          const EvalGrid& grid, int v, const ExtremaDraws& draws);

struct NamedTestResult {
  std::string column;
  TestResult result;
};

inline constexpr const char* kFitColumnPrefix = "binsreg_fit";

/// Tests every `binsreg_fit*` column of the file against the binscatter fit,
/// on the grid stored in the column named `x_name`. Other columns are ignored.
std::vector<NamedTestResult> spec_test_file(const std::filesystem::path& path, const std::string& x_name,
                                            const FitResult& fit, const ConstrainedBasis& basis, int v,
                                            const SimulationOptions& sim);

}  // namespace binsreg
