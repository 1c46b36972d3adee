#include "binsreg/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "binsreg/csv.hpp"
#include "binsreg/errors.hpp"
#include "binsreg/rng.hpp"

namespace binsreg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

EvalGrid build_grid(const Partition& partition, int ngrid, bool include_knots) {
  if (ngrid < 1) throw ConfigError("grid size per bin must be at least 1");
  EvalGrid grid;
  const auto& t = partition.knots();
  for (int j = 0; j < partition.bins(); ++j) {
    const double a = t[static_cast<std::size_t>(j)];
    const double b = t[static_cast<std::size_t>(j) + 1];
    if (include_knots && j > 0) {
      grid.points.push_back(a);
      grid.bin.push_back(j);
      grid.is_knot.push_back(true);
    }
    for (int k = 1; k <= ngrid; ++k) {
      grid.points.push_back(a + k * (b - a) / (ngrid + 1));
      grid.bin.push_back(j);
      grid.is_knot.push_back(false);
    }
  }
  return grid;
}

EvalGrid grid_from_points(const Partition& partition, const std::vector<double>& points) {
  EvalGrid grid;
  const auto inner = partition.inner_knots();
  for (double x0 : points) {
    grid.bin.push_back(partition.bin_index(x0));
    grid.points.push_back(x0);
    grid.is_knot.push_back(std::binary_search(inner.begin(), inner.end(), x0));
  }
  return grid;
}

GridEstimate evaluate_on_grid(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v) {
  GridEstimate est;
  est.grid = grid;
  est.v = v;
  est.estimate.reserve(grid.size());
  est.se.reserve(grid.size());
  const double n = static_cast<double>(fit.n);
  for (double x0 : grid.points) {
    const VectorXd b = basis.evaluate(x0, v);
    est.estimate.push_back(fit.predict(b));
    est.se.push_back(std::sqrt(fit.omega(b) / n));
  }
  return est;
}

ExtremaDraws sup_process_draws(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                               const SimulationOptions& sim) {
  if (sim.draws < 1) throw ConfigError("number of simulation draws must be at least 1");
  if (grid.size() == 0) throw ConfigError("simulation grid is empty");
  if (fit.singular) throw DataError(*fit.singular);

  const Index m = static_cast<Index>(grid.size());
  const Index k = fit.loading.cols();
  MatrixXd rows(m, k);
  for (Index i = 0; i < m; ++i) {
    const VectorXd b = basis.evaluate(grid.points[static_cast<std::size_t>(i)], v);
    const double omega = fit.omega(b);
    if (omega > 0.0) {
      rows.row(i) = (fit.restrict(b).transpose() * fit.loading) / std::sqrt(omega);
    } else {
      rows.row(i).setZero();
    }
  }

  ExtremaDraws out;
  out.seed = sim.seed;
  const auto S = static_cast<std::size_t>(sim.draws);
  out.sup_abs.resize(S);
  out.sup.resize(S);
  out.inf.resize(S);

  auto work = [&](std::size_t begin, std::size_t end) {
    VectorXd normal(k);
    for (std::size_t d = begin; d < end; ++d) {
      NormalStream stream(sim.seed, d);
      for (Index j = 0; j < k; ++j) normal(j) = stream.next();
      const VectorXd z = rows * normal;
      out.sup.at(d) = z.maxCoeff();
      out.inf.at(d) = z.minCoeff();
      out.sup_abs.at(d) = z.cwiseAbs().maxCoeff();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(sim.threads, static_cast<unsigned>(S)));
  if (threads == 1) {
    work(0, S);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (S + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(S, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

double empirical_quantile(std::vector<double> draws, double level) {
  if (draws.empty()) throw ConfigError("no draws to take a quantile of");
  std::sort(draws.begin(), draws.end());
  const double pos = std::ceil(level * static_cast<double>(draws.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(draws.size()))) - 1;
  return draws[idx];
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile needs 0 < p < 1");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
}

double studentize(double diff, double se) {
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

double share_at_least(const std::vector<double>& draws, double stat) {
  const auto hits = std::count_if(draws.begin(), draws.end(), [&](double d) { return d >= stat; });
  return static_cast<double>(hits) / static_cast<double>(draws.size());
}

double share_at_most(const std::vector<double>& draws, double stat) {
  const auto hits = std::count_if(draws.begin(), draws.end(), [&](double d) { return d <= stat; });
  return static_cast<double>(hits) / static_cast<double>(draws.size());
}

std::string format_value(double a) {
  std::ostringstream os;
  os << a;
  return os.str();
}

}  // namespace

IntervalSeries confidence_intervals(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                                    double alpha) {
  check_alpha(alpha);
  IntervalSeries out;
  out.estimate = evaluate_on_grid(fit, basis, grid, v);
  out.level = 1.0 - alpha;
  out.multiplier = normal_quantile(1.0 - alpha / 2.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double half = out.multiplier * out.estimate.se[i];
    out.lower.push_back(out.estimate.estimate[i] - half);
    out.upper.push_back(out.estimate.estimate[i] + half);
  }
  return out;
}

BandResult confidence_band(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                           double alpha, const SimulationOptions& sim) {
  check_alpha(alpha);
  BandResult out;
  out.estimate = evaluate_on_grid(fit, basis, grid, v);
  const ExtremaDraws draws = sup_process_draws(fit, basis, grid, v, sim);
  out.level = 1.0 - alpha;
  out.draws = draws.draws();
  out.seed = sim.seed;
  out.critical_value = empirical_quantile(draws.sup_abs, 1.0 - alpha);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double half = out.critical_value * out.estimate.se[i];
    out.lower.push_back(out.estimate.estimate[i] - half);
    out.upper.push_back(out.estimate.estimate[i] + half);
  }
  return out;
}

std::string to_string(Side side) {
  switch (side) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::two: return "two-sided";
  }
  return "?";
}

TestResult spec_test(const GridEstimate& est, std::span<const double> parametric, const ExtremaDraws& draws) {
  if (parametric.size() != est.grid.size()) {
    throw DataError("parametric fit has " + std::to_string(parametric.size()) + " values for a grid of " +
                    std::to_string(est.grid.size()) + " points");
  }
  TestResult out;
  out.side = Side::two;
  out.draws = draws.draws();
  out.seed = draws.seed;
  out.null_hypothesis = "mu^(v) equals the parametric fit";
  double stat = 0.0;
  for (std::size_t i = 0; i < parametric.size(); ++i) {
    if (!std::isfinite(parametric[i])) throw DataError("parametric fit contains non-finite values");
    stat = std::max(stat, std::abs(studentize(est.estimate[i] - parametric[i], est.se[i])));
  }
  out.statistic = stat;
  out.p_value = share_at_least(draws.sup_abs, stat);
  return out;
}

TestResult spec_test(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v,
                     std::span<const double> parametric, const SimulationOptions& sim) {
  return spec_test(evaluate_on_grid(fit, basis, grid, v), parametric, sup_process_draws(fit, basis, grid, v, sim));
}

TestResult shape_test(const GridEstimate& est, double a, Side side, const ExtremaDraws& draws) {
  if (!std::isfinite(a)) throw ConfigError("shape test boundary must be finite");
  TestResult out;
  out.side = side;
  out.draws = draws.draws();
  out.seed = draws.seed;
  std::vector<double> t;
  t.reserve(est.grid.size());
  for (std::size_t i = 0; i < est.grid.size(); ++i) t.push_back(studentize(est.estimate[i] - a, est.se[i]));
  switch (side) {
    case Side::left:
      out.null_hypothesis = "sup mu^(v) <= " + format_value(a);
      out.statistic = *std::max_element(t.begin(), t.end());
      out.p_value = share_at_least(draws.sup, out.statistic);
      break;
    case Side::right:
      out.null_hypothesis = "inf mu^(v) >= " + format_value(a);
      out.statistic = *std::min_element(t.begin(), t.end());
      out.p_value = share_at_most(draws.inf, out.statistic);
      break;
    case Side::two: {
      out.null_hypothesis = "mu^(v) = " + format_value(a);
      double stat = 0.0;
      for (double ti : t) stat = std::max(stat, std::abs(ti));
      out.statistic = stat;
      out.p_value = share_at_least(draws.sup_abs, stat);
      break;
    }
  }
  return out;
}

TestResult shape_test(const FitResult& fit, const ConstrainedBasis& basis, const EvalGrid& grid, int v, double a,
                      Side side, const SimulationOptions& sim) {
  return shape_test(evaluate_on_grid(fit, basis, grid, v), a, side, sup_process_draws(fit, basis, grid, v, sim));
}

Eigen::VectorXd PolynomialFit::row(double x0, int v) const {
  VectorXd out = VectorXd::Zero(degree + 1);
  const double t = (x0 - center) / scale;
  for (int k = v; k <= degree; ++k) {
    double falling = 1.0;
    for (int j = 0; j < v; ++j) falling *= (k - j);
    out(k) = falling * std::pow(t, k - v) / std::pow(scale, v);
  }
  return out;
}

double PolynomialFit::standard_error(double x0, int v) const {
  return std::sqrt(fit.omega(row(x0, v)) / static_cast<double>(fit.n));
}

PolynomialFit fit_polynomial(const Dataset& data, int P, VceType vce) {
  if (P < 0) throw ConfigError("polynomial degree must be non-negative");
  const Dataset& d = data;
  const auto N = analyze_mass_points(d.x).distinct;
  if (!(P + 1 < N)) {
    throw DataError("global polynomial of degree " + std::to_string(P) + " needs P+1 < N (N=" +
                    std::to_string(N) + " distinct values)");
  }
  PolynomialFit out;
  out.degree = P;
  out.center = d.x.mean();
  const double sd = std::sqrt((d.x.array() - out.center).square().mean());
  out.scale = sd > 0.0 ? sd : 1.0;
  MatrixXd X(d.size(), P + 1);
  for (Index i = 0; i < d.size(); ++i) X.row(i) = out.row(d.x(i), 0).transpose();
  out.fit = fit_series(X, d, vce);
  return out;
}

TestResult spec_test_poly(const Dataset& data, int P, const FitResult& fit, const ConstrainedBasis& basis,
                          const EvalGrid& grid, int v, const ExtremaDraws& draws) {
  const PolynomialFit poly = fit_polynomial(data, P, VceType::robust);
  std::vector<double> values;
  values.reserve(grid.size());
  for (double x0 : grid.points) values.push_back(poly.value(x0, v));
  TestResult out = spec_test(evaluate_on_grid(fit, basis, grid, v), values, draws);
  out.null_hypothesis = "mu^(v) is a polynomial of degree " + std::to_string(P);
  return out;
}

std::vector<NamedTestResult> spec_test_file(const std::filesystem::path& path, const std::string& x_name,
                                            const FitResult& fit, const ConstrainedBasis& basis, int v,
                                            const SimulationOptions& sim) {
  const csv::Table table = csv::read(path);
  const int ix = table.column(x_name);
  if (ix < 0) {
    throw DataError("parametric fit file " + path.string() + " must contain the evaluation grid in a column named '" +
                    x_name + "' (same name as the independent variable)");
  }
  std::vector<int> fit_columns;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind(kFitColumnPrefix, 0) == 0) fit_columns.push_back(static_cast<int>(c));
  }
  if (fit_columns.empty()) {
    throw DataError("parametric fit file " + path.string() + " has no columns named " + kFitColumnPrefix + "*");
  }

  std::vector<double> points;
  std::vector<std::vector<double>> values(fit_columns.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto x0 = csv::parse_double(table.rows[r][static_cast<std::size_t>(ix)]);
    if (!x0) throw DataError("row " + std::to_string(r + 2) + " of " + path.string() + " has no grid value");
    points.push_back(*x0);
    for (std::size_t c = 0; c < fit_columns.size(); ++c) {
      const auto val = csv::parse_double(table.rows[r][static_cast<std::size_t>(fit_columns[c])]);
      if (!val) {
        throw DataError("row " + std::to_string(r + 2) + " of " + path.string() + " has no value in " +
                        table.header[static_cast<std::size_t>(fit_columns[c])]);
      }
      values[c].push_back(*val);
    }
  }
  if (points.empty()) throw DataError("parametric fit file " + path.string() + " has no rows");

  const EvalGrid grid = grid_from_points(basis.partition(), points);
  const GridEstimate est = evaluate_on_grid(fit, basis, grid, v);
  const ExtremaDraws draws = sup_process_draws(fit, basis, grid, v, sim);
  std::vector<NamedTestResult> out;
  for (std::size_t c = 0; c < fit_columns.size(); ++c) {
    TestResult res = spec_test(est, values[c], draws);
    const auto& name = table.header[static_cast<std::size_t>(fit_columns[c])];
    res.null_hypothesis = "mu^(v) equals " + name;
    out.push_back({name, std::move(res)});
  }
  return out;
}

}  // namespace binsreg
