#include "binsreg/binselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "binsreg/basis.hpp"
#include "binsreg/errors.hpp"
#include "binsreg/inference.hpp"

namespace binsreg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kPointsPerBin = 101;
constexpr int kDensityPoints = 1001;
constexpr double kDensityTrim = 1.0 / 20.0;
constexpr int kMinRotPilotBins = 10;

int clamp_to_int(double value) {
  if (!(value < 1e9)) return 1'000'000'000;
  return static_cast<int>(value);
}

// Quadrature nodes: kPointsPerBin midpoints in every bin of the partition.
struct FineGrid {
  std::vector<double> x;
  std::vector<double> width;  // bin width / kPointsPerBin
  std::vector<int> bin;
};

FineGrid fine_grid(const Partition& partition) {
  FineGrid g;
  const auto& t = partition.knots();
  for (int j = 0; j < partition.bins(); ++j) {
    const double a = t[static_cast<std::size_t>(j)];
    const double h = (t[static_cast<std::size_t>(j) + 1] - a) / kPointsPerBin;
    for (int k = 0; k < kPointsPerBin; ++k) {
      g.x.push_back(a + (k + 0.5) * h);
      g.width.push_back(h);
      g.bin.push_back(j);
    }
  }
  return g;
}

// Weighted L2 projection of `target` onto the basis, returning the integrated
// squared error of the v-th derivative.
double projection_bias(const ConstrainedBasis& basis, const FineGrid& grid, const std::vector<double>& weight,
                       const std::vector<double>& target, const std::vector<double>& target_deriv, int v) {
  const Index K = basis.dimension();
  MatrixXd gram = MatrixXd::Zero(K, K);
  VectorXd rhs = VectorXd::Zero(K);
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    if (weight[i] <= 0.0) continue;
    const VectorXd b = basis.evaluate(grid.x[i], 0);
    gram.noalias() += weight[i] * b * b.transpose();
    rhs.noalias() += weight[i] * target[i] * b;
  }
  const VectorXd coef = gram.completeOrthogonalDecomposition().solve(rhs);
  double bias2 = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    if (weight[i] <= 0.0) continue;
    const double diff = target_deriv[i] - basis.evaluate(grid.x[i], v).dot(coef);
    bias2 += weight[i] * diff * diff;
  }
  return bias2;
}

// `sample_size` is the size the variance estimate refers to; V comes out free
// of it, and the effective sample size enters only through the J formula.
// Bias below rounding level of y (exact polynomial fits) counts as zero.
double clean_bias(double bias2, const Dataset& data) {
  const double scale = std::max(1.0, data.y.squaredNorm() / static_cast<double>(data.size()));
  return bias2 <= 1e-24 * scale ? 0.0 : bias2;
}

ImseConstants back_out(double bias2, double variance, int bins, double sample_size, const SelectOptions& o) {
  ImseConstants c;
  c.p = o.p;
  c.s = o.s;
  c.v = o.v;
  c.placement = o.placement;
  c.bias = bias2 * std::pow(static_cast<double>(bins), 2.0 * (o.p + 1 - o.v));
  c.variance = sample_size * variance / std::pow(static_cast<double>(bins), 1.0 + 2.0 * o.v);
  return c;
}

void validate(const SelectOptions& o) {
  BasisSpec{o.p, o.s, o.v}.validate();
  if (o.placement != Placement::quantile && o.placement != Placement::even) {
    throw ConfigError("bin selection needs quantile-spaced or evenly-spaced placement");
  }
}

}  // namespace

std::string to_string(SelectMethod method) { return method == SelectMethod::dpi ? "dpi" : "rot"; }

double j_imse_raw(const ImseConstants& c, double n_eff) {
  const double rate = 1.0 / (2.0 * c.p + 3.0);
  if (c.bias <= 0.0) return 0.0;
  if (c.variance <= 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = 2.0 * (c.p - c.v + 1) * c.bias / ((1.0 + 2.0 * c.v) * c.variance);
  return std::pow(ratio, rate) * std::pow(n_eff, rate);
}

int j_from_constants(const ImseConstants& c, double n_eff) {
  return std::max(1, clamp_to_int(std::ceil(j_imse_raw(c, n_eff))));
}

int preliminary_j(std::optional<int> J_rot, int p, int v, double n_eff) {
  const double rule = std::pow(2.0 * (p - v + 1) * n_eff / (1.0 + 2.0 * v), 1.0 / (2.0 * p + 3.0));
  const double best = std::max(rule, static_cast<double>(J_rot.value_or(0)));
  return std::max(1, clamp_to_int(std::ceil(best)));
}

SelectorOutcome rot_select(const Dataset& input, const SelectOptions& o) {
  validate(o);
  const Dataset data = expand_frequency_weights(input);
  const EffectiveSample es = effective_sample(data, o.mass_adjust);
  const auto n_eff = static_cast<double>(es.n_eff);
  if (!df_check_rot(es.n_eff, o.p, o.N2)) throw DataError("too few distinct values of x for bin selection");

  const PolynomialFit pilot = fit_polynomial(data, o.p + 2, VceType::robust);
  const double sigma2 = pilot.fit.residuals.squaredNorm() / static_cast<double>(data.size());

  const double lo = data.x.minCoeff();
  const double hi = data.x.maxCoeff();
  const double mean = data.x.mean();
  const double sd = std::sqrt((data.x.array() - mean).square().mean());
  if (!(sd > 0.0) || !(hi > lo)) throw DataError("x has no variation");

  auto gauss = [&](double z) { return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi)); };
  const double peak = gauss((std::clamp(mean, lo, hi) - mean) / sd);
  const double floor = kDensityTrim * peak;
  auto density_raw = [&](double x0) { return std::max(gauss((x0 - mean) / sd), floor); };
  // Trapezoid normalization on the support.
  double mass = 0.0;
  const double step = (hi - lo) / (kDensityPoints - 1);
  for (int k = 0; k < kDensityPoints; ++k) {
    const double wk = (k == 0 || k == kDensityPoints - 1) ? 0.5 : 1.0;
    mass += wk * density_raw(lo + k * step) * step;
  }

  const int cap = static_cast<int>(std::min<std::int64_t>(es.N, analyze_mass_points(data.x).distinct));
  int J_pre = std::max(kMinRotPilotBins, clamp_to_int(std::ceil(std::pow(n_eff, 1.0 / (2.0 * o.p + 3.0)))));
  J_pre = std::max(1, std::min(J_pre, cap));
  const Partition partition = make_partition(data.x, J_pre, o.placement);
  const ConstrainedBasis basis(partition, o.p, o.s);
  const FineGrid grid = fine_grid(partition);

  std::vector<double> weight, target, target_deriv;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    weight.push_back(density_raw(grid.x[i]) / mass * grid.width[i]);
    target.push_back(pilot.value(grid.x[i], 0));
    target_deriv.push_back(pilot.value(grid.x[i], o.v));
  }
  const double bias2 = clean_bias(projection_bias(basis, grid, weight, target, target_deriv, o.v), data);

  const Index K = basis.dimension();
  MatrixXd gram = MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const VectorXd b = basis.evaluate(grid.x[i], 0);
    gram.noalias() += weight[i] * b * b.transpose();
  }
  const auto ldlt = gram.ldlt();
  double quad = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const VectorXd b = basis.evaluate(grid.x[i], o.v);
    quad += weight[i] * b.dot(ldlt.solve(b));
  }
  const double variance = sigma2 / n_eff * quad;

  SelectorOutcome out;
  out.pilot_bins = partition.bins();
  out.constants = back_out(bias2, variance, partition.bins(), n_eff, o);
  out.raw = j_imse_raw(out.constants, n_eff);
  out.J = j_from_constants(out.constants, n_eff);
  return out;
}

SelectorOutcome dpi_select(const Dataset& input, const SelectOptions& o, int J_pre) {
  validate(o);
  const Dataset data = expand_frequency_weights(input);
  const EffectiveSample es = effective_sample(data, o.mass_adjust);
  const auto n_eff = static_cast<double>(es.n_eff);
  const auto n = static_cast<double>(data.size());

  const Partition partition = make_partition(data.x, J_pre, o.placement);
  const ConstrainedBasis pilot_basis(partition, o.p + 1, o.s + 1);
  const ConstrainedBasis basis(partition, o.p, o.s);

  auto checked_fit = [&](const ConstrainedBasis& b, const char* what) {
    FitResult f = fit(data, b, o.vce);
    for (int col : f.dropped_columns) {
      if (col < b.dimension()) throw DataError(std::string(what) + " fit is rank deficient");
    }
    if (f.singular) throw DataError(std::string(what) + " fit: " + *f.singular);
    return f;
  };
  const FitResult pilot = checked_fit(pilot_basis, "preliminary (p+1, s+1)");
  const FitResult target = checked_fit(basis, "preliminary (p, s)");

  double omega_sum = 0.0;
  for (Index i = 0; i < data.size(); ++i) omega_sum += target.omega(basis.evaluate(data.x(i), o.v));
  const double variance = omega_sum / n / n;

  const FineGrid grid = fine_grid(partition);
  const auto counts = partition.counts(data.x);
  std::vector<double> weight, fitted, fitted_deriv;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    weight.push_back(static_cast<double>(counts[static_cast<std::size_t>(grid.bin[i])]) / n / kPointsPerBin);
    fitted.push_back(mu_hat(pilot, pilot_basis, grid.x[i], 0));
    fitted_deriv.push_back(mu_hat(pilot, pilot_basis, grid.x[i], o.v));
  }
  const double bias2 = clean_bias(projection_bias(basis, grid, weight, fitted, fitted_deriv, o.v), data);

  SelectorOutcome out;
  out.pilot_bins = partition.bins();
  out.constants = back_out(bias2, variance, partition.bins(), n, o);
  out.raw = j_imse_raw(out.constants, n_eff);
  out.J = j_from_constants(out.constants, n_eff);
  return out;
}

int BinSelectResult::selected() const {
  if (!fallback && method == SelectMethod::dpi && J_dpi) return *J_dpi;
  return J_rot_regul;
}

const ImseConstants& BinSelectResult::imse() const {
  if (!fallback && method == SelectMethod::dpi && dpi_constants) return *dpi_constants;
  return rot_constants;
}

BinSelectResult select_bins(const Dataset& input, const SelectOptions& o) {
  validate(o);
  const Dataset data = expand_frequency_weights(input);
  BinSelectResult out;
  out.method = o.method;
  out.sample = effective_sample(data, o.mass_adjust);
  out.n_eff_used = out.sample.n_eff;
  const auto n_eff = static_cast<double>(out.sample.n_eff);
  const auto distinct = static_cast<int>(analyze_mass_points(data.x).distinct);

  if (!df_check_rot(out.sample.n_eff, o.p, o.N2)) {
    out.fallback = true;
    out.J_rot_poly = out.J_rot_regul = out.J_rot_uknot = distinct;
    out.warnings.push_back("too few distinct values of x (effective sample " + std::to_string(out.sample.n_eff) +
                           " <= " + std::to_string(o.N2 + o.p + 1) + "); using one bin per distinct value, J = " +
                           std::to_string(distinct));
    return out;
  }

  const SelectorOutcome rot = rot_select(data, o);
  out.J_rot_poly = std::min(rot.J, distinct);
  out.J_rot_raw = rot.raw;
  out.rot_constants = rot.constants;
  out.J_rot_regul = o.nbinsrot ? *o.nbinsrot : preliminary_j(rot.J, o.p, o.v, n_eff);
  if (out.J_rot_regul < 1) throw ConfigError("nbinsrot must be at least 1");
  out.J_rot_regul = std::min(out.J_rot_regul, distinct);
  out.J_rot_uknot = make_partition(data.x, out.J_rot_regul, o.placement).bins();

  if (o.method == SelectMethod::dpi) {
    if (!df_check_nonparametric(out.sample.n_eff, o.p, o.s, out.J_rot_regul, o.N1)) {
      out.warnings.push_back("degrees of freedom check failed at the preliminary J = " +
                             std::to_string(out.J_rot_regul) + "; DPI skipped, using ROT");
    } else {
      try {
        const SelectorOutcome dpi = dpi_select(data, o, out.J_rot_regul);
        out.J_dpi = std::min(dpi.J, distinct);
        out.J_dpi_raw = dpi.raw;
        out.dpi_constants = dpi.constants;
        out.J_dpi_uknot = make_partition(data.x, *out.J_dpi, o.placement).bins();
      } catch (const DataError& e) {
        out.warnings.push_back(std::string("DPI selection failed (") + e.what() + "); using ROT");
      }
    }
  }
  if (out.J_rot_uknot < out.J_rot_regul) {
    out.warnings.push_back("duplicate quantile knots at J = " + std::to_string(out.J_rot_regul) +
                           "; unique-knot ROT J = " + std::to_string(out.J_rot_uknot));
  }
  if (out.J_dpi && *out.J_dpi_uknot < *out.J_dpi) {
    out.warnings.push_back("duplicate quantile knots at J = " + std::to_string(*out.J_dpi) +
                           "; unique-knot DPI J = " + std::to_string(*out.J_dpi_uknot));
  }
  return out;
}

}  // namespace binsreg
