#include "binsreg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "binsreg/errors.hpp"

namespace binsreg {

std::string to_string(Placement placement) {
  switch (placement) {
    case Placement::quantile: return "qs";
    case Placement::even: return "es";
    case Placement::manual: return "manual";
    case Placement::unique_values: return "unique";
  }
  return "?";
}

Partition::Partition(std::vector<double> knots, Placement placement, int requested_bins)
    : knots_(std::move(knots)), placement_(placement), requested_bins_(requested_bins) {
  if (knots_.size() < 2) throw DataError("a partition needs at least two knots");
  // A single degenerate bin [v, v] is allowed for constant x.
  if (!(knots_.size() == 2 && knots_[0] == knots_[1])) {
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (!(knots_[i] > knots_[i - 1])) throw DataError("partition knots must be strictly increasing");
    }
  }
}

std::vector<double> Partition::inner_knots() const {
  return {knots_.begin() + 1, knots_.end() - 1};
}

int Partition::bin_index(double x0) const {
  if (!contains(x0)) {
    std::ostringstream msg;
    msg << "evaluation point " << x0 << " outside the support [" << lower() << ", " << upper() << "]";
    throw DataError(msg.str());
  }
  if (x0 >= upper()) return bins() - 1;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x0);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::vector<Eigen::Index> Partition::counts(const Eigen::VectorXd& x) const {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(bins()), 0);
  for (Eigen::Index i = 0; i < x.size(); ++i) ++out[static_cast<std::size_t>(bin_index(x(i)))];
  return out;
}

namespace {

void require_bins(int J) {
  if (J < 1) throw ConfigError("number of bins must be at least 1, got " + std::to_string(J));
}

}  // namespace

Partition quantile_partition(const Eigen::VectorXd& x, int J) {
  require_bins(J);
  if (x.size() < 1) throw DataError("cannot partition an empty sample");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<long long>(sorted.size());
  const double lo = sorted.front();
  const double hi = sorted.back();

  std::vector<double> knots{lo};
  for (int j = 1; j < J; ++j) {
    long long k = (n * j) / J;  // 1-based order statistic
    k = std::clamp(k, 1LL, n);
    const double t = sorted[static_cast<std::size_t>(k - 1)];
    if (t > knots.back() && t < hi) knots.push_back(t);
  }
  knots.push_back(hi);
  if (lo == hi) return Partition({lo, hi}, Placement::quantile, J);
  return Partition(std::move(knots), Placement::quantile, J);
}

Partition even_partition(const Eigen::VectorXd& x, int J) {
  require_bins(J);
  if (x.size() < 1) throw DataError("cannot partition an empty sample");
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (J > 1 && !(hi > lo)) throw DataError("evenly-spaced bins need x with positive range");
  std::vector<double> knots(static_cast<std::size_t>(J) + 1);
  for (int j = 0; j <= J; ++j) knots[static_cast<std::size_t>(j)] = lo + j * (hi - lo) / J;
  knots.back() = hi;
  return Partition(std::move(knots), Placement::even, J);
}

Partition manual_partition(const Eigen::VectorXd& x, std::vector<double> inner_knots) {
  if (x.size() < 1) throw DataError("cannot partition an empty sample");
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  std::sort(inner_knots.begin(), inner_knots.end());
  for (std::size_t i = 0; i < inner_knots.size(); ++i) {
    const double t = inner_knots[i];
    if (!(t > lo && t < hi)) {
      std::ostringstream msg;
      msg << "inner knot " << t << " must be within the range of x (" << lo << ", " << hi << ")";
      throw ConfigError(msg.str());
    }
    if (i > 0 && t == inner_knots[i - 1]) {
      std::ostringstream msg;
      msg << "duplicate inner knot " << t;
      throw ConfigError(msg.str());
    }
  }
  std::vector<double> knots{lo};
  knots.insert(knots.end(), inner_knots.begin(), inner_knots.end());
  knots.push_back(hi);
  const int J = static_cast<int>(knots.size()) - 1;
  return Partition(std::move(knots), Placement::manual, J);
}

Partition unique_value_partition(const MassPointInfo& mass) {
  const auto& u = mass.unique_values;
  if (u.empty()) throw DataError("no values to partition");
  std::vector<double> knots{u.front()};
  for (std::size_t i = 1; i < u.size(); ++i) knots.push_back(0.5 * (u[i - 1] + u[i]));
  knots.push_back(u.back());
  if (u.size() == 1) return Partition({u.front(), u.front()}, Placement::unique_values, 1);
  const int J = static_cast<int>(u.size());
  return Partition(std::move(knots), Placement::unique_values, J);
}

Partition make_partition(const Eigen::VectorXd& x, int J, Placement placement) {
  switch (placement) {
    case Placement::quantile: return quantile_partition(x, J);
    case Placement::even: return even_partition(x, J);
    default: throw ConfigError("make_partition supports quantile or even placement only");
  }
}

}  // namespace binsreg
