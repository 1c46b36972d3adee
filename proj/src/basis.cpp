#include "binsreg/basis.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "binsreg/errors.hpp"

namespace binsreg {

void BasisSpec::validate() const {
  if (p < 0 || s < 0 || v < 0) throw ConfigError("p, s and v must be non-negative");
  if (s > p) {
    throw ConfigError("smoothness s=" + std::to_string(s) + " exceeds degree p=" + std::to_string(p));
  }
  if (v > p) {
    throw ConfigError("derivative order v=" + std::to_string(v) + " exceeds degree p=" + std::to_string(p));
  }
}

int basis_dimension(int p, int s, int J) { return (p + 1) * J - (J - 1) * s; }

ConstrainedBasis::ConstrainedBasis(Partition partition, int p, int s)
    : partition_(std::move(partition)), p_(p), s_(s) {
  BasisSpec{p, s, 0}.validate();
  if (p_ > 0 && partition_.lower() == partition_.upper()) {
    throw DataError("degree p > 0 needs x with positive range");
  }
  const auto& knots = partition_.knots();
  const int J = partition_.bins();
  ext_.assign(static_cast<std::size_t>(p_ + 1), knots.front());
  for (int j = 1; j < J; ++j) ext_.insert(ext_.end(), static_cast<std::size_t>(p_ + 1 - s_), knots[static_cast<std::size_t>(j)]);
  ext_.insert(ext_.end(), static_cast<std::size_t>(p_ + 1), knots.back());
  dim_ = static_cast<int>(ext_.size()) - (p_ + 1);
  if (dim_ != basis_dimension(p_, s_, J)) throw std::logic_error("basis dimension mismatch");
}

int ConstrainedBasis::evaluate_local(double x0, int v, double* values) const {
  if (v < 0 || v > p_) {
    throw ConfigError("derivative order v=" + std::to_string(v) + " exceeds degree p=" + std::to_string(p_));
  }
  const int bin = partition_.bin_index(x0);  // range check
  if (p_ == 0) {
    values[0] = 1.0;
    return bin;
  }

  // Knot span i with ext[i] <= x0 < ext[i+1], clamped to the last nonempty span.
  const auto first = ext_.begin() + p_;
  const auto last = ext_.begin() + dim_ + 1;
  int span = static_cast<int>(std::upper_bound(first, last, x0) - ext_.begin()) - 1;
  span = std::min(span, dim_ - 1);

  constexpr int kMax = 16;
  if (p_ + 1 > kMax) throw ConfigError("degree too large");
  std::array<std::array<double, kMax>, kMax> ndu{};
  std::array<double, kMax> left{};
  std::array<double, kMax> right{};
  const auto& U = ext_;

  ndu[0][0] = 1.0;
  for (int j = 1; j <= p_; ++j) {
    left[j] = x0 - U[static_cast<std::size_t>(span + 1 - j)];
    right[j] = U[static_cast<std::size_t>(span + j)] - x0;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[j][r] == 0.0 ? 0.0 : ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  if (v == 0) {
    for (int j = 0; j <= p_; ++j) values[j] = ndu[j][p_];
    return span - p_;
  }

  std::array<std::array<double, kMax>, 2> a{};
  for (int r = 0; r <= p_; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    double d = 0.0;
    for (int k = 1; k <= v; ++k) {
      d = 0.0;
      const int rk = r - k;
      const int pk = p_ - k;
      if (r >= k) {
        const double den = ndu[pk + 1][rk];
        a[s2][0] = den == 0.0 ? 0.0 : a[s1][0] / den;
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p_ - r;
      for (int j = j1; j <= j2; ++j) {
        const double den = ndu[pk + 1][rk + j];
        a[s2][j] = den == 0.0 ? 0.0 : (a[s1][j] - a[s1][j - 1]) / den;
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        const double den = ndu[pk + 1][r];
        a[s2][k] = den == 0.0 ? 0.0 : -a[s1][k - 1] / den;
        d += a[s2][k] * ndu[r][pk];
      }
      std::swap(s1, s2);
    }
    values[r] = d;
  }
  double factor = p_;
  for (int k = 1; k < v; ++k) factor *= (p_ - k);
  for (int j = 0; j <= p_; ++j) values[j] *= factor;
  return span - p_;
}

Eigen::VectorXd ConstrainedBasis::evaluate(double x0, int v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  std::array<double, 16> local{};
  const int first = evaluate_local(x0, v, local.data());
  for (int j = 0; j <= p_; ++j) out(first + j) = local[static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd ConstrainedBasis::design(const Eigen::VectorXd& x, int v) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), dim_);
  std::array<double, 16> local{};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int first = evaluate_local(x(i), v, local.data());
    for (int j = 0; j <= p_; ++j) out(i, first + j) = local[static_cast<std::size_t>(j)];
  }
  return out;
}

ConstrainedBasis build_basis(const Partition& partition, int p, int s) {
  return ConstrainedBasis(partition, p, s);
}

}  // namespace binsreg
