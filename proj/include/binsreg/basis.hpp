#pragma once

#include <Eigen/Dense>
#include <vector>

#include "binsreg/partition.hpp"

namespace binsreg {

/// Degree p within bins, s smoothness constraints across bins, derivative v.
struct BasisSpec {
  int p = 0;
  int s = 0;
  int v = 0;

  /// Throws ConfigError unless 0 <= s <= p and 0 <= v <= p.
  void validate() const;
};

/// K = (p+1)J - (J-1)s.
int basis_dimension(int p, int s, int J);

/// Piecewise degree-p polynomials on a partition with continuous derivatives
/// up to order s-1 at the inner knots, spanned by B-splines. Every inner knot
/// carries multiplicity p+1-s in the extended knot vector; the boundary knots
/// carry p+1.
///
/// At inner knots where the functions jump, evaluation returns the right
/// limit; at the upper boundary it returns the left limit. This mirrors the
/// bin membership rule, so p = s = 0 reproduces the bin indicators exactly.
class ConstrainedBasis {
 public:
  ConstrainedBasis(Partition partition, int p, int s);

  int degree() const { return p_; }
  int smoothness() const { return s_; }
  int dimension() const { return dim_; }
  const Partition& partition() const { return partition_; }
  const std::vector<double>& extended_knots() const { return ext_; }

  /// Writes the p+1 possibly-nonzero values of the v-th derivative into
  /// `values` and returns the index of the first one.
  int evaluate_local(double x0, int v, double* values) const;

  /// Dense length-K vector of v-th derivatives at x0.
  Eigen::VectorXd evaluate(double x0, int v = 0) const;

  /// Rows are evaluate(x(i), v)'.
  Eigen::MatrixXd design(const Eigen::VectorXd& x, int v = 0) const;

 private:
  Partition partition_;
  int p_;
  int s_;
  int dim_;
  std::vector<double> ext_;
};

ConstrainedBasis build_basis(const Partition& partition, int p, int s);

}  // namespace binsreg
