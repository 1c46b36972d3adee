#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "binsreg/basis.hpp"
#include "binsreg/dataset.hpp"

namespace binsreg {

enum class VceType { robust, cluster };

/// Least-squares fit of y on [B | W] with the sandwich pieces for the B block:
///   Q     = (1/n) sum_i b_i b_i'
///   Sigma = (1/n) sum_i b_i b_i' e_i^2                  (robust, HC0)
///   Sigma = (1/n) sum_g (sum_{i in g} b_i e_i)(...)'     (cluster)
/// Q and Sigma live on the retained B columns only.
struct FitResult {
  Eigen::Index n = 0;
  int series_dim = 0;           // columns of B, K
  Eigen::VectorXd beta;         // length K, zero for dropped columns
  Eigen::VectorXd gamma;        // length d, zero for dropped columns
  Eigen::VectorXd residuals;    // length n
  std::vector<int> retained;    // retained B columns
  std::vector<int> dropped_columns;  // indices into [B | W]
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Q_inv;
  Eigen::MatrixXd sandwich;     // Q^-1 Sigma Q^-1
  Eigen::MatrixXd loading;      // Q^-1 Sigma^{1/2}, for simulation
  VceType vce = VceType::robust;
  std::optional<std::string> singular;  // set when Q could not be inverted

  /// b' beta for a dense length-K row b.
  double predict(const Eigen::VectorXd& b) const { return b.dot(beta); }

  /// b' Q^-1 Sigma Q^-1 b. Throws DataError if b loads on a dropped column
  /// or Q is singular.
  double omega(const Eigen::VectorXd& b) const;

  /// b restricted to the retained columns.
  Eigen::VectorXd restrict(const Eigen::VectorXd& b) const;
};

/// Relative pivot tolerance used to detect collinear columns.
inline constexpr double kCollinearityTolerance = 1e-10;

/// Fits y on [B | W]. Collinear columns of B are detected first, then
/// covariate columns are checked against the retained B columns, so a
/// covariate that duplicates a series column is the one dropped.
FitResult fit_series(const Eigen::MatrixXd& B, const Dataset& data, VceType vce);

/// Binscatter fit on the constrained basis. Weighted datasets are expanded.
/// Throws DataError for an empty bin when s = 0.
FitResult fit(const Dataset& data, const ConstrainedBasis& basis, VceType vce);

/// v-th derivative of the fitted function at x0 (covariates held at 0).
double mu_hat(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v);

/// Omega(x0) = b^(v)(x0)' Q^-1 Sigma Q^-1 b^(v)(x0).
double omega_hat(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v);

/// sqrt(Omega(x0) / n).
double standard_error(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v);

}  // namespace binsreg
