#include "binsreg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "binsreg/errors.hpp"

namespace binsreg {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> pivot_rank(const MatrixXd& X, std::vector<int>* dropped) {
  std::vector<int> keep;
  if (X.cols() == 0) return keep;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X.rows(), X.cols());
  qr.setThreshold(kCollinearityTolerance);
  qr.compute(X);
  const Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  for (Index k = 0; k < X.cols(); ++k) {
    (k < rank ? keep : *dropped).push_back(perm(k));
  }
  std::sort(keep.begin(), keep.end());
  std::sort(dropped->begin(), dropped->end());
  return keep;
}

MatrixXd columns(const MatrixXd& X, const std::vector<int>& idx) {
  MatrixXd out(X.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = X.col(idx[k]);
  return out;
}

// Clusters numbered by first appearance, so singleton clusters reproduce the
// row order of the robust computation.
std::vector<Index> cluster_index(const std::vector<std::int64_t>& ids, Index* groups) {
  std::unordered_map<std::int64_t, Index> seen;
  std::vector<Index> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i] = seen.try_emplace(ids[i], static_cast<Index>(seen.size())).first->second;
  }
  *groups = static_cast<Index>(seen.size());
  return out;
}

}  // namespace

Eigen::VectorXd FitResult::restrict(const Eigen::VectorXd& b) const {
  VectorXd out(static_cast<Index>(retained.size()));
  for (std::size_t k = 0; k < retained.size(); ++k) out(static_cast<Index>(k)) = b(retained[k]);
  return out;
}

double FitResult::omega(const Eigen::VectorXd& b) const {
  if (singular) throw DataError(*singular);
  if (static_cast<int>(retained.size()) != series_dim) {
    std::vector<bool> kept(static_cast<std::size_t>(series_dim), false);
    for (int j : retained) kept[static_cast<std::size_t>(j)] = true;
    for (int j = 0; j < series_dim; ++j) {
      if (!kept[static_cast<std::size_t>(j)] && b(j) != 0.0) {
        throw DataError("variance undefined: basis column " + std::to_string(j) +
                        " was dropped as collinear (no data in its support)");
      }
    }
  }
  const VectorXd br = restrict(b);
  return std::max(0.0, br.dot(sandwich * br));
}

FitResult fit_series(const Eigen::MatrixXd& B, const Dataset& data, VceType vce) {
  if (data.weighted()) return fit_series(B, expand_frequency_weights(data), vce);
  const Index n = data.size();
  if (B.rows() != n) throw DataError("design rows do not match the sample size");
  if (vce == VceType::cluster && !data.clustered()) {
    throw ConfigError("cluster-robust variance requested without a cluster column");
  }
  const Index K = B.cols();
  const Index d = data.w.cols();

  FitResult out;
  out.n = n;
  out.series_dim = static_cast<int>(K);
  out.vce = vce;

  std::vector<int> dropped_b;
  out.retained = pivot_rank(B, &dropped_b);
  const MatrixXd Br = columns(B, out.retained);

  // Covariates: residualize on the retained series block, scale by the
  // original column norm, then rank-check what is left.
  std::vector<int> keep_w;
  std::vector<int> dropped_w;
  if (d > 0) {
    Eigen::HouseholderQR<MatrixXd> qr_b(Br);
    MatrixXd resid = data.w;
    if (Br.cols() > 0) resid -= Br * qr_b.solve(data.w);
    std::vector<int> candidates;
    for (Index j = 0; j < d; ++j) {
      const double norm = data.w.col(j).norm();
      const double rnorm = resid.col(j).norm();
      if (norm == 0.0 || rnorm <= kCollinearityTolerance * norm) {
        dropped_w.push_back(static_cast<int>(j));
      } else {
        resid.col(j) /= norm;
        candidates.push_back(static_cast<int>(j));
      }
    }
    std::vector<int> dropped_local;
    const std::vector<int> kept_local = pivot_rank(columns(resid, candidates), &dropped_local);
    for (int k : kept_local) keep_w.push_back(candidates[static_cast<std::size_t>(k)]);
    for (int k : dropped_local) dropped_w.push_back(candidates[static_cast<std::size_t>(k)]);
    std::sort(dropped_w.begin(), dropped_w.end());
  }
  for (int j : dropped_b) out.dropped_columns.push_back(j);
  for (int j : dropped_w) out.dropped_columns.push_back(static_cast<int>(K) + j);

  const Index kb = Br.cols();
  const Index kw = static_cast<Index>(keep_w.size());
  if (n < kb + kw) {
    throw DataError("sample size " + std::to_string(n) + " is smaller than the " +
                    std::to_string(kb + kw) + " retained regressors");
  }
  MatrixXd X(n, kb + kw);
  X.leftCols(kb) = Br;
  for (Index k = 0; k < kw; ++k) X.col(kb + k) = data.w.col(keep_w[static_cast<std::size_t>(k)]);

  VectorXd coef = VectorXd::Zero(kb + kw);
  if (X.cols() > 0) coef = X.colPivHouseholderQr().solve(data.y);
  out.beta = VectorXd::Zero(K);
  out.gamma = VectorXd::Zero(d);
  for (Index k = 0; k < kb; ++k) out.beta(out.retained[static_cast<std::size_t>(k)]) = coef(k);
  for (Index k = 0; k < kw; ++k) out.gamma(keep_w[static_cast<std::size_t>(k)]) = coef(kb + k);
  out.residuals = data.y - X * coef;

  const double inv_n = 1.0 / static_cast<double>(n);
  out.Q = (Br.transpose() * Br) * inv_n;
  if (vce == VceType::robust) {
    const MatrixXd scored = Br.array().colwise() * out.residuals.array();
    out.Sigma = (scored.transpose() * scored) * inv_n;
  } else {
    Index G = 0;
    const auto gid = cluster_index(data.cluster, &G);
    MatrixXd U = MatrixXd::Zero(G, kb);
    for (Index i = 0; i < n; ++i) U.row(gid[static_cast<std::size_t>(i)]) += Br.row(i) * out.residuals(i);
    out.Sigma = (U.transpose() * U) * inv_n;
  }

  Eigen::LLT<MatrixXd> llt(out.Q);
  if (kb == 0 || llt.info() != Eigen::Success) {
    out.singular = "Q matrix is singular; some bins have too few observations";
    return out;
  }
  out.Q_inv = llt.solve(MatrixXd::Identity(kb, kb));
  out.Q_inv = 0.5 * (out.Q_inv + out.Q_inv.transpose());
  out.sandwich = out.Q_inv * out.Sigma * out.Q_inv;
  out.sandwich = 0.5 * (out.sandwich + out.sandwich.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (out.Sigma + out.Sigma.transpose()));
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const MatrixXd sigma_half = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  out.loading = out.Q_inv * sigma_half;
  return out;
}

FitResult fit(const Dataset& data, const ConstrainedBasis& basis, VceType vce) {
  if (data.weighted()) return fit(expand_frequency_weights(data), basis, vce);
  const auto counts = basis.partition().counts(data.x);
  if (basis.smoothness() == 0) {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j] == 0) {
        const auto& t = basis.partition().knots();
        std::ostringstream msg;
        msg << "empty bin " << (j + 1) << " [" << t[j] << ", " << t[j + 1] << "]";
        throw DataError(msg.str());
      }
    }
  }
  return fit_series(basis.design(data.x), data, vce);
}

double mu_hat(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v) {
  return fit.predict(basis.evaluate(x0, v));
}

double omega_hat(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v) {
  return fit.omega(basis.evaluate(x0, v));
}

double standard_error(const FitResult& fit, const ConstrainedBasis& basis, double x0, int v) {
  return std::sqrt(omega_hat(fit, basis, x0, v) / static_cast<double>(fit.n));
}

}  // namespace binsreg
