#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "binsreg/dataset.hpp"

namespace binsreg {

enum class Placement { quantile, even, manual, unique_values };

std::string to_string(Placement placement);

/// Knots t_0 < t_1 < ... < t_J over the support of x. Bin j (0-based) is
/// [t_j, t_{j+1}) except the last bin, which is closed on the right.
class Partition {
 public:
  /// `requested_bins` records J before duplicate quantile knots were collapsed.
  Partition(std::vector<double> knots, Placement placement, int requested_bins);

  const std::vector<double>& knots() const { return knots_; }
  int bins() const { return static_cast<int>(knots_.size()) - 1; }
  int requested_bins() const { return requested_bins_; }
  bool collapsed() const { return requested_bins_ != bins(); }
  Placement placement() const { return placement_; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }
  std::vector<double> inner_knots() const;

  bool contains(double x0) const { return x0 >= lower() && x0 <= upper(); }

  /// 0-based bin of x0. Throws DataError outside [t_0, t_J].
  int bin_index(double x0) const;

  /// Observation counts per bin.
  std::vector<Eigen::Index> counts(const Eigen::VectorXd& x) const;

 private:
  std::vector<double> knots_;
  Placement placement_;
  int requested_bins_;
};

/// Inner knots are the order statistics x_(floor(n j / J)), j = 1..J-1.
/// Knots that coincide (heavy ties) are collapsed, which lowers J.
Partition quantile_partition(const Eigen::VectorXd& x, int J);

/// t_j = min + j (max - min) / J. Bins may be empty.
Partition even_partition(const Eigen::VectorXd& x, int J);

/// Inner knots must lie strictly inside (min x, max x) and be distinct.
Partition manual_partition(const Eigen::VectorXd& x, std::vector<double> inner_knots);

/// One bin per distinct value, knots at midpoints between consecutive values.
Partition unique_value_partition(const MassPointInfo& mass);

/// Quantile or even placement at J bins.
Partition make_partition(const Eigen::VectorXd& x, int J, Placement placement);

}  // namespace binsreg
