#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace binsreg {

/// Maps CSV column names onto the roles used by the estimators.
struct ColumnSpec {
  std::string y;
  std::string x;
  std::vector<std::string> covariates;
  std::optional<std::string> cluster;
  std::optional<std::string> fweight;
  std::optional<std::string> by;
};

/// Outcome, regressor of interest, covariates and the optional cluster /
/// frequency-weight / group columns. All columns have `size()` rows.
struct Dataset {
  std::string y_name = "y";
  std::string x_name = "x";
  std::vector<std::string> covariate_names;

  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd w;                 // size() x covariate count, possibly 0 columns
  std::vector<std::int64_t> cluster; // empty when unclustered
  std::vector<std::int64_t> fweight; // empty when unweighted
  std::vector<std::string> by;       // empty when no by-groups

  Eigen::Index size() const { return x.size(); }
  Eigen::Index covariate_count() const { return w.cols(); }
  bool clustered() const { return !cluster.empty(); }
  bool weighted() const { return !fweight.empty(); }

  /// Throws DataError when the column lengths or weights are inconsistent.
  void validate() const;
};

struct LoadResult {
  Dataset data;
  std::size_t dropped_rows = 0;
};

/// Reads a CSV file. Rows with a missing or non-finite value in any mapped
/// numeric column (or an empty cluster/by/weight cell) are dropped.
LoadResult load_csv(const std::filesystem::path& path, const ColumnSpec& columns);

struct MassPointInfo {
  Eigen::Index distinct = 0;  // N
  std::vector<double> unique_values;
  std::vector<std::int64_t> multiplicity;
};

/// Distinct values use exact floating-point equality.
MassPointInfo analyze_mass_points(const Eigen::VectorXd& x);

struct EffectiveSample {
  std::int64_t n = 0;  // frequency-weighted row count
  std::int64_t N = 0;  // distinct x values
  std::int64_t G = 0;  // clusters, n when unclustered
  std::int64_t n_eff = 0;
};

/// n_eff = min{n, N, G}. With `mass_adjust` off, N is set to n.
EffectiveSample effective_sample(const Dataset& data, bool mass_adjust = true);

inline constexpr std::int64_t kDefaultN1 = 30;
inline constexpr std::int64_t kDefaultN2 = 20;

/// Passes iff n_eff > N1 + (p+1)J - (J-1)s.
bool df_check_nonparametric(std::int64_t n_eff, int p, int s, std::int64_t J,
                            std::int64_t N1 = kDefaultN1);

/// Passes iff n_eff > N2 + p + 1.
bool df_check_rot(std::int64_t n_eff, int p, std::int64_t N2 = kDefaultN2);

/// Replicates each row fweight times and clears the weight column.
Dataset expand_frequency_weights(const Dataset& data);

/// Rows in the given order.
Dataset subset(const Dataset& data, const std::vector<Eigen::Index>& rows);

struct Group {
  std::string label;
  std::vector<Eigen::Index> rows;
};

/// Groups by the `by` column. Labels sort numerically when every label parses
/// as a number, lexicographically otherwise. Without a by column, one group
/// labelled "all" holds every row.
std::vector<Group> split_groups(const Dataset& data);

}  // namespace binsreg
