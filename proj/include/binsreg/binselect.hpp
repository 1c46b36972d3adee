#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "binsreg/dataset.hpp"
#include "binsreg/estimator.hpp"
#include "binsreg/partition.hpp"

namespace binsreg {

enum class SelectMethod { dpi, rot };

std::string to_string(SelectMethod method);

/// Leading constants of IMSE(J) ~ B J^{-2(p+1-v)} + V J^{1+2v} / n_eff.
struct ImseConstants {
  double bias = 0.0;
  double variance = 0.0;
  int p = 0;
  int s = 0;
  int v = 0;
  Placement placement = Placement::quantile;
};

struct SelectOptions {
  int p = 0;
  int s = 0;
  int v = 0;
  Placement placement = Placement::quantile;
  SelectMethod method = SelectMethod::dpi;
  std::optional<int> nbinsrot;
  VceType vce = VceType::robust;
  bool mass_adjust = true;
  std::int64_t N1 = kDefaultN1;
  std::int64_t N2 = kDefaultN2;
};

/// (2(p-v+1) B / ((1+2v) V))^{1/(2p+3)} n_eff^{1/(2p+3)}, before the ceiling.
double j_imse_raw(const ImseConstants& c, double n_eff);

/// Ceiling of j_imse_raw, floored at 1.
int j_from_constants(const ImseConstants& c, double n_eff);

/// ceil(max{J_rot, (2(p-v+1) n_eff / (1+2v))^{1/(2p+3)}}).
int preliminary_j(std::optional<int> J_rot, int p, int v, double n_eff);

struct SelectorOutcome {
  int J = 1;
  double raw = 0.0;  // before the ceiling
  int pilot_bins = 0;
  ImseConstants constants;
};

/// Rule of thumb: degree p+2 global polynomial pilot, homoskedastic
/// variance, trimmed-from-below Gaussian reference density for x.
SelectorOutcome rot_select(const Dataset& data, const SelectOptions& options);

/// Direct plug-in at a preliminary J: bias from a (p+1, s+1) binscatter
/// pilot, variance from omega_hat of the (p, s) fit. Throws DataError when a
/// preliminary fit is rank deficient.
SelectorOutcome dpi_select(const Dataset& data, const SelectOptions& options, int J_pre);

struct BinSelectResult {
  int J_rot_poly = 0;
  int J_rot_regul = 0;
  int J_rot_uknot = 0;
  std::optional<int> J_dpi;
  std::optional<int> J_dpi_uknot;
  double J_rot_raw = 0.0;
  std::optional<double> J_dpi_raw;
  ImseConstants rot_constants;
  std::optional<ImseConstants> dpi_constants;
  SelectMethod method = SelectMethod::dpi;
  EffectiveSample sample;
  std::int64_t n_eff_used = 0;
  /// Too few distinct values for selection: J = N, one bin per value.
  bool fallback = false;
  std::vector<std::string> warnings;

  /// J used downstream: N in the fallback case, DPI when requested and
  /// available, ROT-REGUL otherwise.
  int selected() const;
  /// Constants behind selected().
  const ImseConstants& imse() const;
};

BinSelectResult select_bins(const Dataset& data, const SelectOptions& options);

}  // namespace binsreg
