#pragma once

#include <vector>

#include "thermap/maps.hpp"
#include "thermap/nnls.hpp"
#include "thermap/thermal.hpp"

namespace thermap {

struct InversionResult {
  PowerMap p_star;
  double residual_norm = 0;  // K
  std::vector<Eigen::Index> active_set;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// Rises in [-kNoiseClamp, 0) K are read as zero; anything lower is rejected.
inline constexpr double kNoiseClamp = 0.5;

/// min |R p - t| s.t. p >= 0, with t a temperature rise.
InversionResult nnls(const ResponseMatrix& R, const ThermalMap& t_rise, const InversionOptions& opts = {});

/// Power map from an absolute thermal map: subtracts the inlet temperature,
/// clamps sensor-noise negatives and delegates to nnls().
InversionResult reconstruct(const ResponseMatrix& R, const ThermalMap& t_celsius, double inlet,
                            const InversionOptions& opts = {});

/// |sum p* - measured_total| / measured_total.
double total_power_error(const InversionResult& result, double measured_total);

/// KKT certificate of a finished inversion, recomputed from R and t.
KktReport certify(const ResponseMatrix& R, const ThermalMap& t_rise, const InversionResult& result,
                  const InversionOptions& opts = {});

}  // namespace thermap
